#pragma once

#include <mcnoma/types.hpp>

#include <algorithm>
#include <cmath>

namespace mcnoma {

template <class Scalar>
struct WaterfillResult {
  Vector<Scalar> powers;
  Scalar water_level{0};
  Scalar objective{0};  // sum of W_n log2(1 + g p / eta)
  bool all_capped = false;
  int iterations = 0;
};

template <class Scalar>
Scalar waterfilling_objective(const Vector<Scalar>& powers, const Vector<Scalar>& gains,
                              const Vector<Scalar>& noises, const Vector<Scalar>& bandwidths) {
  Scalar total(0);
  for (Index n = 0; n < powers.size(); ++n)
    total += bandwidths[n] * log2_ratio(Scalar(1) + gains[n] * powers[n] / noises[n]);
  return total;
}

/// Single-user power allocation over parallel channels: maximize
/// sum W_n log2(1 + g_n p_n / eta_n) subject to sum p <= budget and
/// 0 <= p_n <= cap_n. Water level found by bisection, then snapped to the
/// exact level implied by the discovered saturation pattern.
template <class Scalar>
WaterfillResult<Scalar> capped_waterfilling(Scalar budget, const Vector<Scalar>& gains,
                                            const Vector<Scalar>& noises, const Vector<Scalar>& caps,
                                            const Vector<Scalar>& bandwidths) {
  const Index N = gains.size();
  if (noises.size() != N || caps.size() != N || bandwidths.size() != N)
    throw std::invalid_argument("capped_waterfilling: size mismatch");
  if (!(budget > Scalar(0))) throw std::invalid_argument("capped_waterfilling: budget must be positive");
  if (!(gains.array() > Scalar(0)).all()) throw std::invalid_argument("capped_waterfilling: gains must be positive");
  if (!(noises.array() > Scalar(0)).all()) throw std::invalid_argument("capped_waterfilling: noises must be positive");
  if (!(caps.array() >= Scalar(0)).all()) throw std::invalid_argument("capped_waterfilling: caps must be non-negative");
  if (!(bandwidths.array() > Scalar(0)).all())
    throw std::invalid_argument("capped_waterfilling: bandwidths must be positive");

  WaterfillResult<Scalar> result;
  result.powers = Vector<Scalar>::Zero(N);

  const Vector<Scalar> floors = noises.cwiseQuotient(gains);  // eta/g per channel

  const Scalar cap_sum = caps.sum();
  if (!(caps.array() > Scalar(0)).any()) {
    result.all_capped = true;
    return result;
  }
  if (std::isfinite(double(cap_sum)) && cap_sum <= budget) {
    // Budget cannot bind: every channel fills to its cap exactly.
    result.powers = caps;
    result.all_capped = true;
    Scalar level(0);
    for (Index n = 0; n < N; ++n) level = std::max(level, (floors[n] + caps[n]) / bandwidths[n]);
    result.water_level = level;
    result.objective = waterfilling_objective(result.powers, gains, noises, bandwidths);
    return result;
  }

  auto fill_at = [&](Scalar level) {
    Vector<Scalar> p(N);
    for (Index n = 0; n < N; ++n)
      p[n] = std::clamp(bandwidths[n] * level - floors[n], Scalar(0), caps[n]);
    return p;
  };
  auto spent_at = [&](Scalar level) { return fill_at(level).sum(); };

  Scalar lo(0);
  Scalar hi = (floors.cwiseQuotient(bandwidths)).maxCoeff() + budget / bandwidths.sum();
  int iterations = 0;
  while (spent_at(hi) < budget && iterations < 200) {
    hi *= Scalar(2);
    ++iterations;
  }
  while (double(hi - lo) > 1e-12 && iterations < 400) {
    const Scalar mid = (lo + hi) / Scalar(2);
    if (spent_at(mid) < budget)
      lo = mid;
    else
      hi = mid;
    ++iterations;
  }
  result.iterations = iterations;
  result.water_level = hi;
  result.powers = fill_at(hi);

  // Snap: with the active pattern fixed, the exact level satisfies the budget
  // with equality. Keep the snapped powers only if they improve the residual.
  Scalar active_bandwidth(0), active_floor(0), saturated(0);
  for (Index n = 0; n < N; ++n) {
    const Scalar p = result.powers[n];
    if (p > Scalar(0) && p < caps[n]) {
      active_bandwidth += bandwidths[n];
      active_floor += floors[n];
    } else if (p >= caps[n] && caps[n] > Scalar(0)) {
      saturated += caps[n];
    }
  }
  if (active_bandwidth > Scalar(0)) {
    const Scalar exact_level = (budget - saturated + active_floor) / active_bandwidth;
    Vector<Scalar> snapped = fill_at(exact_level);
    if (std::abs(double(snapped.sum() - budget)) <= std::abs(double(result.powers.sum() - budget))) {
      result.water_level = exact_level;
      result.powers = snapped;
    }
  }

  result.objective = waterfilling_objective(result.powers, gains, noises, bandwidths);
  return result;
}

/// Euclidean projection onto { 0 <= p <= caps, sum p <= budget }, by bisecting
/// the shift lambda in clamp(y - lambda). Used by the projected-gradient solver.
template <class Scalar>
Vector<Scalar> project_box_budget(const Vector<Scalar>& y, const Vector<Scalar>& caps, Scalar budget) {
  const Index N = y.size();
  if (caps.size() != N) throw std::invalid_argument("project_box_budget: size mismatch");

  auto clamped = [&](Scalar shift) {
    Vector<Scalar> p(N);
    for (Index n = 0; n < N; ++n) p[n] = std::clamp(y[n] - shift, Scalar(0), caps[n]);
    return p;
  };

  Vector<Scalar> p = clamped(Scalar(0));
  if (p.sum() <= budget) return p;

  Scalar lo(0), hi = y.maxCoeff();
  int iterations = 0;
  while (double(hi - lo) > 1e-12 * std::max(1.0, double(hi)) && iterations < 400) {
    const Scalar mid = (lo + hi) / Scalar(2);
    if (clamped(mid).sum() > budget)
      lo = mid;
    else
      hi = mid;
    ++iterations;
  }
  p = clamped(hi);

  // Snap on the discovered pattern: interior entries share the exact shift.
  Scalar interior_sum(0), saturated(0);
  Index interior = 0;
  for (Index n = 0; n < N; ++n) {
    if (p[n] > Scalar(0) && p[n] < caps[n]) {
      interior_sum += y[n];
      ++interior;
    } else if (p[n] >= caps[n] && caps[n] > Scalar(0)) {
      saturated += caps[n];
    }
  }
  if (interior > 0) {
    const Scalar exact_shift = (interior_sum + saturated - budget) / Scalar(interior);
    Vector<Scalar> snapped = clamped(exact_shift);
    if (std::abs(double(snapped.sum() - budget)) <= std::abs(double(p.sum() - budget))) p = snapped;
  }
  return p;
}

}  // namespace mcnoma
