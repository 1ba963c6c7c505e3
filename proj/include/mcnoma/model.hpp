#pragma once

#include <mcnoma/instance.hpp>

#include <algorithm>
#include <sstream>
#include <vector>

namespace mcnoma {

/// Users transmitting with strictly positive power on subcarrier n, ascending.
template <class Scalar>
std::vector<Index> active_set(const PowerAllocation<Scalar>& p, Index n) {
  if (n < 0 || n >= p.powers.cols()) throw std::invalid_argument("active_set: subcarrier out of range");
  std::vector<Index> users;
  for (Index k = 0; k < p.powers.rows(); ++k)
    if (p.powers(k, n) > Scalar(0)) users.push_back(k);
  return users;
}

/// Downlink SIC order on subcarrier n: noise-to-gain ratio non-increasing,
/// ties by ascending user index. Position 0 is decoded first and sees
/// interference from everyone after it.
template <class Scalar>
std::vector<Index> decoding_order_downlink(const Instance<Scalar>& inst, Index n,
                                           const std::vector<Index>& active) {
  std::vector<Index> order = active;
  std::vector<Scalar> ratio(inst.num_users, Scalar(0));
  for (Index k : order) {
    if (k < 0 || k >= inst.num_users) throw std::invalid_argument("decoding order: user out of range");
    if (!(inst.gains(k, n) > Scalar(0))) {
      std::ostringstream os;
      os << "decoding order undefined: active user " << k << " has zero gain on subcarrier " << n;
      throw std::invalid_argument(os.str());
    }
    ratio[k] = inst.noises(k, n) / inst.gains(k, n);
  }
  std::sort(order.begin(), order.end(), [&](Index a, Index b) {
    if (ratio[a] != ratio[b]) return ratio[a] > ratio[b];
    return a < b;
  });
  return order;
}

/// Uplink SIC order on subcarrier n: received power g*p non-increasing,
/// ties by ascending user index. Derived from the allocation itself.
template <class Scalar>
std::vector<Index> decoding_order_uplink(const Instance<Scalar>& inst, Index n,
                                         const PowerAllocation<Scalar>& p) {
  std::vector<Index> order = active_set(p, n);
  std::sort(order.begin(), order.end(), [&](Index a, Index b) {
    const Scalar ra = inst.gains(a, n) * p.powers(a, n);
    const Scalar rb = inst.gains(b, n) * p.powers(b, n);
    if (ra != rb) return ra > rb;
    return a < b;
  });
  return order;
}

/// Decoding lists for every subcarrier under the instance's direction.
template <class Scalar>
MultiplexSet multiplex_set(const Instance<Scalar>& inst, const PowerAllocation<Scalar>& p) {
  MultiplexSet ms;
  ms.order.resize(inst.num_subcarriers);
  for (Index n = 0; n < inst.num_subcarriers; ++n) {
    ms.order[n] = inst.direction == Direction::downlink
                      ? decoding_order_downlink(inst, n, active_set(p, n))
                      : decoding_order_uplink(inst, n, p);
  }
  return ms;
}

/// Achievable rates under successive interference cancellation. A user decoded
/// at position i is interfered only by users decoded after it; the last one
/// sees pure noise.
template <class Scalar>
RateVector<Scalar> rates(const Instance<Scalar>& inst, const PowerAllocation<Scalar>& p) {
  if (p.powers.rows() != inst.num_users || p.powers.cols() != inst.num_subcarriers)
    throw std::invalid_argument("rates: allocation shape mismatch");

  RateVector<Scalar> r;
  r.per_user_subcarrier = Matrix<Scalar>::Zero(inst.num_users, inst.num_subcarriers);

  for (Index n = 0; n < inst.num_subcarriers; ++n) {
    const std::vector<Index> order = inst.direction == Direction::downlink
                                         ? decoding_order_downlink(inst, n, active_set(p, n))
                                         : decoding_order_uplink(inst, n, p);
    const Index m = static_cast<Index>(order.size());
    const Scalar w = inst.bandwidths(n);
    for (Index i = 0; i < m; ++i) {
      const Index k = order[i];
      Scalar interference(0);
      if (inst.direction == Direction::downlink) {
        Scalar later_power(0);
        for (Index j = i + 1; j < m; ++j) later_power += p.powers(order[j], n);
        interference = inst.gains(k, n) * later_power;
      } else {
        for (Index j = i + 1; j < m; ++j)
          interference += inst.gains(order[j], n) * p.powers(order[j], n);
      }
      const Scalar sinr = inst.gains(k, n) * p.powers(k, n) / (interference + inst.noises(k, n));
      r.per_user_subcarrier(k, n) = w * log2_ratio(Scalar(1) + sinr);
    }
  }

  r.per_user = r.per_user_subcarrier.rowwise().sum();
  r.per_subcarrier = r.per_user_subcarrier.colwise().sum();
  return r;
}

enum class Constraint { total_power, subcarrier_cap, non_negativity, multiplexing };

inline std::string to_string(Constraint c) {
  switch (c) {
    case Constraint::total_power: return "total_power";
    case Constraint::subcarrier_cap: return "subcarrier_cap";
    case Constraint::non_negativity: return "non_negativity";
    case Constraint::multiplexing: return "multiplexing";
  }
  return "?";
}

struct ConstraintViolation {
  Constraint constraint;
  Index user = -1;        // -1 when not user-specific
  Index subcarrier = -1;  // -1 when not subcarrier-specific
  double amount = 0;      // magnitude of the violation
};

struct FeasibilityReport {
  bool feasible = true;
  std::vector<ConstraintViolation> violations;
};

/// Checks budgets and caps to absolute slack kFeasibilityTol; the per-subcarrier
/// multiplexing bound is exact (activity means p > 0).
template <class Scalar>
FeasibilityReport check_feasibility(const Instance<Scalar>& inst, const PowerAllocation<Scalar>& p) {
  if (p.powers.rows() != inst.num_users || p.powers.cols() != inst.num_subcarriers)
    throw std::invalid_argument("check_feasibility: allocation shape mismatch");

  FeasibilityReport report;
  auto flag = [&report](Constraint c, Index k, Index n, double amount) {
    report.feasible = false;
    report.violations.push_back({c, k, n, amount});
  };

  for (Index k = 0; k < inst.num_users; ++k) {
    for (Index n = 0; n < inst.num_subcarriers; ++n) {
      const double v = double(p.powers(k, n));
      if (v < -kFeasibilityTol) flag(Constraint::non_negativity, k, n, -v);
      const double excess = v - double(inst.per_subcarrier_caps(k, n));
      if (excess > kFeasibilityTol) flag(Constraint::subcarrier_cap, k, n, excess);
    }
    const double spent = double(p.powers.row(k).sum()) - double(inst.user_budgets(k));
    if (spent > kFeasibilityTol) flag(Constraint::total_power, k, -1, spent);
  }
  for (Index n = 0; n < inst.num_subcarriers; ++n) {
    const Index active = static_cast<Index>(active_set(p, n).size());
    if (active > inst.max_multiplexed)
      flag(Constraint::multiplexing, -1, n, double(active - inst.max_multiplexed));
  }
  return report;
}

}  // namespace mcnoma
