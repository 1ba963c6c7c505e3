#pragma once

#include <mcnoma/concave_form.hpp>
#include <mcnoma/mean.hpp>
#include <mcnoma/model.hpp>
#include <mcnoma/waterfilling.hpp>

#include <bit>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace mcnoma {

enum class SolveStatus { optimal, converged, infeasible };

inline std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::converged: return "converged";
    case SolveStatus::infeasible: return "infeasible";
  }
  return "?";
}

template <class Scalar>
struct SolveResult {
  PowerAllocation<Scalar> allocation;
  RateVector<Scalar> rates;
  Scalar utility{0};
  std::int64_t iterations = 0;
  SolveStatus status = SolveStatus::optimal;
  std::string solver;
  std::map<std::string, double> diagnostics;
};

using SolveResultd = SolveResult<double>;

namespace detail {

template <class Scalar>
SolveResult<Scalar> finalize_result(const Instance<Scalar>& inst, PowerAllocation<Scalar> allocation,
                                    std::string solver, SolveStatus status, std::int64_t iterations) {
  SolveResult<Scalar> result;
  allocation.clamp_dust();
  result.allocation = std::move(allocation);
  result.rates = rates(inst, result.allocation);
  result.utility = generalized_mean(inst.mean_order, inst.weights, result.rates.per_user);
  result.iterations = iterations;
  result.status = status;
  result.solver = std::move(solver);
  return result;
}

template <class Scalar>
bool pair_eligible(const Instance<Scalar>& inst, Index k, Index n) {
  return inst.gains(k, n) > Scalar(0) && inst.per_subcarrier_caps(k, n) > Scalar(0);
}

}  // namespace detail

/// Number of per-subcarrier choices an exhaustive single-user-per-subcarrier
/// enumeration would visit: product over subcarriers of (1 + eligible users).
template <class Scalar>
double naive_state_count(const Instance<Scalar>& inst) {
  double states = 1;
  for (Index n = 0; n < inst.num_subcarriers; ++n) {
    Index eligible = 0;
    for (Index k = 0; k < inst.num_users; ++k)
      if (detail::pair_eligible(inst, k, n)) ++eligible;
    states *= double(1 + eligible);
    if (states > 1e18) return states;  // saturate, callers only compare against guards
  }
  return states;
}

/// Single-user instances: direct capped waterfilling over the eligible
/// subcarriers. Optimal for every mean order since the mean of one value is
/// that value.
template <class Scalar>
SolveResult<Scalar> solve_single_user(const Instance<Scalar>& inst) {
  inst.validate();
  if (inst.num_users != 1) throw std::invalid_argument("solve_single_user requires exactly one user");

  std::vector<Index> channels;
  for (Index n = 0; n < inst.num_subcarriers; ++n)
    if (detail::pair_eligible(inst, 0, n)) channels.push_back(n);

  auto allocation = PowerAllocation<Scalar>::zero(inst.num_users, inst.num_subcarriers);
  std::int64_t iterations = 0;
  if (!channels.empty()) {
    const Index C = static_cast<Index>(channels.size());
    Vector<Scalar> g(C), eta(C), cap(C), w(C);
    for (Index i = 0; i < C; ++i) {
      const Index n = channels[i];
      g[i] = inst.gains(0, n);
      eta[i] = inst.noises(0, n);
      cap[i] = inst.per_subcarrier_caps(0, n);
      w[i] = inst.bandwidths(n);
    }
    const auto wf = capped_waterfilling(inst.user_budgets(0), g, eta, cap, w);
    for (Index i = 0; i < C; ++i) allocation.powers(0, channels[i]) = wf.powers[i];
    iterations = wf.iterations;
  }
  return detail::finalize_result(inst, std::move(allocation), "waterfilling", SolveStatus::optimal, iterations);
}

struct FixedAssignmentOptions {
  double tolerance = 1e-8;          // projected-gradient norm target
  std::int64_t max_iterations = 100000;
};

/// Maximizes the sum rate over powers with the subcarrier assignment fixed,
/// by projected gradient ascent on the concave telescoped objective with
/// Armijo backtracking. Requires mean order 1 and equal weights (the
/// telescoped form sums user rates within a subcarrier).
template <class Scalar>
SolveResult<Scalar> solve_fixed_assignment_sumrate(const Instance<Scalar>& inst, const Assignment& assignment,
                                                   const FixedAssignmentOptions& opts = {}) {
  inst.validate();
  if (inst.mean_order != MeanOrder::sum_rate())
    throw std::invalid_argument("solve_fixed_assignment_sumrate requires mean order 1");
  if (double(inst.weights.maxCoeff() - inst.weights.minCoeff()) > kMeanCompareTol)
    throw std::invalid_argument("solve_fixed_assignment_sumrate requires equal weights");

  const auto form = make_sum_rate_form(inst, assignment);
  const Index D = form.num_variables();

  auto scatter = [&](const Vector<Scalar>& x) {
    auto allocation = PowerAllocation<Scalar>::zero(inst.num_users, inst.num_subcarriers);
    for (Index d = 0; d < D; ++d) {
      const auto [k, n] = form.variable_pairs()[d];
      allocation.powers(k, n) = x[d];
    }
    return allocation;
  };

  if (D == 0)
    return detail::finalize_result(inst, scatter(Vector<Scalar>()), "fixed_assignment", SolveStatus::optimal, 0);

  // Per-user variable groups for the box-plus-budget projection.
  std::vector<std::vector<Index>> user_vars(inst.num_users);
  Vector<Scalar> caps(D);
  for (Index d = 0; d < D; ++d) {
    const auto [k, n] = form.variable_pairs()[d];
    user_vars[k].push_back(d);
    caps[d] = inst.per_subcarrier_caps(k, n);
  }
  auto project = [&](const Vector<Scalar>& y) {
    Vector<Scalar> out(D);
    for (Index k = 0; k < inst.num_users; ++k) {
      const auto& vars = user_vars[k];
      if (vars.empty()) continue;
      Vector<Scalar> yk(Index(vars.size())), ck(Index(vars.size()));
      for (size_t i = 0; i < vars.size(); ++i) {
        yk[Index(i)] = y[vars[i]];
        ck[Index(i)] = caps[vars[i]];
      }
      const Vector<Scalar> pk = project_box_budget(yk, ck, inst.user_budgets(k));
      for (size_t i = 0; i < vars.size(); ++i) out[vars[i]] = pk[Index(i)];
    }
    return out;
  };

  const Scalar armijo = Scalar(1e-4);
  Vector<Scalar> x = Vector<Scalar>::Zero(D);
  Scalar fx = form.value(x);
  std::int64_t iterations = 0;
  SolveStatus status = SolveStatus::converged;

  while (iterations < opts.max_iterations) {
    const Vector<Scalar> grad = form.gradient(x);
    const Vector<Scalar> full_step = project(x + grad);
    if (double((full_step - x).norm()) <= opts.tolerance) {
      status = SolveStatus::optimal;
      break;
    }
    Scalar t(1);
    Vector<Scalar> candidate = full_step;
    bool accepted = false;
    for (int half = 0; half < 60; ++half) {
      const Scalar fc = form.value(candidate);
      if (fc >= fx + armijo * grad.dot(candidate - x)) {
        x = candidate;
        fx = fc;
        accepted = true;
        break;
      }
      t /= Scalar(2);
      candidate = project(x + t * grad);
      if (double((candidate - x).norm()) == 0.0) break;
    }
    ++iterations;
    if (!accepted) break;  // the arc stalled below machine step size
  }

  return detail::finalize_result(inst, scatter(x), "fixed_assignment", status, iterations);
}

/// One shared subcarrier: pick the top-M users by full-power SNR and let each
/// transmit at min(budget, cap). Requires N = 1 and mean order 1.
template <class Scalar>
SolveResult<Scalar> solve_single_subcarrier(const Instance<Scalar>& inst) {
  inst.validate();
  if (inst.num_subcarriers != 1) throw std::invalid_argument("solve_single_subcarrier requires N = 1");
  if (inst.mean_order != MeanOrder::sum_rate())
    throw std::invalid_argument("solve_single_subcarrier requires mean order 1");

  const Index K = inst.num_users;
  Vector<Scalar> full(K), snr(K);
  for (Index k = 0; k < K; ++k) {
    full[k] = std::min(inst.user_budgets(k), inst.per_subcarrier_caps(k, 0));
    snr[k] = inst.gains(k, 0) * full[k] / inst.noises(k, 0);
  }
  std::vector<Index> by_snr(K);
  for (Index k = 0; k < K; ++k) by_snr[k] = k;
  std::sort(by_snr.begin(), by_snr.end(), [&](Index a, Index b) {
    if (snr[a] != snr[b]) return snr[a] > snr[b];
    return a < b;
  });

  auto allocation = PowerAllocation<Scalar>::zero(K, 1);
  Index active = 0;
  for (Index k : by_snr) {
    if (active >= inst.max_multiplexed || !(snr[k] > Scalar(0))) break;
    allocation.powers(k, 0) = full[k];
    ++active;
  }
  return detail::finalize_result(inst, std::move(allocation), "single_subcarrier", SolveStatus::optimal, K);
}

struct ExhaustiveOptions {
  std::int64_t max_states = kDefaultMaxStates;
  std::int64_t naive_threshold = 2000000;  // switch to subset DP above this
  enum class Path { automatic, enumerate, subset_dp } path = Path::automatic;
};

/// Exact solver for M = 1, mean order 1: the best assignment of at most one
/// user per subcarrier, with powers waterfilled per user. The objective
/// separates per user given the assignment, so the search runs either as a
/// direct enumeration over per-subcarrier choices or as a subset DP over
/// (user prefix, set of consumed subcarriers); both visit the same assignment
/// space and return the same optimum.
template <class Scalar>
SolveResult<Scalar> exhaustive_m1(const Instance<Scalar>& inst, const ExhaustiveOptions& opts = {}) {
  inst.validate();
  if (inst.max_multiplexed != 1) throw std::invalid_argument("exhaustive_m1 requires M = 1");
  if (inst.mean_order != MeanOrder::sum_rate()) throw std::invalid_argument("exhaustive_m1 requires mean order 1");

  const Index K = inst.num_users, N = inst.num_subcarriers;
  const double states = naive_state_count(inst);
  if (states > double(opts.max_states)) {
    std::ostringstream os;
    os << "exhaustive_m1: " << states << " enumeration states exceed the guard of " << opts.max_states
       << " (raise NOMA_ALLOC_MAX_STATES to override)";
    throw ScaleGuardError(os.str());
  }

  std::vector<std::vector<Index>> elig_users(N), elig_subs(K);
  for (Index n = 0; n < N; ++n)
    for (Index k = 0; k < K; ++k)
      if (detail::pair_eligible(inst, k, n)) {
        elig_users[n].push_back(k);
        elig_subs[k].push_back(n);
      }

  double cache_entries = 0;
  for (Index k = 0; k < K; ++k) {
    if (elig_subs[k].size() > 20)
      throw ScaleGuardError("exhaustive_m1: a user is eligible on more than 20 subcarriers");
    cache_entries += std::pow(2.0, double(elig_subs[k].size()));
  }
  if (cache_entries > 8e6) throw ScaleGuardError("exhaustive_m1: eligibility too dense for the value cache");

  // Lazy per-user waterfilling values over local subsets of its eligible list.
  std::vector<std::vector<double>> value_cache(K);
  for (Index k = 0; k < K; ++k)
    value_cache[k].assign(size_t(1) << elig_subs[k].size(), std::numeric_limits<double>::quiet_NaN());

  std::vector<Vector<Scalar>> wf_powers_scratch(K);
  auto user_value = [&](Index k, std::uint32_t local_mask) -> double {
    if (local_mask == 0) return 0.0;
    double& slot = value_cache[k][local_mask];
    if (!std::isnan(slot)) return slot;
    const int C = std::popcount(local_mask);
    Vector<Scalar> g(C), eta(C), cap(C), w(C);
    int i = 0;
    for (size_t b = 0; b < elig_subs[k].size(); ++b) {
      if (!(local_mask & (std::uint32_t(1) << b))) continue;
      const Index n = elig_subs[k][b];
      g[i] = inst.gains(k, n);
      eta[i] = inst.noises(k, n);
      cap[i] = inst.per_subcarrier_caps(k, n);
      w[i] = inst.bandwidths(n);
      ++i;
    }
    slot = double(capped_waterfilling(inst.user_budgets(k), g, eta, cap, w).objective);
    return slot;
  };

  auto local_bit = [&](Index k, Index n) -> std::uint32_t {
    const auto& subs = elig_subs[k];
    const auto it = std::lower_bound(subs.begin(), subs.end(), n);
    return std::uint32_t(1) << (it - subs.begin());
  };

  bool use_dp = opts.path == ExhaustiveOptions::Path::subset_dp;
  if (opts.path == ExhaustiveOptions::Path::automatic)
    use_dp = states > double(opts.naive_threshold) && N <= 20 && (double(K + 1) * std::pow(2.0, double(N))) <= 2e7;
  if (use_dp && (N > 20 || double(K + 1) * std::pow(2.0, double(N)) > 2e7))
    throw ScaleGuardError("exhaustive_m1: subset DP table would exceed its size guard");

  std::vector<std::uint32_t> chosen_local(K, 0);  // winning local mask per user
  std::int64_t visited = 0;

  if (!use_dp) {
    // Depth-first over subcarriers; choice order: unused first, then eligible
    // users ascending, so the first optimum in lexicographic order wins.
    std::vector<std::uint32_t> masks(K, 0);
    double best = -std::numeric_limits<double>::infinity();
    auto dfs = [&](auto&& self, Index n, double value) -> void {
      if (n == N) {
        ++visited;
        if (value > best) {
          best = value;
          chosen_local = masks;
        }
        return;
      }
      self(self, n + 1, value);
      for (Index k : elig_users[n]) {
        const std::uint32_t bit = local_bit(k, n);
        const double before = user_value(k, masks[k]);
        masks[k] |= bit;
        const double after = user_value(k, masks[k]);
        self(self, n + 1, value + double(inst.weights(k)) * (after - before));
        masks[k] &= ~bit;
      }
    };
    dfs(dfs, 0, 0.0);
  } else {
    std::vector<std::uint32_t> elig_mask(K, 0);
    for (Index k = 0; k < K; ++k)
      for (Index n : elig_subs[k]) elig_mask[k] |= std::uint32_t(1) << n;
    auto compress = [&](Index k, std::uint32_t full_mask) {
      std::uint32_t local = 0;
      for (size_t b = 0; b < elig_subs[k].size(); ++b)
        if (full_mask & (std::uint32_t(1) << elig_subs[k][b])) local |= std::uint32_t(1) << b;
      return local;
    };

    const std::uint32_t full = (N == 32) ? ~std::uint32_t(0) : ((std::uint32_t(1) << N) - 1);
    std::vector<std::vector<double>> f(K + 1, std::vector<double>(size_t(full) + 1, 0.0));
    for (Index k = 1; k <= K; ++k) {
      const std::uint32_t em = elig_mask[k - 1];
      const double wk = double(inst.weights(k - 1));
      for (std::uint32_t mask = 0;; ++mask) {
        const std::uint32_t r = mask & em;
        double best = -std::numeric_limits<double>::infinity();
        for (std::uint32_t sub = r;; sub = (sub - 1) & r) {
          const double cand = f[k - 1][mask ^ sub] + wk * user_value(k - 1, compress(k - 1, sub));
          ++visited;
          if (cand > best) best = cand;
          if (sub == 0) break;
        }
        f[k][mask] = best;
        if (mask == full) break;
      }
    }
    // Recover one optimum by replaying each level's first maximizer.
    std::uint32_t mask = full;
    for (Index k = K; k >= 1; --k) {
      const std::uint32_t r = mask & elig_mask[k - 1];
      const double wk = double(inst.weights(k - 1));
      for (std::uint32_t sub = r;; sub = (sub - 1) & r) {
        const double cand = f[k - 1][mask ^ sub] + wk * user_value(k - 1, compress(k - 1, sub));
        if (cand == f[k][mask]) {
          chosen_local[k - 1] = compress(k - 1, sub);
          mask ^= sub;
          break;
        }
        if (sub == 0) break;
      }
    }
  }

  // Materialize the winning assignment with one exact waterfilling per user.
  auto allocation = PowerAllocation<Scalar>::zero(K, N);
  for (Index k = 0; k < K; ++k) {
    const std::uint32_t local = chosen_local[k];
    if (local == 0) continue;
    const int C = std::popcount(local);
    Vector<Scalar> g(C), eta(C), cap(C), w(C);
    std::vector<Index> subs;
    for (size_t b = 0; b < elig_subs[k].size(); ++b) {
      if (!(local & (std::uint32_t(1) << b))) continue;
      const Index n = elig_subs[k][b];
      subs.push_back(n);
      const int i = int(subs.size()) - 1;
      g[i] = inst.gains(k, n);
      eta[i] = inst.noises(k, n);
      cap[i] = inst.per_subcarrier_caps(k, n);
      w[i] = inst.bandwidths(n);
    }
    const auto wf = capped_waterfilling(inst.user_budgets(k), g, eta, cap, w);
    for (size_t i = 0; i < subs.size(); ++i) allocation.powers(k, subs[i]) = wf.powers[Index(i)];
  }

  auto result =
      detail::finalize_result(inst, std::move(allocation), "exhaustive_m1", SolveStatus::optimal, visited);
  result.diagnostics["enumeration_states"] = states;
  result.diagnostics["subset_dp"] = use_dp ? 1.0 : 0.0;
  return result;
}

struct GridOptions {
  std::int64_t max_evaluations = kDefaultMaxStates;
};

/// Brute-force reference: grids every eligible power variable over
/// [0, min(cap, budget)] and keeps the best feasible point under the
/// instance's own mean order. Intended for tiny instances only.
template <class Scalar>
SolveResult<Scalar> grid_oracle(const Instance<Scalar>& inst, int steps, const GridOptions& opts = {}) {
  inst.validate();
  if (steps < 2 || steps > 200) throw std::invalid_argument("grid_oracle: steps must be in [2, 200]");

  struct Dim {
    Index user, subcarrier;
    Scalar pmax;
  };
  std::vector<Dim> dims;
  for (Index n = 0; n < inst.num_subcarriers; ++n)
    for (Index k = 0; k < inst.num_users; ++k) {
      if (!detail::pair_eligible(inst, k, n)) continue;
      const Scalar pmax = std::min(inst.per_subcarrier_caps(k, n), inst.user_budgets(k));
      if (pmax > Scalar(0)) dims.push_back({k, n, pmax});
    }
  if (dims.size() > 6)
    throw ScaleGuardError("grid_oracle: more than 6 active power dimensions after eligibility filtering");
  const double evals = std::pow(double(steps), double(dims.size()));
  if (evals > double(opts.max_evaluations)) {
    std::ostringstream os;
    os << "grid_oracle: " << evals << " grid evaluations exceed the guard of " << opts.max_evaluations;
    throw ScaleGuardError(os.str());
  }

  const Index D = static_cast<Index>(dims.size());
  const Index K = inst.num_users;

  // Per-subcarrier dim lists, downlink-ordered once (the order is power-free).
  std::vector<std::vector<Index>> sub_dims(inst.num_subcarriers);
  for (Index d = 0; d < D; ++d) sub_dims[dims[d].subcarrier].push_back(d);
  for (auto& list : sub_dims) {
    if (inst.direction != Direction::downlink) continue;
    std::sort(list.begin(), list.end(), [&](Index a, Index b) {
      const Scalar ra = inst.noises(dims[a].user, dims[a].subcarrier) / inst.gains(dims[a].user, dims[a].subcarrier);
      const Scalar rb = inst.noises(dims[b].user, dims[b].subcarrier) / inst.gains(dims[b].user, dims[b].subcarrier);
      if (ra != rb) return ra > rb;
      return dims[a].user < dims[b].user;
    });
  }

  Vector<Scalar> point = Vector<Scalar>::Zero(std::max<Index>(D, 1));
  Vector<Scalar> spent = Vector<Scalar>::Zero(K);
  std::vector<Index> active_per_sub(inst.num_subcarriers, 0);
  Vector<Scalar> per_user(K);
  Vector<Scalar> best_point = Vector<Scalar>::Zero(std::max<Index>(D, 1));
  double best = -std::numeric_limits<double>::infinity();
  std::int64_t evaluated = 0;

  std::vector<std::pair<Index, Scalar>> order_buf;  // (dim, g*p) scratch for uplink
  auto evaluate = [&]() {
    per_user.setZero();
    for (Index n = 0; n < inst.num_subcarriers; ++n) {
      const auto& list = sub_dims[n];
      order_buf.clear();
      for (Index d : list)
        if (point[d] > Scalar(0)) order_buf.emplace_back(d, inst.gains(dims[d].user, n) * point[d]);
      if (order_buf.empty()) continue;
      if (inst.direction == Direction::uplink) {
        std::sort(order_buf.begin(), order_buf.end(), [&](const auto& a, const auto& b) {
          if (a.second != b.second) return a.second > b.second;
          return dims[a.first].user < dims[b.first].user;
        });
      }
      const int m = int(order_buf.size());
      for (int i = 0; i < m; ++i) {
        const Index d = order_buf[i].first;
        const Index k = dims[d].user;
        Scalar interference(0);
        if (inst.direction == Direction::downlink) {
          Scalar later(0);
          for (int j = i + 1; j < m; ++j) later += point[order_buf[j].first];
          interference = inst.gains(k, n) * later;
        } else {
          for (int j = i + 1; j < m; ++j) interference += order_buf[j].second;
        }
        const Scalar sinr = inst.gains(k, n) * point[d] / (interference + inst.noises(k, n));
        per_user[k] += inst.bandwidths(n) * log2_ratio(Scalar(1) + sinr);
      }
    }
    ++evaluated;
    const double value = double(detail::generalized_mean_unchecked(inst.mean_order, inst.weights, per_user));
    if (value > best) {
      best = value;
      best_point = point;
    }
  };

  auto sweep = [&](auto&& self, Index d) -> void {
    if (d == D) {
      evaluate();
      return;
    }
    const auto& dim = dims[d];
    for (int t = 0; t < steps; ++t) {
      const Scalar p = dim.pmax * Scalar(t) / Scalar(steps - 1);
      if (t > 0) {
        if (double(spent[dim.user] + p) > double(inst.user_budgets(dim.user)) + kFeasibilityTol) break;
        if (active_per_sub[dim.subcarrier] + 1 > inst.max_multiplexed) break;
        spent[dim.user] += p;
        ++active_per_sub[dim.subcarrier];
      }
      point[d] = p;
      self(self, d + 1);
      if (t > 0) {
        spent[dim.user] -= p;
        --active_per_sub[dim.subcarrier];
      }
      point[d] = Scalar(0);
    }
  };
  sweep(sweep, 0);

  auto allocation = PowerAllocation<Scalar>::zero(K, inst.num_subcarriers);
  for (Index d = 0; d < D; ++d) allocation.powers(dims[d].user, dims[d].subcarrier) = best_point[d];
  auto result =
      detail::finalize_result(inst, std::move(allocation), "grid_oracle", SolveStatus::converged, evaluated);
  double resolution = 0;
  for (Index d = 0; d < D; ++d) resolution = std::max(resolution, double(dims[d].pmax) / double(steps - 1));
  result.diagnostics["grid_resolution"] = resolution;
  result.diagnostics["grid_dimensions"] = double(D);
  result.diagnostics["grid_evaluations"] = double(evaluated);
  return result;
}

}  // namespace mcnoma
