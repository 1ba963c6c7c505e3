#pragma once

#include <mcnoma/solvers.hpp>
#include <mcnoma/threedm.hpp>

#include <cmath>
#include <optional>
#include <vector>

namespace mcnoma {

enum class SubcarrierKind { x_primary, y_primary, z_primary, residual };

inline std::string to_string(SubcarrierKind k) {
  switch (k) {
    case SubcarrierKind::x_primary: return "x";
    case SubcarrierKind::y_primary: return "y";
    case SubcarrierKind::z_primary: return "z";
    case SubcarrierKind::residual: return "residual";
  }
  return "?";
}

struct SubcarrierLabel {
  SubcarrierKind kind;
  int element;  // 1-based set element for primaries, 1-based ordinal for residuals
};

enum class UserKind { triplet, dummy };

struct UserLabel {
  UserKind kind;
  int triplet_index = -1;     // index into the triplet list for triplet users
  Index host_subcarrier = -1; // dummy users only
  int rank = 0;               // dummy decoding rank j in 1..M-1
};

/// A decision-NOMA instance built from a 3DM instance, with the bookkeeping
/// needed to map allocations back to triplets.
struct ReductionArtifact {
  ThreeDM source;
  Instance<double> instance;
  double threshold = 3.0;
  int m = 1;
  bool trivially_no = false;  // fewer triplets than X elements
  std::vector<SubcarrierLabel> subcarrier_labels;
  std::vector<UserLabel> user_labels;
  Index triplet_user_offset = 0;  // triplet user t sits in row offset + t

  Index num_dummies() const { return triplet_user_offset; }
  Index triplet_user(int t) const { return triplet_user_offset + t; }
};

enum class DummyHost { primary, residual };

/// Rate of the rank-j dummy on its host subcarrier under the canonical
/// allocation (all dummies at full budget, the non-dummy at full cap). The
/// closed form evaluates to exactly 3 for every m and rank.
inline double dummy_rate(int m, int rank, DummyHost host) {
  if (m < 2) throw std::invalid_argument("dummy_rate: m must be >= 2");
  if (rank < 1 || rank > m - 1) throw std::invalid_argument("dummy_rate: rank must be in [1, m-1]");
  const double pow8 = std::ldexp(1.0, 3 * (m - rank - 1));  // 8^(m-rank-1)
  if (host == DummyHost::primary) {
    const double budget = 14.0 * pow8;
    const double later = 14.0 * (pow8 - 1.0) / 7.0;  // lower-rank dummies at full budget
    return log2_ratio(1.0 + budget / (later + 1.0 + 1.0));  // +1 user power, +1 noise
  }
  const double budget = 24.0 * pow8;
  const double later = 24.0 * (pow8 - 1.0) / 7.0;
  return log2_ratio(1.0 + budget / (later + 3.0 + 3.0 / 7.0));  // +3 user power, +3/7 noise
}

namespace detail {

inline double dummy_budget(int m, int rank, DummyHost host) {
  const double pow8 = std::ldexp(1.0, 3 * (m - rank - 1));
  return (host == DummyHost::primary ? 14.0 : 24.0) * pow8;
}

}  // namespace detail

/// Core gadget: one user per triplet, one primary subcarrier per set element
/// on each axis, plus |S| - |X| residual subcarriers. A user has unit gain on
/// its triplet's three primaries and on every residual. Budgets are 3, caps 1
/// on primaries and 3 on residuals, noise 1 on primaries and 3/7 on
/// residuals, unit bandwidths, equal weights, M = 1, threshold 3.
inline ReductionArtifact build_t1(const ThreeDM& x, Direction direction = Direction::downlink) {
  x.validate();
  const int s = x.size;
  const Index S = static_cast<Index>(x.triplets.size());
  if (S < 1) throw std::invalid_argument("build_t1: empty triplet set");

  ReductionArtifact art;
  art.source = x;
  art.m = 1;
  art.trivially_no = S < s;

  const Index num_residual = std::max<Index>(0, S - s);
  const Index N = 3 * s + num_residual;
  const Index K = S;

  for (int v = 1; v <= s; ++v) art.subcarrier_labels.push_back({SubcarrierKind::x_primary, v});
  for (int v = 1; v <= s; ++v) art.subcarrier_labels.push_back({SubcarrierKind::y_primary, v});
  for (int v = 1; v <= s; ++v) art.subcarrier_labels.push_back({SubcarrierKind::z_primary, v});
  for (Index r = 1; r <= num_residual; ++r) art.subcarrier_labels.push_back({SubcarrierKind::residual, int(r)});
  for (int t = 0; t < S; ++t) art.user_labels.push_back({UserKind::triplet, t, -1, 0});
  art.triplet_user_offset = 0;

  Instance<double>& inst = art.instance;
  inst.num_users = K;
  inst.num_subcarriers = N;
  inst.max_multiplexed = 1;
  inst.direction = direction;
  inst.mean_order = MeanOrder::sum_rate();
  inst.bandwidths = VectorXd::Ones(N);
  inst.user_budgets = VectorXd::Constant(K, 3.0);
  inst.weights = VectorXd::Constant(K, 1.0 / double(K));

  inst.gains = MatrixXd::Zero(K, N);
  inst.noises = MatrixXd::Zero(K, N);
  inst.per_subcarrier_caps = MatrixXd::Zero(K, N);
  for (Index n = 0; n < N; ++n) {
    const bool residual = art.subcarrier_labels[n].kind == SubcarrierKind::residual;
    inst.noises.col(n).setConstant(residual ? 3.0 / 7.0 : 1.0);
    inst.per_subcarrier_caps.col(n).setConstant(residual ? 3.0 : 1.0);
  }
  for (Index t = 0; t < S; ++t) {
    const auto& trip = x.triplets[t];
    inst.gains(t, trip[0] - 1) = 1.0;
    inst.gains(t, s + trip[1] - 1) = 1.0;
    inst.gains(t, 2 * s + trip[2] - 1) = 1.0;
    for (Index r = 0; r < num_residual; ++r) inst.gains(t, 3 * s + r) = 1.0;
  }

  inst.validate();
  return art;
}

/// Gadget for general M: t1 plus M-1 dummy users per subcarrier. A dummy has
/// unit gain only on its host, a cap equal to its budget there, and budgets
/// chosen so its canonical rate is exactly 3. Dummies occupy the lowest user
/// indices, grouped by host subcarrier then rank, so the index tie-break in
/// the downlink decoding order decodes them before the triplet user.
inline ReductionArtifact build_tM(const ThreeDM& x, int m, Direction direction = Direction::downlink) {
  if (m < 1) throw std::invalid_argument("build_tM: m must be >= 1");
  if (m == 1) return build_t1(x, direction);

  ReductionArtifact art = build_t1(x, direction);
  art.m = m;

  const Instance<double> base = art.instance;
  const Index N = base.num_subcarriers;
  const Index S = base.num_users;
  const Index D = N * (m - 1);
  const Index K = S + D;
  if (double(K) * double(N) > 4e6) throw ScaleGuardError("build_tM: instance would exceed the size guard");

  std::vector<UserLabel> labels;
  labels.reserve(K);
  for (Index n = 0; n < N; ++n)
    for (int j = 1; j <= m - 1; ++j) labels.push_back({UserKind::dummy, -1, n, j});
  for (int t = 0; t < S; ++t) labels.push_back({UserKind::triplet, t, -1, 0});
  art.user_labels = std::move(labels);
  art.triplet_user_offset = D;

  Instance<double>& inst = art.instance;
  inst.num_users = K;
  inst.max_multiplexed = m;
  inst.user_budgets = VectorXd::Zero(K);
  inst.weights = VectorXd::Constant(K, 1.0 / double(K));
  inst.gains = MatrixXd::Zero(K, N);
  inst.noises = MatrixXd::Zero(K, N);
  inst.per_subcarrier_caps = MatrixXd::Zero(K, N);

  for (Index n = 0; n < N; ++n) {
    const bool residual = art.subcarrier_labels[n].kind == SubcarrierKind::residual;
    inst.noises.col(n).setConstant(residual ? 3.0 / 7.0 : 1.0);
  }
  for (Index row = 0; row < D; ++row) {
    const UserLabel& label = art.user_labels[row];
    const bool residual = art.subcarrier_labels[label.host_subcarrier].kind == SubcarrierKind::residual;
    const double budget = detail::dummy_budget(m, label.rank, residual ? DummyHost::residual : DummyHost::primary);
    inst.user_budgets(row) = budget;
    inst.gains(row, label.host_subcarrier) = 1.0;
    inst.per_subcarrier_caps(row, label.host_subcarrier) = budget;
  }
  for (Index t = 0; t < S; ++t) {
    inst.user_budgets(D + t) = base.user_budgets(t);
    inst.gains.row(D + t) = base.gains.row(t);
    inst.per_subcarrier_caps.row(D + t) = base.per_subcarrier_caps.row(t);
  }

  inst.validate();
  return art;
}

/// The hand-built optimal allocation for a matched instance: matched users put
/// power 1 on each of their three primaries, the remaining users take one
/// residual each at power 3, dummies transmit at full budget on their hosts.
inline PowerAllocation<double> canonical_allocation(const ReductionArtifact& art, const Matching& matching) {
  if (!is_valid_matching(art.source, matching))
    throw std::invalid_argument("canonical_allocation: not a valid perfect matching");
  const Index K = art.instance.num_users;
  const Index N = art.instance.num_subcarriers;
  const int s = art.source.size;

  auto allocation = PowerAllocation<double>::zero(K, N);
  for (Index row = 0; row < art.num_dummies(); ++row)
    allocation.powers(row, art.user_labels[row].host_subcarrier) = art.instance.user_budgets(row);

  std::vector<bool> matched(art.source.triplets.size(), false);
  for (int idx : matching.triplet_indices) matched[idx] = true;

  std::vector<Index> residuals;
  for (Index n = 0; n < N; ++n)
    if (art.subcarrier_labels[n].kind == SubcarrierKind::residual) residuals.push_back(n);

  size_t next_residual = 0;
  for (int t = 0; t < static_cast<int>(art.source.triplets.size()); ++t) {
    const Index row = art.triplet_user(t);
    if (matched[t]) {
      const auto& trip = art.source.triplets[t];
      allocation.powers(row, trip[0] - 1) = 1.0;
      allocation.powers(row, s + trip[1] - 1) = 1.0;
      allocation.powers(row, 2 * s + trip[2] - 1) = 1.0;
    } else {
      if (next_residual >= residuals.size())
        throw std::logic_error("canonical_allocation: ran out of residual subcarriers");
      allocation.powers(row, residuals[next_residual++]) = 3.0;
    }
  }
  return allocation;
}

/// Reads a perfect matching off a solved artifact: when the utility reaches
/// the threshold, the matched triplets are exactly those whose user is active
/// on all three of its primaries. Returns nothing when the utility is below
/// threshold or the selection fails certification.
inline std::optional<Matching> extract_matching(const ReductionArtifact& art, const SolveResult<double>& result) {
  const auto feasibility = check_feasibility(art.instance, result.allocation);
  if (!feasibility.feasible) throw std::invalid_argument("extract_matching: allocation is infeasible");
  if (result.utility < art.threshold - 1e-6) return std::nullopt;

  const int s = art.source.size;
  Matching m;
  for (int t = 0; t < static_cast<int>(art.source.triplets.size()); ++t) {
    const Index row = art.triplet_user(t);
    const auto& trip = art.source.triplets[t];
    const bool on_x = result.allocation.powers(row, trip[0] - 1) > 0;
    const bool on_y = result.allocation.powers(row, s + trip[1] - 1) > 0;
    const bool on_z = result.allocation.powers(row, 2 * s + trip[2] - 1) > 0;
    if (on_x && on_y && on_z) m.triplet_indices.push_back(t);
  }
  if (!is_valid_matching(art.source, m)) return std::nullopt;
  return m;
}

struct OrderOutcome {
  MeanOrder order{1.0};
  double value = 0;        // utility of the solved allocation under this order
  bool exact = false;      // true when the optimum is certified, not just bounded
  double upper_bound = 0;  // certified bound on the optimum (mean inequality)
  bool decision = false;   // optimum reaches the threshold
};

struct EquivalenceReport {
  int m = 1;
  Direction direction = Direction::downlink;
  double threshold = 3.0;
  bool matching_exists = false;
  double layer_opt = 0;      // exact optimum of the M = 1 non-dummy layer
  double opt_sum_rate = 0;   // sum-rate mean of the assembled full allocation
  double gap = 0;            // threshold - opt_sum_rate
  bool rates_all_equal = false;
  std::vector<OrderOutcome> per_order;
  std::optional<Matching> recovered;
  VectorXd user_rates;
  PowerAllocation<double> allocation;
  bool allocation_feasible = false;
  std::int64_t states = 0;
  bool pass = false;
};

struct VerifyOptions {
  std::vector<MeanOrder> orders = {MeanOrder(1.0), MeanOrder(0.0), MeanOrder(-1.0),
                                   MeanOrder::minus_infinity()};
  Direction direction = Direction::downlink;
  std::int64_t max_states = kDefaultMaxStates;
};

/// Checks the reduction end to end on one 3DM instance: the gadget's optimal
/// sum-rate mean reaches 3 exactly when a perfect matching exists, every rate
/// equals 3 at that optimum (so every mean order <= 1 collapses to the same
/// verdict), and the matching can be read back off the allocation.
///
/// The gadget is solved exactly: dummies are pinned at full budget (any
/// other choice wastes per-subcarrier capacity), and the remaining M = 1
/// layer is solved by exhaustive_m1. For M > 1 the layer is additionally
/// re-solved against the dummy-loaded effective noises, which maximizes the
/// full-instance sum including the dummies' interference loss; the better
/// assembled allocation wins. Orders below 1 are certified through the mean
/// inequality: their optimum is trapped between the assembled value and the
/// sum-rate optimum.
inline EquivalenceReport verify_equivalence(const ThreeDM& x, int m, const VerifyOptions& opts = {}) {
  EquivalenceReport report;
  report.m = m;
  report.direction = opts.direction;

  const std::optional<Matching> ground = solve_3dm(x);
  report.matching_exists = ground.has_value();

  const ReductionArtifact art = build_tM(x, m, opts.direction);
  const ReductionArtifact layer = build_t1(x, opts.direction);
  report.threshold = art.threshold;

  ExhaustiveOptions solver_opts;
  solver_opts.max_states = opts.max_states;

  const SolveResult<double> layer_result = exhaustive_m1(layer.instance, solver_opts);
  report.layer_opt = layer_result.utility;
  report.states = layer_result.iterations;

  auto assemble = [&](const PowerAllocation<double>& layer_powers) {
    auto full = PowerAllocation<double>::zero(art.instance.num_users, art.instance.num_subcarriers);
    for (Index row = 0; row < art.num_dummies(); ++row)
      full.powers(row, art.user_labels[row].host_subcarrier) = art.instance.user_budgets(row);
    for (Index t = 0; t < layer.instance.num_users; ++t)
      full.powers.row(art.triplet_user_offset + t) = layer_powers.powers.row(t);
    return full;
  };
  auto sum_rate_mean = [&](const PowerAllocation<double>& full) {
    const auto r = rates(art.instance, full);
    return generalized_mean(MeanOrder::sum_rate(), art.instance.weights, r.per_user);
  };

  PowerAllocation<double> assembled = assemble(layer_result.allocation);
  double assembled_value = sum_rate_mean(assembled);

  if (m > 1) {
    // Second pass against effective noises eta + (hosted dummy load): with all
    // gadget gains equal to 1, the full-instance sum telescopes per subcarrier,
    // so this layer objective is the full sum minus a constant.
    Instance<double> loaded = layer.instance;
    for (Index n = 0; n < loaded.num_subcarriers; ++n) {
      const bool residual = layer.subcarrier_labels[n].kind == SubcarrierKind::residual;
      double load = 0;
      for (int j = 1; j <= m - 1; ++j)
        load += detail::dummy_budget(m, j, residual ? DummyHost::residual : DummyHost::primary);
      loaded.noises.col(n).array() += load;
    }
    const SolveResult<double> loaded_result = exhaustive_m1(loaded, solver_opts);
    report.states += loaded_result.iterations;
    PowerAllocation<double> alternative = assemble(loaded_result.allocation);
    const double alternative_value = sum_rate_mean(alternative);
    if (alternative_value > assembled_value) {
      assembled = std::move(alternative);
      assembled_value = alternative_value;
    }
  }

  report.allocation = assembled;
  report.opt_sum_rate = assembled_value;
  report.gap = report.threshold - assembled_value;

  const auto full_rates = rates(art.instance, assembled);
  report.user_rates = full_rates.per_user;
  report.rates_all_equal =
      (full_rates.per_user.array() - report.threshold).abs().maxCoeff() <= 1e-6;
  report.allocation_feasible = check_feasibility(art.instance, assembled).feasible;

  SolveResult<double> assembled_result;
  assembled_result.allocation = assembled;
  assembled_result.rates = full_rates;
  assembled_result.utility = assembled_value;
  report.recovered = extract_matching(art, assembled_result);

  const bool reaches = decide(report.threshold, report.opt_sum_rate);
  for (const MeanOrder& order : opts.orders) {
    OrderOutcome outcome;
    outcome.order = order;
    outcome.value = generalized_mean(order, art.instance.weights, full_rates.per_user);
    outcome.upper_bound = report.opt_sum_rate;
    outcome.exact = order == MeanOrder::sum_rate() || report.rates_all_equal;
    outcome.decision = order == MeanOrder::sum_rate() ? reaches : (reaches && report.rates_all_equal);
    report.per_order.push_back(outcome);
  }

  bool pass = report.allocation_feasible;
  pass = pass && (report.matching_exists == reaches);
  for (const auto& outcome : report.per_order) pass = pass && outcome.decision == report.matching_exists;
  if (report.matching_exists) {
    pass = pass && report.rates_all_equal;
    pass = pass && report.recovered.has_value() && is_valid_matching(x, *report.recovered);
    for (const auto& outcome : report.per_order)
      pass = pass && std::abs(outcome.value - report.threshold) <= 1e-6;
  } else {
    pass = pass && !report.recovered.has_value();
    pass = pass && report.gap > kDecisionTol;
    for (const auto& outcome : report.per_order)
      pass = pass && outcome.value <= report.threshold - report.gap + 1e-9;
  }
  report.pass = pass;
  return report;
}

}  // namespace mcnoma
