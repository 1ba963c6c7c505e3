#pragma once

#include <mcnoma/instance.hpp>

#include <cmath>

namespace mcnoma {

namespace detail {

// Tiny positive rates underflow x^i for negative orders; treat them as zero.
inline constexpr double kNegativeOrderFloor = 1e-300;

template <class Scalar>
void check_mean_inputs(const Vector<Scalar>& weights, const Vector<Scalar>& x) {
  if (x.size() < 1) throw std::invalid_argument("generalized mean of an empty vector");
  if (weights.size() != x.size()) throw std::invalid_argument("weights/values size mismatch");
  if (!(weights.array() > Scalar(0)).all()) throw std::invalid_argument("weights must be positive");
  if (std::abs(double(weights.sum()) - 1.0) > kMeanCompareTol)
    throw std::invalid_argument("weights must sum to 1");
  if (!(x.array() >= Scalar(0)).all()) throw std::invalid_argument("mean inputs must be non-negative");
}

// Core evaluation without precondition checks; shared with hot loops.
template <class Scalar>
Scalar generalized_mean_unchecked(MeanOrder order, const Vector<Scalar>& weights, const Vector<Scalar>& x) {
  if (order.is_minus_infinity()) return x.minCoeff();
  if (order.is_zero()) {
    Scalar log_sum(0);
    for (Index k = 0; k < x.size(); ++k) {
      if (x[k] <= Scalar(0)) return Scalar(0);
      log_sum += weights[k] * std::log(x[k]);
    }
    return std::exp(log_sum);
  }
  const Scalar i = Scalar(order.value());
  if (order.value() < 0) {
    for (Index k = 0; k < x.size(); ++k)
      if (double(x[k]) < kNegativeOrderFloor) return Scalar(0);
  }
  Scalar acc(0);
  for (Index k = 0; k < x.size(); ++k) acc += weights[k] * std::pow(x[k], i);
  return std::pow(acc, Scalar(1) / i);
}

}  // namespace detail

/// Weighted generalized mean of order i <= 1 over non-negative values.
/// i = 1 is the weighted arithmetic mean, i = 0 the weighted geometric mean,
/// i = -inf the minimum. Any zero entry pulls the mean to 0 for i <= 0.
template <class Scalar>
Scalar generalized_mean(MeanOrder order, const Vector<Scalar>& weights, const Vector<Scalar>& x) {
  detail::check_mean_inputs(weights, x);
  return detail::generalized_mean_unchecked(order, weights, x);
}

template <class Scalar>
struct MeanInequalityResult {
  bool holds = false;     // M_r <= M_q up to comparison slack
  bool equality = false;  // all entries coincide
  Scalar lower{};         // M_r
  Scalar upper{};         // M_q
};

/// Checks the generalized-mean inequality M_r <= M_q for r < q, and whether
/// the input is a constant vector (the equality case).
template <class Scalar>
MeanInequalityResult<Scalar> mean_inequality_check(MeanOrder r, MeanOrder q, const Vector<Scalar>& weights,
                                                   const Vector<Scalar>& x) {
  if (!(r < q)) throw std::invalid_argument("mean_inequality_check requires r < q");
  detail::check_mean_inputs(weights, x);
  MeanInequalityResult<Scalar> result;
  result.lower = detail::generalized_mean_unchecked(r, weights, x);
  result.upper = detail::generalized_mean_unchecked(q, weights, x);
  result.holds = double(result.lower) <= double(result.upper) + kMeanCompareTol;
  result.equality = true;
  for (Index k = 1; k < x.size(); ++k)
    if (std::abs(double(x[k] - x[0])) > kMeanCompareTol) {
      result.equality = false;
      break;
    }
  return result;
}

/// The decision problem "is the optimal utility at least T": an instance
/// bundled with its threshold.
template <class Scalar>
struct DecisionInstance {
  Instance<Scalar> instance;
  double threshold = 0;
};

/// Threshold test with absolute slack kDecisionTol on the optimum.
inline bool decide(double threshold, double optimum) { return optimum >= threshold - kDecisionTol; }

template <class Scalar>
bool decide(const DecisionInstance<Scalar>& d, double optimum) {
  return decide(d.threshold, optimum);
}

}  // namespace mcnoma
