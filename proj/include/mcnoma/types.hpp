#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace mcnoma {

using Index = Eigen::Index;

template <class Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <class Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using MatrixXd = Matrix<double>;
using VectorXd = Vector<double>;

// Shared numeric policy. Feasibility slack is absolute, activity means
// strictly positive power, solver outputs snap tiny dust to exact zero.
inline constexpr double kFeasibilityTol = 1e-9;
inline constexpr double kActivityClamp = 1e-12;
inline constexpr double kMeanCompareTol = 1e-12;
inline constexpr double kDecisionTol = 1e-9;
inline constexpr std::int64_t kDefaultMaxStates = 100000000;

/// Base-2 logarithm, evaluated as natural log over ln 2.
template <class Scalar>
Scalar log2_ratio(Scalar x) {
  return std::log(x) / std::numbers::ln2_v<Scalar>;
}

/// Thrown when an exhaustive or grid computation would exceed its state guard.
struct ScaleGuardError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Direction { downlink, uplink };

inline std::string to_string(Direction d) {
  return d == Direction::downlink ? "downlink" : "uplink";
}

inline Direction direction_from_string(const std::string& s) {
  if (s == "downlink") return Direction::downlink;
  if (s == "uplink") return Direction::uplink;
  throw std::invalid_argument("unknown direction: " + s);
}

/// Order of a weighted generalized mean: an extended real in [-inf, 1].
/// The minus-infinity sentinel selects the max-min (worst case) utility,
/// 0 selects the weighted geometric mean.
class MeanOrder {
 public:
  MeanOrder() = default;

  explicit MeanOrder(double v) : value_(v) {
    if (std::isnan(v)) throw std::invalid_argument("mean order must not be NaN");
    if (v > 1.0) throw std::invalid_argument("mean order must be <= 1");
  }

  static MeanOrder minus_infinity() { return MeanOrder(-std::numeric_limits<double>::infinity()); }
  static MeanOrder max_min() { return minus_infinity(); }
  static MeanOrder sum_rate() { return MeanOrder(1.0); }
  static MeanOrder proportional_fairness() { return MeanOrder(0.0); }
  static MeanOrder harmonic_mean() { return MeanOrder(-1.0); }

  double value() const { return value_; }
  bool is_minus_infinity() const { return std::isinf(value_) && value_ < 0; }
  bool is_zero() const { return value_ == 0.0; }

  friend bool operator==(const MeanOrder& a, const MeanOrder& b) { return a.value_ == b.value_; }
  friend bool operator!=(const MeanOrder& a, const MeanOrder& b) { return !(a == b); }
  friend bool operator<(const MeanOrder& a, const MeanOrder& b) { return a.value_ < b.value_; }

 private:
  double value_ = 1.0;
};

/// Short textual form used in reports and CLI flags: "-inf", "1", "0.5", ...
inline std::string to_string(const MeanOrder& order) {
  if (order.is_minus_infinity()) return "-inf";
  double v = order.value();
  if (v == static_cast<long long>(v)) return std::to_string(static_cast<long long>(v));
  std::string s = std::to_string(v);
  while (!s.empty() && s.back() == '0') s.pop_back();
  if (!s.empty() && s.back() == '.') s.pop_back();
  return s;
}

inline MeanOrder mean_order_from_string(const std::string& s) {
  if (s == "-inf") return MeanOrder::minus_infinity();
  try {
    size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("");
    return MeanOrder(v);
  } catch (const std::invalid_argument&) {
    throw std::invalid_argument("bad mean order: " + s);
  }
}

}  // namespace mcnoma
