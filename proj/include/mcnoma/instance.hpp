#pragma once

#include <mcnoma/types.hpp>

#include <sstream>
#include <vector>

namespace mcnoma {

/// A multi-carrier NOMA problem: K users sharing N subcarriers, at most M
/// users superposed per subcarrier. Matrices are K x N, user k in row k.
template <class Scalar>
struct Instance {
  Index num_users = 0;
  Index num_subcarriers = 0;
  Index max_multiplexed = 1;

  Vector<Scalar> bandwidths;         // N, positive
  Matrix<Scalar> gains;              // K x N, non-negative
  Matrix<Scalar> noises;             // K x N, positive; uplink: equal within a column
  Vector<Scalar> user_budgets;       // K, positive
  Matrix<Scalar> per_subcarrier_caps;  // K x N, non-negative
  Vector<Scalar> weights;            // K, positive, sums to 1

  MeanOrder mean_order{1.0};
  Direction direction = Direction::downlink;

  void validate() const;
};

using Instanced = Instance<double>;

/// Candidate transmit powers, same K x N layout as the instance matrices.
template <class Scalar>
struct PowerAllocation {
  Matrix<Scalar> powers;

  static PowerAllocation zero(Index num_users, Index num_subcarriers) {
    PowerAllocation p;
    p.powers = Matrix<Scalar>::Zero(num_users, num_subcarriers);
    return p;
  }

  /// Snap solver dust below the activity clamp to exact zero.
  void clamp_dust(Scalar threshold = Scalar(kActivityClamp)) {
    powers = powers.unaryExpr([threshold](Scalar v) { return v < threshold ? Scalar(0) : v; });
  }
};

using PowerAllocationd = PowerAllocation<double>;

/// Per-link rates plus their per-user and per-subcarrier sums.
template <class Scalar>
struct RateVector {
  Matrix<Scalar> per_user_subcarrier;  // K x N
  Vector<Scalar> per_user;             // row sums
  Vector<Scalar> per_subcarrier;       // column sums
};

/// Ordered decoding lists, one per subcarrier: position 0 is decoded first.
struct MultiplexSet {
  std::vector<std::vector<Index>> order;
};

/// A fixed a-priori choice of which users may transmit on each subcarrier.
struct Assignment {
  std::vector<std::vector<Index>> users;  // one list per subcarrier
};

template <class Scalar>
void Instance<Scalar>::validate() const {
  auto fail = [](const std::string& what) { throw std::invalid_argument("invalid instance: " + what); };
  if (num_users < 1) fail("num_users must be >= 1");
  if (num_subcarriers < 1) fail("num_subcarriers must be >= 1");
  if (max_multiplexed < 1) fail("max_multiplexed must be >= 1");
  const Index K = num_users, N = num_subcarriers;
  if (bandwidths.size() != N) fail("bandwidths size mismatch");
  if (gains.rows() != K || gains.cols() != N) fail("gains shape mismatch");
  if (noises.rows() != K || noises.cols() != N) fail("noises shape mismatch");
  if (per_subcarrier_caps.rows() != K || per_subcarrier_caps.cols() != N) fail("caps shape mismatch");
  if (user_budgets.size() != K) fail("user_budgets size mismatch");
  if (weights.size() != K) fail("weights size mismatch");

  if (!bandwidths.allFinite() || !(bandwidths.array() > Scalar(0)).all()) fail("bandwidths must be positive finite");
  if (!gains.allFinite() || !(gains.array() >= Scalar(0)).all()) fail("gains must be non-negative finite");
  if (!noises.allFinite() || !(noises.array() > Scalar(0)).all()) fail("noises must be positive finite");
  if (!user_budgets.allFinite() || !(user_budgets.array() > Scalar(0)).all()) fail("budgets must be positive finite");
  if (!per_subcarrier_caps.allFinite() || !(per_subcarrier_caps.array() >= Scalar(0)).all())
    fail("caps must be non-negative finite");
  if (!weights.allFinite() || !(weights.array() > Scalar(0)).all()) fail("weights must be positive finite");

  const Scalar weight_sum = weights.sum();
  if (std::abs(double(weight_sum) - 1.0) > kMeanCompareTol) {
    std::ostringstream os;
    os << "weights must sum to 1 (got " << weight_sum << ")";
    fail(os.str());
  }

  if (direction == Direction::uplink) {
    // One receiver: the noise is a property of the subcarrier, not the user.
    for (Index n = 0; n < N; ++n) {
      const Scalar ref = noises(0, n);
      for (Index k = 1; k < K; ++k) {
        if (std::abs(double(noises(k, n) - ref)) > kMeanCompareTol * std::max(1.0, std::abs(double(ref))))
          fail("uplink noises must be identical within each subcarrier column");
      }
    }
  }
}

namespace detail {
template <class Derived>
bool bitwise_equal(const Eigen::MatrixBase<Derived>& a, const Eigen::MatrixBase<Derived>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  return (a.derived().array() == b.derived().array()).all();
}
}  // namespace detail

template <class Scalar>
bool operator==(const Instance<Scalar>& a, const Instance<Scalar>& b) {
  return a.num_users == b.num_users && a.num_subcarriers == b.num_subcarriers &&
         a.max_multiplexed == b.max_multiplexed && detail::bitwise_equal(a.bandwidths, b.bandwidths) &&
         detail::bitwise_equal(a.gains, b.gains) && detail::bitwise_equal(a.noises, b.noises) &&
         detail::bitwise_equal(a.user_budgets, b.user_budgets) &&
         detail::bitwise_equal(a.per_subcarrier_caps, b.per_subcarrier_caps) &&
         detail::bitwise_equal(a.weights, b.weights) && a.mean_order == b.mean_order &&
         a.direction == b.direction;
}

}  // namespace mcnoma
