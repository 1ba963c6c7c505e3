#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <mcnoma/mean.hpp>

#include <random>

using namespace mcnoma;

namespace {

VectorXd equal_weights(Index n) { return VectorXd::Constant(n, 1.0 / double(n)); }

VectorXd vec(std::initializer_list<double> values) {
  VectorXd v(Index(values.size()));
  Index i = 0;
  for (double x : values) v(i++) = x;
  return v;
}

}  // namespace

TEST_CASE("mean order parses and prints its extended-real range") {
  CHECK(to_string(MeanOrder(1.0)) == "1");
  CHECK(to_string(MeanOrder(0.0)) == "0");
  CHECK(to_string(MeanOrder(-1.0)) == "-1");
  CHECK(to_string(MeanOrder::minus_infinity()) == "-inf");
  CHECK(to_string(MeanOrder(0.5)) == "0.5");

  CHECK(mean_order_from_string("-inf") == MeanOrder::minus_infinity());
  CHECK(mean_order_from_string("1") == MeanOrder(1.0));
  CHECK(mean_order_from_string("-0.5") == MeanOrder(-0.5));
  CHECK_THROWS_AS(mean_order_from_string("fast"), std::invalid_argument);
  CHECK_THROWS_AS(MeanOrder(1.5), std::invalid_argument);
  CHECK_THROWS_AS(MeanOrder(std::nan("")), std::invalid_argument);

  CHECK(MeanOrder::minus_infinity().is_minus_infinity());
  CHECK(MeanOrder::proportional_fairness().is_zero());
  CHECK(MeanOrder::minus_infinity() < MeanOrder(-1.0));
}

TEST_CASE("named special cases evaluate exactly on small vectors") {
  const VectorXd w3 = equal_weights(3);

  // Arithmetic mean of a constant vector, and of the mixed 1/3 pattern: five
  // rates (1,1,1,3,3) sum to 9, i.e. three per user when three users share it.
  CHECK(generalized_mean(MeanOrder(1.0), w3, vec({3, 3, 3})) == 3.0);
  CHECK(vec({1, 1, 1, 3, 3}).sum() == 3.0 * 3);
  CHECK(generalized_mean(MeanOrder(1.0), equal_weights(5), vec({1, 1, 1, 3, 3})) ==
        doctest::Approx(9.0 / 5.0).epsilon(1e-15));

  // Max-min picks the minimum regardless of weights.
  CHECK(generalized_mean(MeanOrder::minus_infinity(), w3, vec({3, 3, 3})) == 3.0);
  CHECK(generalized_mean(MeanOrder::minus_infinity(), vec({0.7, 0.2, 0.1}), vec({5, 2, 9})) == 2.0);

  // Geometric mean of a constant vector is the constant.
  CHECK(generalized_mean(MeanOrder(0.0), w3, vec({4, 4, 4})) == doctest::Approx(4.0).epsilon(1e-15));

  // Harmonic mean of (2, 2).
  CHECK(generalized_mean(MeanOrder(-1.0), equal_weights(2), vec({2, 2})) ==
        doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("frozen values for non-trivial orders") {
  // Geometric mean of (1, 3): sqrt(3).
  CHECK(generalized_mean(MeanOrder(0.0), equal_weights(2), vec({1, 3})) ==
        doctest::Approx(1.7320508075688772).epsilon(1e-15));
  // Harmonic mean of (1, 2, 4): 3 / (1 + 1/2 + 1/4) = 12/7.
  CHECK(generalized_mean(MeanOrder(-1.0), equal_weights(3), vec({1, 2, 4})) ==
        doctest::Approx(1.7142857142857142).epsilon(1e-15));
  // Geometric mean of (1, 2, 4): cbrt(8) = 2.
  CHECK(generalized_mean(MeanOrder(0.0), equal_weights(3), vec({1, 2, 4})) ==
        doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("zeros pull every non-positive order to zero") {
  const VectorXd w = equal_weights(2);
  const VectorXd x = vec({0, 2});
  CHECK(generalized_mean(MeanOrder(1.0), w, x) == 1.0);
  CHECK(generalized_mean(MeanOrder(0.0), w, x) == 0.0);
  CHECK(generalized_mean(MeanOrder(-1.0), w, x) == 0.0);
  CHECK(generalized_mean(MeanOrder::minus_infinity(), w, x) == 0.0);

  // Subnormal-scale entries are floored for negative orders instead of
  // overflowing x^i.
  CHECK(generalized_mean(MeanOrder(-1.0), w, vec({1e-310, 1})) == 0.0);
  CHECK(generalized_mean(MeanOrder(-1.0), w, vec({1e-200, 1})) > 0.0);
}

TEST_CASE("precondition violations throw") {
  const VectorXd w = equal_weights(2);
  CHECK_THROWS_AS(generalized_mean(MeanOrder(1.0), w, VectorXd()), std::invalid_argument);
  CHECK_THROWS_AS(generalized_mean(MeanOrder(1.0), w, vec({1, 2, 3})), std::invalid_argument);
  CHECK_THROWS_AS(generalized_mean(MeanOrder(1.0), vec({0.4, 0.4}), vec({1, 2})),
                  std::invalid_argument);
  CHECK_THROWS_AS(generalized_mean(MeanOrder(1.0), vec({1.2, -0.2}), vec({1, 2})),
                  std::invalid_argument);
  CHECK_THROWS_AS(generalized_mean(MeanOrder(1.0), w, vec({-1, 2})), std::invalid_argument);
}

TEST_CASE("mean inequality on worked examples") {
  const VectorXd w2 = equal_weights(2);
  auto r = mean_inequality_check(MeanOrder(0.0), MeanOrder(1.0), w2, vec({1, 3}));
  CHECK(r.holds);
  CHECK_FALSE(r.equality);
  CHECK(r.lower == doctest::Approx(1.7320508075688772).epsilon(1e-15));
  CHECK(r.upper == 2.0);

  const VectorXd w3 = equal_weights(3);
  r = mean_inequality_check(MeanOrder(-1.0), MeanOrder(0.0), w3, vec({1, 2, 4}));
  CHECK(r.holds);
  CHECK_FALSE(r.equality);
  CHECK(r.lower == doctest::Approx(12.0 / 7.0).epsilon(1e-15));
  CHECK(r.upper == doctest::Approx(2.0).epsilon(1e-14));

  r = mean_inequality_check(MeanOrder::minus_infinity(), MeanOrder(1.0), w3, vec({3, 3, 3}));
  CHECK(r.holds);
  CHECK(r.equality);
  CHECK(r.lower == r.upper);

  CHECK_THROWS_AS(mean_inequality_check(MeanOrder(1.0), MeanOrder(1.0), w2, vec({1, 2})),
                  std::invalid_argument);
  CHECK_THROWS_AS(mean_inequality_check(MeanOrder(1.0), MeanOrder(0.0), w2, vec({1, 2})),
                  std::invalid_argument);
}

TEST_CASE("threshold decision uses absolute slack") {
  CHECK(decide(3.0, 3.0));
  CHECK(decide(3.0, 3.0 - 1e-12));
  CHECK(decide(3.0, 3.0 + 1e-12));
  CHECK_FALSE(decide(3.0, 2.9));
  CHECK_FALSE(decide(3.0, 3.0 - 1e-6));

  DecisionInstance<double> d;
  d.threshold = 2.0;
  CHECK(decide(d, 2.0));
  CHECK_FALSE(decide(d, 1.5));
}

TEST_CASE("property: raising one entry never lowers the mean") {
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> value(0.1, 5.0);
  std::uniform_real_distribution<double> order_draw(-3.0, 1.0);
  std::uniform_int_distribution<int> size_draw(2, 6);

  for (int trial = 0; trial < 300; ++trial) {
    const int n = size_draw(rng);
    VectorXd x(n), w(n);
    for (int i = 0; i < n; ++i) {
      x(i) = value(rng);
      w(i) = value(rng);
    }
    w /= w.sum();
    const MeanOrder order = trial % 5 == 0 ? MeanOrder::minus_infinity()
                                           : MeanOrder(order_draw(rng));
    const double before = generalized_mean(order, w, x);
    VectorXd y = x;
    y(trial % n) += 0.5;
    const double after = generalized_mean(order, w, y);
    CHECK(after >= before - 1e-12);
  }
}

TEST_CASE("property: positive homogeneity") {
  std::mt19937_64 rng(102);
  std::uniform_real_distribution<double> value(0.1, 5.0);
  std::uniform_real_distribution<double> scale_draw(0.2, 8.0);

  for (int trial = 0; trial < 200; ++trial) {
    VectorXd x(4), w(4);
    for (int i = 0; i < 4; ++i) {
      x(i) = value(rng);
      w(i) = value(rng);
    }
    w /= w.sum();
    const double c = scale_draw(rng);
    for (const MeanOrder order :
         {MeanOrder(1.0), MeanOrder(0.0), MeanOrder(-1.0), MeanOrder(-2.5),
          MeanOrder::minus_infinity()}) {
      const double lhs = generalized_mean(order, w, VectorXd(c * x));
      const double rhs = c * generalized_mean(order, w, x);
      CHECK(std::abs(lhs - rhs) <= 1e-10 * std::max(1.0, std::abs(rhs)));
    }
  }
}

TEST_CASE("property: small orders approach the geometric mean") {
  std::mt19937_64 rng(103);
  std::uniform_real_distribution<double> value(0.5, 4.0);
  for (int trial = 0; trial < 100; ++trial) {
    VectorXd x(5);
    for (int i = 0; i < 5; ++i) x(i) = value(rng);
    const VectorXd w = equal_weights(5);
    const double geo = generalized_mean(MeanOrder(0.0), w, x);
    CHECK(generalized_mean(MeanOrder(1e-6), w, x) == doctest::Approx(geo).epsilon(1e-4));
    CHECK(generalized_mean(MeanOrder(-1e-6), w, x) == doctest::Approx(geo).epsilon(1e-4));
  }
}

TEST_CASE("property: ordering across orders with equality only for constants") {
  std::mt19937_64 rng(104);
  std::uniform_real_distribution<double> value(0.2, 4.0);
  std::uniform_int_distribution<int> size_draw(2, 6);

  int constant_draws = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = size_draw(rng);
    VectorXd x(n), w(n);
    const bool make_constant = trial % 10 == 0;
    const double base = value(rng);
    for (int i = 0; i < n; ++i) {
      x(i) = make_constant ? base : value(rng);
      w(i) = value(rng);
    }
    if (make_constant) ++constant_draws;
    // Keep non-constant draws visibly spread so strictness is testable.
    if (!make_constant && (x.maxCoeff() - x.minCoeff()) < 0.05) x(0) += 0.5;
    w /= w.sum();

    const MeanOrder r_order = trial % 3 == 0 ? MeanOrder::minus_infinity() : MeanOrder(-1.0);
    const auto result = mean_inequality_check(r_order, MeanOrder(1.0), w, x);
    CHECK(result.holds);
    CHECK(result.equality == make_constant);
    if (make_constant) {
      CHECK(std::abs(result.upper - result.lower) <= 1e-12);
    } else {
      CHECK(result.upper - result.lower > 1e-9);
    }
  }
  CHECK(constant_draws == 100);
}
