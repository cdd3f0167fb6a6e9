#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "irt/model.hpp"

using irt::ItemParameters;

namespace {

// Central difference of icc_prob in theta, evaluated in long double so
// cancellation stays below the 1e-6 relative tolerance for small slopes.
double fd_slope(double theta, const ItemParameters& item, long double h = 1e-5L) {
  const irt::ItemParams<long double> wide{item.alpha, item.beta, item.gamma};
  const long double t = theta;
  return static_cast<double>((irt::icc_prob(t + h, wide) - irt::icc_prob(t - h, wide)) / (2 * h));
}

}  // namespace

TEST_CASE("icc_prob at reference points") {
  CHECK(irt::icc_prob(0.0, ItemParameters{1.0, 0.0, 1e-4}) == doctest::Approx(0.50005).epsilon(1e-12));
  CHECK(irt::icc_prob(-1e6, ItemParameters{1.7, 0.3, 0.3}) == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(irt::icc_prob(1.0, ItemParameters{2.0, 0.0, 0.25}) ==
        doctest::Approx(0.910597808483411833).epsilon(1e-12));
}

TEST_CASE("icc_slope at reference points") {
  CHECK(irt::icc_slope(0.0, ItemParameters{1.0, 0.0, 0.0}) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(irt::icc_slope(1.0, ItemParameters{2.0, 0.0, 0.25}) ==
        doctest::Approx(0.157490378105259776).epsilon(1e-12));
  for (double alpha : {0.1, 1.0, 7.0}) {
    CHECK(irt::icc_slope(1e4, ItemParameters{alpha, 0.0, 0.2}) < 1e-30);
    CHECK(irt::icc_slope(-1e4, ItemParameters{alpha, 0.0, 0.2}) < 1e-30);
  }
}

TEST_CASE("sigmoid never overflows") {
  CHECK(irt::sigmoid(800.0) == 1.0);
  CHECK(irt::sigmoid(-800.0) == 0.0);
  CHECK(std::isfinite(irt::icc_prob(-1000.0, ItemParameters{5.0, 0.0, 0.1})));
  CHECK(std::isfinite(irt::icc_slope(1000.0, ItemParameters{5.0, 0.0, 0.1})));
}

TEST_CASE("response_loglik") {
  CHECK(irt::response_loglik(true, 0.0, ItemParameters{1.0, 0.0, 1e-300}) ==
        doctest::Approx(-0.693147180559945).epsilon(1e-12));
  CHECK(irt::response_loglik(false, -1e6, ItemParameters{1.0, 0.0, 0.3}) ==
        doctest::Approx(-0.356674943938732379).epsilon(1e-12));
  // Clamp boundary on both sides.
  CHECK(irt::response_loglik(true, 1e6, ItemParameters{1.0, 0.0, 0.3}) ==
        doctest::Approx(-1.00000005e-7).epsilon(1e-9));
  const double floor = irt::response_loglik(false, 1e6, ItemParameters{1.0, 0.0, 0.3});
  CHECK(floor == doctest::Approx(std::log(1e-7)).epsilon(1e-12));
  CHECK(irt::response_loglik(true, 0.3, ItemParameters{2.0, 0.1, 0.2}) <= 0.0);
}

TEST_CASE("leh_score is icc_slope at theta_star") {
  CHECK(irt::leh_score(ItemParameters{1.0, 2.0, 0.0}, 2.0) == doctest::Approx(0.25));
  CHECK(irt::leh_score(ItemParameters{3.0, 4.0 - 10.0, 0.2}, 4.0) < 1e-12);
  CHECK(irt::leh_score(ItemParameters{2.0, 0.5 - 1.0, 0.25}, 0.5) ==
        doctest::Approx(0.157490378105259776).epsilon(1e-12));
  const ItemParameters item{0.8, -0.4, 0.15};
  for (double t : {-3.0, 0.0, 2.5}) CHECK(irt::leh_score(item, t) == irt::icc_slope(t, item));
}

TEST_CASE("property: monotone, asymptotes, symmetric slope, positive LEH") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u_theta(-6, 6), u_alpha(0.1, 5), u_beta(-3, 3),
      u_gamma(0.01, 0.6), u_d(0, 4);
  for (int k = 0; k < 500; ++k) {
    const ItemParameters item{u_alpha(rng), u_beta(rng), u_gamma(rng)};
    double a = u_theta(rng), b = u_theta(rng);
    if (a > b) std::swap(a, b);
    if (b - a > 1e-9) CHECK(irt::icc_prob(a, item) < irt::icc_prob(b, item));

    CHECK(std::abs(irt::icc_prob(item.beta - 40 / item.alpha, item) - item.gamma) < 1e-6);
    CHECK(std::abs(irt::icc_prob(item.beta + 40 / item.alpha, item) - 1.0) < 1e-6);

    const double d = u_d(rng);
    CHECK(irt::icc_slope(item.beta + d, item) ==
          doctest::Approx(irt::icc_slope(item.beta - d, item)).epsilon(1e-12));
    CHECK(irt::leh_score(item, u_theta(rng)) > 0.0);
  }
}

TEST_CASE("property: analytic slope matches finite differences on the grid") {
  for (double alpha : {0.1, 1.0, 5.0})
    for (double beta : {-3.0, 0.0, 3.0})
      for (double gamma : {0.01, 0.3, 0.6})
        for (double theta = -5.0; theta <= 5.0; theta += 0.25) {
          const ItemParameters item{alpha, beta, gamma};
          const double analytic = irt::icc_slope(theta, item);
          const double fd = fd_slope(theta, item);
          // 1e-13 is the long-double difference quotient's own rounding
          // floor (ulp(1) / h); below it only the absolute bound is meaningful.
          CHECK(std::abs(analytic - fd) <= std::max(1e-6 * analytic, 1e-13));
        }
}

TEST_CASE("templated kernels agree across scalar types") {
  const irt::ItemParams<long double> wide{2.0L, 0.0L, 0.25L};
  CHECK(static_cast<double>(irt::icc_prob(1.0L, wide)) ==
        doctest::Approx(irt::icc_prob(1.0, ItemParameters{2.0, 0.0, 0.25})).epsilon(1e-15));
}
