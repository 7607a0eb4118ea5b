#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "mbm/errors.hpp"
#include "mbm/mh_operator.hpp"
#include "oracles.hpp"

using namespace mbm;
using namespace mbm::mh;
using specfun::HurstFunctional;

namespace {

ScalarFunction gaussian(double a, double m, double s) {
  ScalarFunction f;
  f.eval = [=](double x) { return a * std::exp(-0.5 * (x - m) * (x - m) / (s * s)); };
  return f;
}

}  // namespace

TEST_CASE("closed form of M_H on indicators") {
  for (double u : {-3.0, 0.0, 0.4, 7.0}) CHECK(mh_indicator(0.7, 0.0, u) == 0.0);

  // frozen from a 30-digit evaluation of (gamma(3/4)/(1/4)) * 2 * 0.5^{1/4}
  CHECK(mh_indicator(0.75, 1.0, 0.5) == doctest::Approx(0.973568855615686063).epsilon(1e-13));

  // defining integral gamma(H) \int_{-u}^{t-u} |y|^{H-3/2} dy split at y = 0
  for (double H : {0.55, 0.75, 0.95}) {
    for (double u : {-1.3, 0.2, 0.5, 0.9, 2.5}) {
      const double t = 1.0;
      const double b = H - 1.5;
      auto k = [&](double y) { return std::pow(std::abs(y), b); };
      double ref;
      if (-u < 0.0 && t - u > 0.0) {
        ref = oracle::tanh_sinh_power(k, 0.0, u) + oracle::tanh_sinh_power(k, 0.0, t - u);
      } else if (-u >= 0.0) {
        ref = oracle::tanh_sinh_power(k, -u, t - u);
      } else {
        ref = -oracle::tanh_sinh_power(k, t - u, -u);
      }
      ref *= oracle::gamma_factor(H);
      CHECK(std::abs(mh_indicator(H, t, u) - ref) < 1e-6);
    }
  }

  SUBCASE("Hoelder continuity at the kinks") {
    for (double H : {0.55, 0.8}) {
      const double t = 1.3, beta = H - 0.5, d = 1e-9;
      const double bound = 2.0 * oracle::gamma_factor(H) / beta * std::pow(d, beta) * (1 + 1e-6);
      for (double c : {0.0, t}) {
        CHECK(std::abs(mh_indicator(H, t, c - d) - mh_indicator(H, t, c + d)) <= bound);
      }
    }
  }
  SUBCASE("decay like |u|^{H-3/2}") {
    const double H = 0.7;
    const double r = mh_indicator(H, 1.0, 2e4) / mh_indicator(H, 1.0, 1e4);
    CHECK(r == doctest::Approx(std::pow(2.0, H - 1.5)).epsilon(1e-4));
  }
  CHECK_THROWS_AS(mh_indicator(0.5, 1.0, 0.3), DomainError);
}

TEST_CASE("isometry: ||M_H 1_[0,t)||^2 = t^{2H}") {
  for (double H : {0.55, 0.75, 0.95}) {
    for (double t : {0.5, 1.0, 2.0}) {
      const double v = oracle::isometry_norm_sq([&](double u) { return mh_indicator(H, t, u); }, t);
      CHECK(std::abs(v - std::pow(t, 2 * H)) / std::pow(t, 2 * H) <= 1e-4);
    }
  }
}

TEST_CASE("mh_apply by quadrature") {
  SUBCASE("matches the indicator closed form at 50 points") {
    for (double H : {0.6, 0.85}) {
      const double t = 0.8;
      const auto f = indicator(t);
      for (int i = 0; i < 50; ++i) {
        const double x = -2.0 + 4.0 * i / 49.0;
        CHECK(std::abs(mh_apply(H, f, x) - mh_indicator(H, t, x)) < 1e-6);
      }
    }
  }
  SUBCASE("linearity") {
    const auto f = gaussian(1.0, 0.2, 0.5);
    const auto g = gaussian(-0.7, -0.4, 0.3);
    ScalarFunction combo;
    combo.eval = [&](double x) { return 2.0 * f(x) - 3.0 * g(x); };
    for (double x : {-1.0, 0.0, 0.35, 1.7}) {
      const double lhs = mh_apply(0.7, combo, x);
      const double rhs = 2.0 * mh_apply(0.7, f, x) - 3.0 * mh_apply(0.7, g, x);
      CHECK(lhs == doctest::Approx(rhs).epsilon(1e-8));
    }
  }
  SUBCASE("self-adjoint pairing for Gaussian bumps") {
    const auto f = gaussian(1.0, 0.3, 0.4);
    const auto g = gaussian(0.8, -0.5, 0.6);
    const double H = 0.7;
    quad::Options outer{1e-9, 1e-8, 4000};
    auto lhs = quad::gauss_kronrod([&](double x) { return f(x) * mh_apply(H, g, x); }, -4.0, 4.0, outer);
    auto rhs = quad::gauss_kronrod([&](double x) { return mh_apply(H, f, x) * g(x); }, -6.0, 6.0, outer);
    CHECK(std::abs(lhs.value - rhs.value) <= 1e-5);
  }
}

TEST_CASE("h inner product") {
  const auto c = HurstFunctional::constant(0.7);
  const auto l = HurstFunctional::linear(0.55, 0.3);

  for (double t : {0.1, 0.5, 1.0}) {
    CHECK(h_inner_product(t, t, l) == std::pow(t, 2 * l(t)));
  }
  for (double t : {0.2, 0.9}) {
    for (double s : {0.1, 0.6, 1.0}) {
      const double fbm = 0.5 * (std::pow(t, 1.4) + std::pow(s, 1.4) - std::pow(std::abs(t - s), 1.4));
      CHECK(h_inner_product(t, s, c) == doctest::Approx(fbm).epsilon(1e-14));
      CHECK(h_inner_product(t, s, l) == h_inner_product(s, t, l));
    }
  }

  SUBCASE("weighted-Fourier integral") {
    const double t = 0.3, s = 0.7;
    CHECK(std::abs(h_inner_product(t, s, l) - oracle::weighted_fourier_covariance(t, s, l(t), l(s))) <= 1e-4);
    for (double tt : {0.25, 1.0}) {
      for (double ss : {0.5, 0.75}) {
        CHECK(std::abs(h_inner_product(tt, ss, c) - oracle::weighted_fourier_covariance(tt, ss, 0.7, 0.7)) <=
              1e-4);
      }
    }
  }
}

TEST_CASE("covariance matrix") {
  const auto c = HurstFunctional::constant(0.65);
  const auto l = HurstFunctional::linear(0.55, 0.35);

  const double one[] = {0.4};
  auto m1 = covariance_matrix(one, l);
  CHECK(m1.values.rows() == 1);
  CHECK(m1.values(0, 0) == std::pow(0.4, 2 * l(0.4)));

  std::vector<double> grid8;
  for (int i = 1; i <= 8; ++i) grid8.push_back(i / 8.0);
  auto m8 = covariance_matrix(grid8, c);
  for (int i = 0; i < 8; ++i) {
    for (int j = 0; j < 8; ++j) {
      const double t = grid8[i], s = grid8[j];
      const double fbm = 0.5 * (std::pow(t, 1.3) + std::pow(s, 1.3) - std::pow(std::abs(t - s), 1.3));
      CHECK(std::abs(m8.values(i, j) - fbm) < 1e-12);
    }
  }

  std::vector<double> grid64;
  for (int i = 1; i <= 64; ++i) grid64.push_back(i / 64.0);
  auto m64 = covariance_matrix(grid64, l);
  CHECK(m64.values.isApprox(m64.values.transpose(), 0.0));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m64.values);
  CHECK(es.eigenvalues().minCoeff() >= -1e-8 * m64.trace());

  std::ostringstream os;
  m1.write_csv(os);
  CHECK(os.str() == "t,0.40000000000000002\n0.40000000000000002," + [&] {
          std::ostringstream v;
          v.precision(17);
          v << m1.values(0, 0);
          return v.str();
        }() + "\n");

  const double unsorted[] = {0.5, 0.2};
  CHECK_THROWS_AS(covariance_matrix(unsorted, l), ConfigError);
  const double outside[] = {0.5, 1.5};
  CHECK_THROWS_AS(covariance_matrix(outside, l), ConfigError);
  const double zero[] = {0.0, 0.5};
  CHECK_THROWS_AS(covariance_matrix(zero, l), ConfigError);
}
