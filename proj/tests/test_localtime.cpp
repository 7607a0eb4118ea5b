#include <doctest.h>

#include <cmath>
#include <numbers>

#include "mbm/errors.hpp"
#include "mbm/localtime.hpp"
#include "mbm/parallel.hpp"
#include "oracles.hpp"

using namespace mbm;
using namespace mbm::localtime;
using specfun::HurstFunctional;

namespace {

constexpr double pi = std::numbers::pi;

const simulator::MbmPathSet& shared_paths(unsigned d) {
  auto build = [](unsigned dim) {
    simulator::SimulationConfig c{HurstFunctional::linear(0.55, 0.3)};
    c.s = 500;
    c.n_paths = 10000;
    c.d = dim;
    c.seed = 2024 + dim;
    return simulator::simulate_exact(c);
  };
  static const auto one = build(1);
  static const auto two = build(2);
  return d == 1 ? one : two;
}

}  // namespace

TEST_CASE("regularized delta") {
  const double zero2[] = {0.0, 0.0};
  CHECK(delta_eps(zero2, 0.1) == doctest::Approx(1.0 / (2 * pi * 0.1)).epsilon(1e-15));
  CHECK(delta_eps(zero2, 0.1) == doctest::Approx(1.59155).epsilon(1e-5));

  // product of scalar Gaussian densities with variance eps
  auto phi = [](double x, double e) { return std::exp(-x * x / (2 * e)) / std::sqrt(2 * pi * e); };
  const double x[] = {1.0, 0.0};
  CHECK(delta_eps(x, 0.5) == doctest::Approx(phi(1.0, 0.5) * phi(0.0, 0.5)).epsilon(1e-14));
  CHECK(delta_eps(x, 0.5) == doctest::Approx(std::exp(-1.0) / pi).epsilon(1e-14));

  SUBCASE("unit mass") {
    auto one_d = [](double y) {
      const double p[] = {y};
      return delta_eps(p, 0.3);
    };
    CHECK(std::abs(oracle::tanh_sinh(one_d, -12.0, 12.0) - 1.0) < 1e-8);
    // d = 2 in polar coordinates
    auto radial = [](double r) {
      const double p[] = {r, 0.0};
      return 2 * pi * r * delta_eps(p, 0.3);
    };
    CHECK(std::abs(oracle::tanh_sinh(radial, 0.0, 12.0) - 1.0) < 1e-8);
  }
}

TEST_CASE("expected local time") {
  const auto c6 = HurstFunctional::constant(0.6);
  const auto lin = HurstFunctional::linear(0.55, 0.2);

  CHECK(expected_local_time(c6, 0.0, 1.0, 1) ==
        doctest::Approx(std::pow(2 * pi, -0.5) / 0.4).epsilon(1e-9));
  const auto c6T = HurstFunctional::constant(0.6, 2.5);
  CHECK(expected_local_time(c6T, 0.0, 2.5, 1) ==
        doctest::Approx(std::pow(2 * pi, -0.5) * std::pow(2.5, 0.4) / 0.4).epsilon(1e-9));
  CHECK_THROWS_AS(expected_local_time(c6, 0.0, 1.0, 2), DivergenceError);

  SUBCASE("independent quadrature for eps > 0") {
    for (unsigned d : {1u, 2u, 3u}) {
      for (double eps : {0.1, 0.01}) {
        auto g = [&](double t) { return std::pow(2 * pi * (eps + std::pow(t, 2 * lin(t))), -0.5 * d); };
        const double ref = oracle::tanh_sinh_pieces(g, {0.0, 0.05, 0.3, 1.0});
        CHECK(expected_local_time(lin, eps, 1.0, d) == doctest::Approx(ref).epsilon(1e-9));
      }
    }
  }
  SUBCASE("two resolutions agree") {
    const double coarse = expected_local_time(lin, 0.01, 1.0, 2, {.abs_tol = 1e-8, .rel_tol = 1e-7});
    const double fine = expected_local_time(lin, 0.01, 1.0, 2, {.abs_tol = 1e-14, .rel_tol = 1e-12});
    CHECK(std::isfinite(fine));
    CHECK(std::abs(coarse - fine) / fine <= 1e-6);
  }
  SUBCASE("monotone in eps and T") {
    for (unsigned d : {1u, 2u}) {
      double prev = INFINITY;
      for (double eps : {0.001, 0.01, 0.05, 0.2, 1.0}) {
        const double v = expected_local_time(lin, eps, 1.0, d);
        CHECK(v < prev);
        prev = v;
      }
      prev = 0.0;
      for (double T : {0.1, 0.4, 0.7, 1.0}) {
        const double v = expected_local_time(lin, 0.05, T, d);
        CHECK(v > prev);
        prev = v;
      }
    }
  }
  SUBCASE("eps = 0 allowed exactly when (A2) holds with N = 0") {
    for (double H : {0.3, 0.45, 0.6, 0.9}) {
      for (unsigned d : {1u, 2u, 3u}) {
        const auto h = HurstFunctional::constant(H);
        const bool a2 = specfun::check_A2(h, {0, d}).holds;
        if (a2) {
          CHECK(std::isfinite(expected_local_time(h, 0.0, 1.0, d)));
        } else {
          CHECK_THROWS_AS(expected_local_time(h, 0.0, 1.0, d), DivergenceError);
        }
      }
    }
  }
  CHECK_THROWS_AS(expected_local_time(lin, -0.1, 1.0, 1), DomainError);
}

TEST_CASE("Monte Carlo local time") {
  const auto& p1 = shared_paths(1);
  const auto& p2 = shared_paths(2);
  const auto& h = p1.config.h;

  SUBCASE("mean matches the analytic expectation") {
    for (double eps : {0.1, 0.05, 0.01}) {
      for (const auto* p : {&p1, &p2}) {
        const auto est = local_time_mc(*p, {eps, 0});
        const double ref = expected_local_time(h, eps, 1.0, p->dim());
        CHECK(std::abs(est.estimate - ref) <= 4.0 * est.standard_error);
        CHECK(est.n_paths == 10000);
        CHECK(est.resolution == 500);
        CHECK_FALSE(est.warning.has_value());
      }
    }
  }
  SUBCASE("N = 1 is centered") {
    for (double eps : {0.1, 0.01}) {
      const auto est = local_time_mc(p2, {eps, 1});
      CHECK(std::abs(est.estimate) <= 4.0 * est.standard_error);
    }
  }
  SUBCASE("estimates decrease in eps on a fixed path set") {
    double prev = INFINITY;
    for (double eps : {0.01, 0.05, 0.1, 0.5}) {
      const double v = local_time_mc(p1, {eps, 0}).estimate;
      CHECK(v < prev);
      prev = v;
    }
  }
  SUBCASE("resolution warning") {
    const auto est = local_time_mc(p1, {1e-5, 0});
    REQUIRE(est.warning.has_value());
    CHECK(est.warning->find("grid too coarse") != std::string::npos);
  }
  SUBCASE("schedule independence") {
    set_thread_count(1);
    const auto a = local_time_mc(p2, {0.01, 0});
    set_thread_count(4);
    const auto b = local_time_mc(p2, {0.01, 0});
    set_thread_count(0);
    CHECK(a.estimate == b.estimate);
    CHECK(a.standard_error == b.standard_error);
  }
  CHECK_THROWS_AS(local_time_mc(p1, {0.0, 0}), DomainError);
  CHECK_THROWS_AS(local_time_mc(p1, {0.1, 2}), ConfigError);
}

TEST_CASE("occupation histogram") {
  const auto& p1 = shared_paths(1);
  // 161 bins of width 0.1, centre bin [-0.05, 0.05]
  const HistogramBins bins{-8.05, 8.05, 161};
  const auto hist = occupation_histogram(p1, bins);
  CHECK(hist.edges.size() == 162);
  CHECK(hist.mean_total_mass == doctest::Approx(1.0).epsilon(1e-12));
  double mass = 0.0;
  for (double v : hist.density) mass += v * 0.1;
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-9));

  SUBCASE("centre bin agrees with a variance-matched delta") {
    const double w = 0.1;
    const auto est = local_time_mc(p1, {w * w / 12.0, 0});
    const double se = std::hypot(est.standard_error, hist.standard_error[80]);
    CHECK(std::abs(hist.density[80] - est.estimate) <= 4.0 * se);
  }
  SUBCASE("deterministic") {
    const auto again = occupation_histogram(p1, bins);
    CHECK(again.density == hist.density);
  }
  CHECK_THROWS_AS(occupation_histogram(p1, {-0.5, 0.5, 10}), DomainError);
  CHECK_THROWS_AS(occupation_histogram(p1, {1.0, 1.0, 10}), DomainError);
  CHECK_THROWS_AS(occupation_histogram(shared_paths(2), bins), DomainError);
}
