#include "mbm/mh_operator.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

#include "mbm/errors.hpp"
#include "mbm/parallel.hpp"

namespace mbm::mh {

namespace {

double signed_power(double x, double p) {
  if (x == 0.0) return 0.0;
  return x > 0.0 ? std::pow(x, p) : -std::pow(-x, p);
}

constexpr double kTailThreshold = 1e-14;
constexpr double kSplit = 1.0;

// Smallest R (doubling from 1) such that |f| stays below the threshold on
// samples of [x + R, x + 2R] and [x - 2R, x - R].
double tail_cutoff(const ScalarFunction& f, double x) {
  for (double R = 1.0; R < 1e8; R *= 2.0) {
    bool small = true;
    for (int i = 0; i <= 16 && small; ++i) {
      const double y = R * (1.0 + i / 16.0);
      small = std::abs(f(x + y)) < kTailThreshold && std::abs(f(x - y)) < kTailThreshold;
    }
    if (small) return R;
  }
  throw NumericalError("mh_apply: test function does not decay below 1e-14");
}

}  // namespace

double mh_indicator(double H, double t, double u) {
  const double g = specfun::gamma_factor(H);
  if (t == 0.0) return 0.0;
  const double beta = H - 0.5;
  if (std::abs(u) > 2.0 * std::abs(t)) {
    // far field: the two powers nearly cancel
    const double r = -std::copysign(std::pow(std::abs(u), beta), u) * std::expm1(beta * std::log1p(-t / u));
    return g / beta * r;
  }
  return g / beta * (signed_power(t - u, beta) + signed_power(u, beta));
}

ScalarFunction indicator(double t) {
  ScalarFunction f;
  f.eval = [t](double x) { return (x >= 0.0 && x < t) ? 1.0 : 0.0; };
  f.support = std::pair{0.0, t};
  f.breakpoints = {0.0, t};
  return f;
}

double mh_apply(double H, const ScalarFunction& f, double x, const quad::Options& opts) {
  const double g = specfun::gamma_factor(H);
  const double beta = H - 1.5;

  double lo, hi;
  if (f.support) {
    lo = f.support->first - x;
    hi = f.support->second - x;
  } else {
    const double R = tail_cutoff(f, x);
    lo = -2.0 * R;
    hi = 2.0 * R;
  }
  if (!(hi > lo)) return 0.0;

  std::vector<double> cuts = {lo, hi, 0.0, -kSplit, kSplit};
  for (double b : f.breakpoints) cuts.push_back(b - x);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  cuts.erase(std::remove_if(cuts.begin(), cuts.end(), [&](double c) { return c < lo || c > hi; }),
             cuts.end());

  auto integrand = [&](double y) { return std::pow(std::abs(y), beta) * f(x + y); };
  quad::Result total;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double a = cuts[i];
    const double b = cuts[i + 1];
    if (a == 0.0) {
      total += quad::integrate_singular(integrand, 0.0, b, beta, opts);
    } else if (b == 0.0) {
      quad::Result piece = quad::integrate_singular(integrand, 0.0, a, beta, opts);
      piece.value = -piece.value;
      total += piece;
    } else {
      total += quad::gauss_kronrod(integrand, a, b, opts);
    }
  }
  return g * quad::value_or_throw(total, "mh_apply");
}

double h_inner_product(double t, double s, const specfun::HurstFunctional& h) {
  if (t < 0.0 || s < 0.0) throw DomainError("h_inner_product: times must be nonnegative");
  if (t == 0.0 || s == 0.0) return 0.0;
  const double ht = h(t);
  const double hs = h(s);
  const double a = ht + hs;
  double ratio = 1.0;
  if (ht != hs) {
    const double c = specfun::normalizing_constant(0.5 * a);
    ratio = c * c / (specfun::normalizing_constant(ht) * specfun::normalizing_constant(hs));
  }
  return ratio * 0.5 * (std::pow(t, a) + std::pow(s, a) - std::pow(std::abs(t - s), a));
}

double CovarianceMatrix::min_eigenvalue() const {
  if (values.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(values, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

void CovarianceMatrix::write_csv(std::ostream& os) const {
  const auto old_precision = os.precision(17);
  os << "t";
  for (double t : grid) os << ',' << t;
  os << '\n';
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    os << grid[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < values.cols(); ++j) os << ',' << values(i, j);
    os << '\n';
  }
  os.precision(old_precision);
}

CovarianceMatrix covariance_matrix(std::span<const double> grid, const specfun::HurstFunctional& h,
                                   bool check_psd) {
  if (grid.empty()) throw ConfigError("covariance_matrix: empty grid");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] > 0.0) || grid[i] > h.horizon()) {
      throw ConfigError("covariance_matrix: grid points must lie in (0, T]");
    }
    if (i > 0 && !(grid[i] > grid[i - 1])) {
      throw ConfigError("covariance_matrix: grid must be strictly increasing");
    }
  }
  h.validate(grid);

  const auto n = static_cast<Eigen::Index>(grid.size());
  CovarianceMatrix cov{{grid.begin(), grid.end()}, Eigen::MatrixXd(n, n)};
  parallel_for(grid.size(), [&](std::size_t i) {
    for (std::size_t j = 0; j <= i; ++j) {
      const double r = h_inner_product(grid[i], grid[j], h);
      cov.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = r;
      cov.values(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = r;
    }
  });

  if (check_psd) {
    const double lmin = cov.min_eigenvalue();
    if (lmin < -1e-8 * cov.trace()) {
      throw NumericalError("covariance_matrix: not positive semidefinite (min eigenvalue " +
                               std::to_string(lmin) + ")",
                           -lmin);
    }
  }
  return cov;
}

}  // namespace mbm::mh
