#pragma once

// The operator M_H and the multifractional covariance.
//
// Fourier convention: u^(xi) = \int u(x) e^{-i xi x} dx.  Under it the
// weighted norm (1/C(H)^2) \int |xi|^{1-2H} |u^(xi)|^2 dxi of 1_{[0,t)}
// equals t^{2H}, and M_H maps 1_{[0,t)} isometrically into L^2.

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "mbm/quadrature.hpp"
#include "mbm/specfun.hpp"

namespace mbm::mh {

/// (M_H 1_{[0,t)})(u) in closed form:
///   gamma(H)/(H-1/2) * [sgn(t-u)|t-u|^{H-1/2} + sgn(u)|u|^{H-1/2}].
/// Returns 0 for t = 0 (empty interval).
double mh_indicator(double H, double t, double u);

/// Real function on the line with optional structural hints for quadrature.
struct ScalarFunction {
  std::function<double(double)> eval;
  /// Closed support [lo, hi] when the function vanishes outside it.
  std::optional<std::pair<double, double>> support;
  /// Points where eval is discontinuous or non-smooth.
  std::vector<double> breakpoints;

  double operator()(double x) const { return eval(x); }
};

/// Indicator of [0, t) with its support and jump points filled in.
ScalarFunction indicator(double t);

/// (M_H f)(x) = gamma(H) \int |y|^{H-3/2} f(x + y) dy by adaptive quadrature.
/// The range is split at y = 0 and y = +-1; the pieces touching the
/// singularity are graded.  Without a support hint the range is truncated
/// where |f| drops below 1e-14.  Throws NumericalError on non-convergence.
double mh_apply(double H, const ScalarFunction& f, double x, const quad::Options& opts = {});

/// R_h(t, s) = C((h(t)+h(s))/2)^2 / (C(h(t)) C(h(s))) *
///             (t^{h(t)+h(s)} + s^{h(t)+h(s)} - |t-s|^{h(t)+h(s)}) / 2.
double h_inner_product(double t, double s, const specfun::HurstFunctional& h);

struct CovarianceMatrix {
  std::vector<double> grid;
  Eigen::MatrixXd values;

  double trace() const { return values.trace(); }
  double min_eigenvalue() const;
  /// CSV with a header row and a leading column of grid times, 17 significant digits.
  void write_csv(std::ostream& os) const;
};

/// Assembles R_h on a strictly increasing grid in (0, T].  Entries are
/// computed independently (parallel, schedule independent).  With check_psd
/// the matrix is eigen-decomposed and NumericalError is thrown when the
/// smallest eigenvalue is below -1e-8 * trace.
CovarianceMatrix covariance_matrix(std::span<const double> grid, const specfun::HurstFunctional& h,
                                   bool check_psd = true);

}  // namespace mbm::mh
