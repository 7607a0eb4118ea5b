#pragma once

// One-dimensional quadrature used throughout the library: globally adaptive
// Gauss-Kronrod (7/15), graded substitutions for algebraic endpoint
// singularities and slowly decaying tails, and fixed composite
// Gauss-Legendre rules on graded meshes.

#include <cstddef>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

namespace mbm::quad {

using Integrand = std::function<double(double)>;

struct Options {
  double abs_tol = 1e-12;
  double rel_tol = 1e-10;
  std::size_t max_intervals = 4000;
};

struct Result {
  double value = 0.0;
  double abs_error = 0.0;
  std::size_t evaluations = 0;
  bool converged = true;

  Result& operator+=(const Result& other);
};

/// Globally adaptive Gauss-Kronrod 7/15 on [a, b] (finite).  The interval
/// with the largest error estimate is bisected until the summed estimate
/// meets max(abs_tol, rel_tol * |value|).
Result gauss_kronrod(const Integrand& f, double a, double b, const Options& opts = {});

/// Integral over [a, b] of f with an algebraic endpoint behaviour
/// |x - a|^exponent at x = a (exponent > -1).  Uses x = a + (b - a) s^p with
/// p = max(1, 2 / (1 + exponent)), which removes the singularity to C^1.
Result integrate_singular(const Integrand& f, double a, double b, double exponent,
                          const Options& opts = {});

/// Integral over [a, inf) of f with f(x) ~ x^decay as x -> inf (decay < -1).
/// Maps x = a + c (1/s - 1) and treats the induced singularity at s = 0.
Result integrate_upper_tail(const Integrand& f, double a, double decay,
                            const Options& opts = {});

/// Integral over (-inf, b] with |f(x)| ~ |x|^decay as x -> -inf.
Result integrate_lower_tail(const Integrand& f, double b, double decay,
                            const Options& opts = {});

/// Sum of adaptive integrals over consecutive breakpoints (sorted, deduplicated
/// internally).  Each piece is treated as mildly singular at both ends via
/// midpoint splitting with the given endpoint exponent.
Result integrate_pieces(const Integrand& f, std::vector<double> breakpoints,
                        double endpoint_exponent, const Options& opts = {});

/// Throws NumericalError (carrying the error estimate) if r did not converge.
double value_or_throw(const Result& r, std::string_view what);

struct Rule {
  std::vector<double> nodes;
  std::vector<double> weights;

  std::size_t size() const { return nodes.size(); }
  double apply(const Integrand& f) const;
};

/// n-point Gauss-Legendre rule on [-1, 1].
Rule gauss_legendre(std::size_t n);

/// Composite Gauss-Legendre rule on [0, T] for the substitution
/// t = T sigma^grading (panel edges t_k = T (k / panels)^grading).  With
/// grading = 2 / (1 - alpha) an integrand ~ t^{-alpha} becomes smooth.
Rule graded_rule(double T, std::size_t panels, std::size_t points_per_panel, double grading);

}  // namespace mbm::quad
