#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mbm/quadrature.hpp"
#include "mbm/simulator.hpp"
#include "mbm/specfun.hpp"

namespace mbm::localtime {

struct RegularizationParams {
  double eps = 0.01;  ///< Gaussian width
  unsigned N = 0;     ///< truncation order; Monte Carlo supports 0 and 1

  void validate() const;
};

struct LocalTimeEstimate {
  double estimate = 0.0;
  double standard_error = 0.0;
  std::size_t n_paths = 0;
  std::size_t resolution = 0;  ///< time-grid points per path (excluding t = 0)
  RegularizationParams params;
  /// Set when the grid is too coarse for the requested width.
  std::optional<std::string> warning;
};

/// delta_eps(x) = (2 pi eps)^{-d/2} exp(-|x|^2 / (2 eps)).
double delta_eps(std::span<const double> x, double eps);

/// E[delta_eps(B_h(t))] = (2 pi (eps + t^{2h(t)}))^{-d/2}.
double expected_delta(const specfun::HurstFunctional& h, double t, double eps, unsigned d);

/// \int_0^T (2 pi (eps + t^{2h(t)}))^{-d/2} dt.  With eps = 0 the integral
/// exists iff d sup h < 1; otherwise DivergenceError.  Uses a graded
/// substitution at t = 0.
double expected_local_time(const specfun::HurstFunctional& h, double eps, double T, unsigned d,
                           const quad::Options& opts = {.abs_tol = 1e-13, .rel_tol = 1e-11});

/// Per path, trapezoidal time integral of delta_eps(B_h(t_k)) over the
/// simulation grid with B_h(0) = 0; returns the path mean and its standard
/// error.  N = 1 subtracts expected_local_time (centered estimate).
LocalTimeEstimate local_time_mc(const simulator::MbmPathSet& paths,
                                const RegularizationParams& params);

/// Per-path local-time samples (before averaging), useful for combining
/// estimators on the same paths.
std::vector<double> local_time_samples(const simulator::MbmPathSet& paths, double eps);

struct HistogramBins {
  double lo = -1.0;
  double hi = 1.0;
  std::size_t count = 20;
};

struct OccupationHistogram {
  std::vector<double> edges;    ///< count + 1 bin edges
  std::vector<double> density;  ///< mean over paths of occupation time / bin width
  std::vector<double> standard_error;  ///< standard error of density per bin
  double mean_total_mass = 0.0; ///< mean over paths of total occupation time (equals T)
};

/// Time-weighted visits of one-dimensional paths (trapezoidal node weights,
/// B(0) = 0 included).  Requires d = 1 and bins covering every path value;
/// DomainError otherwise.
OccupationHistogram occupation_histogram(const simulator::MbmPathSet& paths,
                                         const HistogramBins& bins);

}  // namespace mbm::localtime
