#include "mbm/localtime.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "mbm/errors.hpp"
#include "mbm/parallel.hpp"

namespace mbm::localtime {

using std::numbers::pi;

void RegularizationParams::validate() const {
  if (!(eps > 0.0) || !std::isfinite(eps)) throw DomainError("local time: eps must be positive");
  if (N > 1) {
    throw ConfigError("local time: Monte Carlo truncation supports N = 0 or 1 only");
  }
}

double delta_eps(std::span<const double> x, double eps) {
  if (!(eps > 0.0)) throw DomainError("delta_eps: eps must be positive");
  double r2 = 0.0;
  for (double v : x) r2 += v * v;
  const double d = static_cast<double>(x.size());
  return std::pow(2.0 * pi * eps, -0.5 * d) * std::exp(-0.5 * r2 / eps);
}

double expected_delta(const specfun::HurstFunctional& h, double t, double eps, unsigned d) {
  const double var = eps + std::pow(t, 2.0 * h(t));
  return std::pow(2.0 * pi * var, -0.5 * static_cast<double>(d));
}

double expected_local_time(const specfun::HurstFunctional& h, double eps, double T, unsigned d,
                           const quad::Options& opts) {
  if (eps < 0.0) throw DomainError("expected_local_time: eps must be nonnegative");
  if (!(T > 0.0) || T > h.horizon()) throw DomainError("expected_local_time: T must lie in (0, horizon]");
  if (d == 0) throw DomainError("expected_local_time: dimension must be positive");
  double exponent = 0.0;
  if (eps == 0.0) {
    const double worst = static_cast<double>(d) * h.sup();
    if (!(worst < 1.0)) {
      std::ostringstream os;
      os << "divergence: d*sup h = " << worst << " >= 1, local time expectation is infinite at eps = 0";
      throw DivergenceError(os.str());
    }
    exponent = -worst;
  }
  auto f = [&](double t) { return expected_delta(h, t, eps, d); };
  return quad::value_or_throw(quad::integrate_singular(f, 0.0, T, exponent, opts),
                              "expected_local_time");
}

std::vector<double> local_time_samples(const simulator::MbmPathSet& paths, double eps) {
  if (!(eps > 0.0)) throw DomainError("local time: eps must be positive");
  const std::size_t s = paths.n_times();
  const unsigned d = paths.dim();
  const double dt = paths.config.T / static_cast<double>(s);
  const double origin = std::pow(2.0 * pi * eps, -0.5 * d);

  std::vector<double> samples(paths.n_paths());
  parallel_for(paths.n_paths(), [&](std::size_t p) {
    std::vector<double> x(d);
    double acc = 0.5 * origin;  // t = 0, B = 0
    for (std::size_t k = 0; k < s; ++k) {
      for (unsigned c = 0; c < d; ++c) x[c] = paths.at(p, c, k);
      const double w = (k + 1 == s) ? 0.5 : 1.0;
      acc += w * delta_eps(x, eps);
    }
    samples[p] = acc * dt;
  });
  return samples;
}

LocalTimeEstimate local_time_mc(const simulator::MbmPathSet& paths,
                                const RegularizationParams& params) {
  params.validate();
  const std::size_t n = paths.n_paths();
  if (n < 2) throw ConfigError("local_time_mc: need at least two paths for a standard error");

  auto samples = local_time_samples(paths, params.eps);
  const double mean = pairwise_sum(samples) / static_cast<double>(n);
  std::vector<double> sq(n);
  for (std::size_t i = 0; i < n; ++i) sq[i] = (samples[i] - mean) * (samples[i] - mean);
  const double var = pairwise_sum(sq) / static_cast<double>(n - 1);

  LocalTimeEstimate est;
  est.estimate = mean;
  est.standard_error = std::sqrt(var / static_cast<double>(n));
  est.n_paths = n;
  est.resolution = paths.n_times();
  est.params = params;
  if (params.N == 1) {
    est.estimate -= expected_local_time(paths.config.h, params.eps, paths.config.T, paths.dim());
  }

  const double dt = paths.config.T / static_cast<double>(paths.n_times());
  const double gate = std::pow(dt, 2.0 * paths.config.h.inf());
  if (params.eps < gate) {
    std::ostringstream os;
    os << "grid too coarse: eps = " << params.eps << " < (T/s)^{2 min h} = " << gate;
    est.warning = os.str();
  }
  return est;
}

OccupationHistogram occupation_histogram(const simulator::MbmPathSet& paths,
                                         const HistogramBins& bins) {
  if (paths.dim() != 1) throw DomainError("occupation_histogram: only one-dimensional paths");
  if (bins.count == 0 || !(bins.hi > bins.lo)) throw DomainError("occupation_histogram: empty range");
  const std::size_t n = paths.n_paths();
  const std::size_t s = paths.n_times();
  const double dt = paths.config.T / static_cast<double>(s);
  const double width = (bins.hi - bins.lo) / static_cast<double>(bins.count);

  auto bin_of = [&](double x) -> std::size_t {
    if (x < bins.lo || x > bins.hi) {
      throw DomainError("occupation_histogram: bins do not cover the path range");
    }
    return std::min(static_cast<std::size_t>((x - bins.lo) / width), bins.count - 1);
  };

  // per-path occupation masses, laid out path-major
  std::vector<double> mass(n * bins.count, 0.0);
  std::vector<double> totals(n, 0.0);
  parallel_for(n, [&](std::size_t p) {
    double* row = mass.data() + p * bins.count;
    row[bin_of(0.0)] += 0.5 * dt;
    const auto x = paths.series(p, 0);
    for (std::size_t k = 0; k < s; ++k) row[bin_of(x[k])] += (k + 1 == s ? 0.5 : 1.0) * dt;
    double total = 0.0;
    for (std::size_t b = 0; b < bins.count; ++b) total += row[b];
    totals[p] = total;
  });

  OccupationHistogram out;
  out.edges.resize(bins.count + 1);
  for (std::size_t b = 0; b <= bins.count; ++b) out.edges[b] = bins.lo + width * static_cast<double>(b);
  out.density.resize(bins.count);
  out.standard_error.resize(bins.count);
  std::vector<double> column(n);
  for (std::size_t b = 0; b < bins.count; ++b) {
    for (std::size_t p = 0; p < n; ++p) column[p] = mass[p * bins.count + b] / width;
    const double mean = pairwise_sum(column) / static_cast<double>(n);
    double var = 0.0;
    if (n > 1) {
      for (double& v : column) v = (v - mean) * (v - mean);
      var = pairwise_sum(column) / static_cast<double>(n - 1);
    }
    out.density[b] = mean;
    out.standard_error[b] = std::sqrt(var / static_cast<double>(n));
  }
  out.mean_total_mass = pairwise_sum(totals) / static_cast<double>(n);
  return out;
}

}  // namespace mbm::localtime
