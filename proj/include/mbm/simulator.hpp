#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "mbm/specfun.hpp"

namespace mbm::simulator {

enum class Method { Exact, WoodChan };

std::string to_string(Method m);
Method method_from_string(const std::string& name);

struct SimulationConfig {
  specfun::HurstFunctional h;
  double T = 1.0;
  std::size_t s = 100;       ///< grid points t_k = kT/s, k = 1..s
  std::size_t n_paths = 1;
  unsigned d = 1;
  std::uint64_t seed = 0;
  Method method = Method::Exact;

  /// Checks s >= 2, n_paths >= 1, d >= 1, T > 0 and (A1) for h on [0, T].
  void validate() const;
  std::vector<double> grid() const;
};

/// Simulated values indexed (path, component, time).  The grid starts at
/// t_1 = T/s; B(0) = 0 is implicit and only materialized on export.
struct MbmPathSet {
  SimulationConfig config;
  std::vector<double> grid;
  std::vector<double> values;
  /// Wood-Chan: circulant embedding size actually used (0 for exact).
  std::size_t embedding_size = 0;
  /// Exact: diagonal jitter added before factorization.
  double jitter = 0.0;

  std::size_t n_paths() const { return config.n_paths; }
  unsigned dim() const { return config.d; }
  std::size_t n_times() const { return grid.size(); }

  double at(std::size_t path, unsigned component, std::size_t k) const {
    return values[(path * config.d + component) * grid.size() + k];
  }
  std::span<const double> series(std::size_t path, unsigned component) const {
    return {values.data() + (path * config.d + component) * grid.size(), grid.size()};
  }
  std::span<double> series(std::size_t path, unsigned component) {
    return {values.data() + (path * config.d + component) * grid.size(), grid.size()};
  }

  /// One row per (path, time) including t = 0, columns path,t,x1..xd.
  void write_csv(std::ostream& os) const;
  /// Config echo plus generator metadata.
  nlohmann::json metadata() const;
};

/// Exact Gaussian simulation by Cholesky factorization of R_h on the grid.
/// Jitter escalates from 0 through 1e-14..1e-10 times the trace; beyond
/// that a NumericalError is raised.  Components use independent streams.
MbmPathSet simulate_exact(const SimulationConfig& config);

/// fBm with constant H by circulant embedding of fractional Gaussian noise
/// (Wood-Chan), followed by cumulative summation.
MbmPathSet simulate_wood_chan_fbm(double H, std::size_t s, double T, std::size_t n_paths,
                                  std::uint64_t seed);

/// Approximate mBm: fBm fields on an H-grid covering the range of h are
/// driven by shared noise and B_h(t_k) is interpolated linearly in H.
MbmPathSet simulate_wood_chan_mbm(const SimulationConfig& config);

/// d-dimensional mBm; dispatches on config.method.  Each component is an
/// independent 1-d mBm drawn from its own sub-stream of the master seed.
MbmPathSet simulate_mbm_d(const SimulationConfig& config);

/// Eigenvalues of the minimal circulant embedding of the fGn autocovariance
/// rho(k) = ((k+1)^{2H} - 2k^{2H} + |k-1|^{2H}) / 2 (unit lag-0 variance) for
/// n increments, doubling the embedding (at most 4 times) until all
/// eigenvalues are >= -1e-9.  Negative values within tolerance are clipped.
std::vector<double> fgn_circulant_eigenvalues(double H, std::size_t n);

/// Version string of the FFT backend.
std::string fft_backend_version();

}  // namespace mbm::simulator
