#include "mbm/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <memory>
#include <mutex>
#include <ostream>
#include <random>

#include <Eigen/Cholesky>
#include <fftw3.h>

#include "mbm/errors.hpp"
#include "mbm/mh_operator.hpp"
#include "mbm/parallel.hpp"
#include "mbm/rng.hpp"

namespace mbm::simulator {

std::string to_string(Method m) { return m == Method::Exact ? "exact" : "wood_chan"; }

Method method_from_string(const std::string& name) {
  if (name == "exact") return Method::Exact;
  if (name == "wood_chan") return Method::WoodChan;
  throw ConfigError("unknown simulation method '" + name + "' (expected exact or wood_chan)");
}

void SimulationConfig::validate() const {
  if (!(T > 0.0)) throw ConfigError("simulation: T must be positive");
  if (s < 2) throw ConfigError("simulation: need at least 2 grid points");
  if (n_paths < 1) throw ConfigError("simulation: need at least one path");
  if (d < 1) throw ConfigError("simulation: dimension must be positive");
  if (std::abs(h.horizon() - T) > 1e-12 * T) {
    throw ConfigError("simulation: Hurst functional horizon differs from T");
  }
  h.validate();
}

std::vector<double> SimulationConfig::grid() const {
  std::vector<double> g(s);
  for (std::size_t k = 0; k < s; ++k) g[k] = T * static_cast<double>(k + 1) / static_cast<double>(s);
  return g;
}

void MbmPathSet::write_csv(std::ostream& os) const {
  const auto old_precision = os.precision(17);
  os << "path,t";
  for (unsigned c = 0; c < config.d; ++c) os << ",x" << (c + 1);
  os << '\n';
  for (std::size_t p = 0; p < config.n_paths; ++p) {
    os << p << ",0";
    for (unsigned c = 0; c < config.d; ++c) os << ",0";
    os << '\n';
    for (std::size_t k = 0; k < grid.size(); ++k) {
      os << p << ',' << grid[k];
      for (unsigned c = 0; c < config.d; ++c) os << ',' << at(p, c, k);
      os << '\n';
    }
  }
  os.precision(old_precision);
}

nlohmann::json MbmPathSet::metadata() const {
  return {
      {"hurst", config.h.to_json()},
      {"hurst_description", config.h.description()},
      {"T", config.T},
      {"s", config.s},
      {"n_paths", config.n_paths},
      {"d", config.d},
      {"seed", config.seed},
      {"method", to_string(config.method)},
      {"embedding_size", embedding_size},
      {"jitter", jitter},
  };
}

namespace {

MbmPathSet allocate(const SimulationConfig& config) {
  MbmPathSet out{config, config.grid(), {}};
  out.values.assign(config.n_paths * config.d * config.s, 0.0);
  return out;
}

void fill_normals(Engine& eng, std::span<double> out) {
  std::normal_distribution<double> normal(0.0, 1.0);
  for (double& z : out) z = normal(eng);
}

// FFTW planning is not thread-safe; execution with the new-array interface
// is, provided the buffers share the planning buffers' alignment
// (guaranteed by fftw_malloc).
std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwBuffer {
  explicit FftwBuffer(std::size_t n)
      : data(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n))) {
    if (!data) throw std::bad_alloc();
  }
  ~FftwBuffer() { fftw_free(data); }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;
  fftw_complex* data;
};

class ForwardFft {
 public:
  explicit ForwardFft(std::size_t n) : n_(n) {
    FftwBuffer in(n), out(n);
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    plan_ = fftw_plan_dft_1d(static_cast<int>(n), in.data, out.data, FFTW_FORWARD, FFTW_ESTIMATE);
    if (!plan_) throw NumericalError("fftw: planning failed");
  }
  ~ForwardFft() {
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    fftw_destroy_plan(plan_);
  }
  ForwardFft(const ForwardFft&) = delete;
  ForwardFft& operator=(const ForwardFft&) = delete;

  void execute(fftw_complex* in, fftw_complex* out) const { fftw_execute_dft(plan_, in, out); }
  std::size_t size() const { return n_; }

 private:
  std::size_t n_;
  fftw_plan plan_;
};

double fgn_autocovariance(double H, std::size_t k) {
  const double kk = static_cast<double>(k);
  const double e = 2.0 * H;
  return 0.5 * (std::pow(kk + 1.0, e) - 2.0 * std::pow(kk, e) + std::pow(std::abs(kk - 1.0), e));
}

std::size_t minimal_embedding(std::size_t n) {
  std::size_t m = 2;
  while (m < 2 * (n - 1)) m *= 2;
  return m;
}

std::vector<double> circulant_eigenvalues(double H, std::size_t m) {
  FftwBuffer in(m), out(m);
  for (std::size_t j = 0; j < m; ++j) {
    const std::size_t lag = j <= m / 2 ? j : m - j;
    in.data[j][0] = fgn_autocovariance(H, lag);
    in.data[j][1] = 0.0;
  }
  ForwardFft fft(m);
  fft.execute(in.data, out.data);
  std::vector<double> lambda(m);
  for (std::size_t j = 0; j < m; ++j) lambda[j] = out.data[j][0];
  return lambda;
}

// Embedding size for n increments such that every level in `hurst_levels`
// has a nonnegative (to tolerance) circulant spectrum.
std::size_t common_embedding(std::span<const double> hurst_levels, std::size_t n) {
  constexpr double kTolerance = -1e-9;
  std::size_t m = minimal_embedding(n);
  for (int doubling = 0; doubling <= 4; ++doubling, m *= 2) {
    bool ok = true;
    for (double H : hurst_levels) {
      const auto lambda = circulant_eigenvalues(H, m);
      ok = ok && *std::min_element(lambda.begin(), lambda.end()) >= kTolerance;
    }
    if (ok) return m;
  }
  throw NumericalError("wood_chan: circulant embedding not nonnegative after 4 doublings");
}

std::vector<double> clipped_sqrt_scale(std::vector<double> lambda) {
  const double m = static_cast<double>(lambda.size());
  for (double& l : lambda) l = std::sqrt(std::max(l, 0.0) / m);
  return lambda;
}

// Wood-Chan generator for a set of Hurst levels sharing the same noise.
class CirculantField {
 public:
  CirculantField(std::vector<double> levels, std::size_t n, double T)
      : levels_(std::move(levels)), n_(n), T_(T) {
    m_ = common_embedding(levels_, n_);
    fft_ = std::make_unique<ForwardFft>(m_);
    for (double H : levels_) scales_.push_back(clipped_sqrt_scale(circulant_eigenvalues(H, m_)));
  }

  std::size_t embedding_size() const { return m_; }
  std::size_t n_levels() const { return levels_.size(); }

  /// Writes fBm values B(t_k, H_j), k=1..n, for every level j into
  /// out[j * n + k - 1], from the normals z (length 2m).
  void generate(std::span<const double> z, std::span<double> out) const {
    FftwBuffer in(m_), spec(m_);
    for (std::size_t j = 0; j < levels_.size(); ++j) {
      const auto& scale = scales_[j];
      for (std::size_t k = 0; k < m_; ++k) {
        in.data[k][0] = scale[k] * z[2 * k];
        in.data[k][1] = scale[k] * z[2 * k + 1];
      }
      fft_->execute(in.data, spec.data);
      const double increment_scale = std::pow(T_ / static_cast<double>(n_), levels_[j]);
      double acc = 0.0;
      for (std::size_t k = 0; k < n_; ++k) {
        acc += increment_scale * spec.data[k][0];
        out[j * n_ + k] = acc;
      }
    }
  }

 private:
  std::vector<double> levels_;
  std::size_t n_;
  double T_;
  std::size_t m_ = 0;
  std::unique_ptr<ForwardFft> fft_;
  std::vector<std::vector<double>> scales_;
};

std::vector<double> hurst_levels(const specfun::HurstFunctional& h) {
  if (h.is_constant()) return {h(0.0)};
  const double lo = h.inf();
  const double hi = h.sup();
  constexpr double kSpacing = 0.01;
  const auto count = static_cast<std::size_t>(std::ceil((hi - lo) / kSpacing)) + 1;
  std::vector<double> levels(std::max<std::size_t>(count, 2));
  for (std::size_t j = 0; j < levels.size(); ++j) {
    levels[j] = lo + (hi - lo) * static_cast<double>(j) / static_cast<double>(levels.size() - 1);
  }
  return levels;
}

}  // namespace

std::vector<double> fgn_circulant_eigenvalues(double H, std::size_t n) {
  if (!(H > 0.5 && H < 1.0)) throw DomainError("wood_chan: H must lie in (1/2,1)");
  if (n < 2) throw ConfigError("wood_chan: need at least 2 increments");
  const double levels[] = {H};
  auto lambda = circulant_eigenvalues(H, common_embedding(levels, n));
  for (double& l : lambda) l = std::max(l, 0.0);
  return lambda;
}

MbmPathSet simulate_exact(const SimulationConfig& config) {
  config.validate();
  MbmPathSet out = allocate(config);
  const auto cov = mh::covariance_matrix(out.grid, config.h, /*check_psd=*/false);

  const double trace = cov.trace();
  Eigen::LLT<Eigen::MatrixXd> llt;
  bool factored = false;
  for (double rel : {0.0, 1e-14, 1e-13, 1e-12, 1e-11, 1e-10}) {
    Eigen::MatrixXd a = cov.values;
    a.diagonal().array() += rel * trace;
    llt.compute(a);
    if (llt.info() == Eigen::Success) {
      out.jitter = rel * trace;
      factored = true;
      break;
    }
  }
  if (!factored) {
    throw NumericalError("simulate_exact: Cholesky factorization failed after jitter 1e-10*trace");
  }
  const Eigen::MatrixXd L = llt.matrixL();

  const std::size_t s = config.s;
  parallel_for(config.n_paths, [&](std::size_t p) {
    Eigen::VectorXd z(static_cast<Eigen::Index>(s));
    for (unsigned c = 0; c < config.d; ++c) {
      Engine eng = make_stream(config.seed, p, c);
      fill_normals(eng, {z.data(), s});
      Eigen::Map<Eigen::VectorXd> dst(out.series(p, c).data(), static_cast<Eigen::Index>(s));
      dst.noalias() = L.triangularView<Eigen::Lower>() * z;
    }
  });
  return out;
}

MbmPathSet simulate_wood_chan_fbm(double H, std::size_t s, double T, std::size_t n_paths,
                                  std::uint64_t seed) {
  if (!(H > 0.5 && H < 1.0)) throw DomainError("wood_chan: H must lie in (1/2,1)");
  SimulationConfig config{specfun::HurstFunctional::constant(H, T), T, s, n_paths, 1, seed,
                          Method::WoodChan};
  return simulate_wood_chan_mbm(config);
}

MbmPathSet simulate_wood_chan_mbm(const SimulationConfig& config) {
  config.validate();
  MbmPathSet out = allocate(config);
  const auto levels = hurst_levels(config.h);
  const CirculantField field(levels, config.s, config.T);
  out.embedding_size = field.embedding_size();

  const std::size_t s = config.s;
  const std::size_t m = field.embedding_size();
  std::vector<double> hk(s);
  for (std::size_t k = 0; k < s; ++k) hk[k] = config.h(out.grid[k]);

  parallel_for(config.n_paths, [&](std::size_t p) {
    std::vector<double> z(2 * m);
    std::vector<double> fields(levels.size() * s);
    for (unsigned c = 0; c < config.d; ++c) {
      Engine eng = make_stream(config.seed, p, c);
      fill_normals(eng, z);
      field.generate(z, fields);
      auto dst = out.series(p, c);
      if (levels.size() == 1) {
        std::copy(fields.begin(), fields.begin() + static_cast<std::ptrdiff_t>(s), dst.begin());
        continue;
      }
      const double lo = levels.front();
      const double step = levels[1] - levels[0];
      for (std::size_t k = 0; k < s; ++k) {
        const double pos = std::clamp((hk[k] - lo) / step, 0.0, static_cast<double>(levels.size() - 1));
        const auto j = std::min(static_cast<std::size_t>(pos), levels.size() - 2);
        const double w = pos - static_cast<double>(j);
        dst[k] = (1.0 - w) * fields[j * s + k] + w * fields[(j + 1) * s + k];
      }
    }
  });
  return out;
}

MbmPathSet simulate_mbm_d(const SimulationConfig& config) {
  return config.method == Method::Exact ? simulate_exact(config) : simulate_wood_chan_mbm(config);
}

std::string fft_backend_version() { return fftw_version; }

}  // namespace mbm::simulator
