#include "acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <numbers>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include <unistd.h>

#include "cli.hpp"
#include "mbm/chaos.hpp"
#include "mbm/errors.hpp"
#include "mbm/localtime.hpp"
#include "mbm/mh_operator.hpp"
#include "mbm/simulator.hpp"
#include "oracles.hpp"

namespace mbm::acceptance {

namespace {

namespace fs = std::filesystem;
using specfun::HurstFunctional;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "[violated: " << what << "] ";
    }
  }
};

std::string sci(double x, int digits = 2) {
  std::ostringstream os;
  os << std::scientific << std::setprecision(digits) << x;
  return os.str();
}

// Mean of x_p y_p over paths with its standard error.
std::pair<double, double> product_moment(const simulator::MbmPathSet& p, unsigned ci, std::size_t i,
                                         unsigned cj, std::size_t j) {
  std::vector<double> v(p.n_paths());
  for (std::size_t q = 0; q < v.size(); ++q) v[q] = p.at(q, ci, i) * p.at(q, cj, j);
  const auto m = oracle::moments(v);
  return {m.mean, m.se};
}

simulator::SimulationConfig sim(HurstFunctional h, std::size_t s, std::size_t n, unsigned d, std::uint64_t seed,
                                simulator::Method m = simulator::Method::Exact) {
  simulator::SimulationConfig c{std::move(h)};
  c.T = c.h.horizon();
  c.s = s;
  c.n_paths = n;
  c.d = d;
  c.seed = seed;
  c.method = m;
  return c;
}

chaos::TestFunction gaussians(double amp, unsigned d) {
  const chaos::GaussianBump all[] = {{amp, 0.3, 0.5}, {amp, -0.2, 0.4}, {amp, 0.1, 0.6}};
  return chaos::TestFunction(std::vector<chaos::TestComponent>(all, all + d));
}

// 1. ||M_H 1_[0,t)||^2 = t^{2H}
Outcome isometry() {
  Outcome o;
  double worst = 0.0;
  for (double H : {0.55, 0.65, 0.75, 0.85, 0.95}) {
    for (double t : {0.5, 1.0, 2.0}) {
      const double v = oracle::isometry_norm_sq([&](double u) { return mh::mh_indicator(H, t, u); }, t);
      const double ref = std::pow(t, 2 * H);
      worst = std::max(worst, std::abs(v - ref) / ref);
    }
  }
  o.require(worst <= 1e-4, "relative error <= 1e-4");
  o.detail << "max relative error " << sci(worst) << " over 15 (H, t)";
  return o;
}

// 2. R_h against the weighted-Fourier integral
Outcome covariance_oracle() {
  Outcome o;
  const std::pair<double, double> pairs[] = {{0.1, 0.2},  {0.1, 0.9}, {0.25, 0.5}, {0.3, 0.7},  {0.5, 0.5},
                                             {0.5, 1.0},  {0.6, 0.65}, {0.75, 0.2}, {0.9, 0.95}, {1.0, 1.0}};
  double worst = 0.0;
  for (const auto& h : {HurstFunctional::constant(0.7), HurstFunctional::linear(0.55, 0.35)}) {
    for (const auto& [t, s] : pairs) {
      const double r = mh::h_inner_product(t, s, h);
      const double ref = oracle::weighted_fourier_covariance(t, s, h(t), h(s));
      worst = std::max(worst, std::abs(r - ref) / std::abs(ref));
    }
  }
  o.require(worst <= 1e-3, "relative error <= 1e-3");
  o.detail << "max relative error " << sci(worst) << " over 20 (h, t, s)";
  return o;
}

// 3. variance and cross-covariance of exact paths
Outcome simulation_moments() {
  Outcome o;
  const auto h = HurstFunctional::linear(0.55, 0.3);
  double worst_var = 0.0, worst_cross = 0.0;
  for (unsigned d : {1u, 2u}) {
    const auto p = simulator::simulate_exact(sim(h, 100, 10000, d, 300 + d));
    for (std::size_t k : {9u, 24u, 49u, 99u}) {
      const double t = p.grid[k];
      for (unsigned c = 0; c < d; ++c) {
        const auto [m, se] = product_moment(p, c, k, c, k);
        worst_var = std::max(worst_var, std::abs(m - std::pow(t, 2 * h(t))) / se);
      }
      if (d == 2) {
        const auto [m, se] = product_moment(p, 0, k, 1, k);
        worst_cross = std::max(worst_cross, std::abs(m) / se);
      }
    }
  }
  o.require(worst_var <= 4.0, "variance within 4 SE");
  o.require(worst_cross <= 4.0, "cross-covariance within 4 SE");
  o.detail << "max |var - t^{2h}|/SE " << std::setprecision(3) << worst_var << ", max |cross|/SE " << worst_cross
           << " (10^4 paths, d = 1, 2)";
  return o;
}

// 4. Monte Carlo local time against its expectation
Outcome local_time_expectation() {
  Outcome o;
  const auto h = HurstFunctional::linear(0.55, 0.3);
  double worst = 0.0;
  for (unsigned d : {1u, 2u}) {
    const auto p = simulator::simulate_exact(sim(h, 500, 10000, d, 400 + d));
    for (double eps : {0.1, 0.01}) {
      const auto est = localtime::local_time_mc(p, {eps, 0});
      const double ref = localtime::expected_local_time(h, eps, 1.0, d);
      const double z = std::abs(est.estimate - ref) / est.standard_error;
      worst = std::max(worst, z);
      o.detail << "d=" << d << " eps=" << eps << ": " << std::setprecision(5) << est.estimate << " vs " << ref
               << " (" << std::setprecision(2) << z << " SE); ";
    }
  }
  o.require(worst <= 4.0, "within 4 SE");
  return o;
}

// 5. chaos partial sums against the direct S-transform
Outcome chaos_consistency() {
  Outcome o;
  struct Setting {
    HurstFunctional h;
    unsigned d, N;
    std::optional<double> eps;
  };
  const Setting settings[] = {
      {HurstFunctional::linear(0.55, 0.3), 1, 0, 0.01},
      {HurstFunctional::constant(0.6), 1, 0, std::nullopt},
      {HurstFunctional::linear(0.55, 0.3), 1, 1, std::nullopt},
      {HurstFunctional::sine(0.7, 0.1, 3.0), 2, 0, 0.01},
      {HurstFunctional::linear(0.55, 0.3), 2, 1, 0.01},
      {HurstFunctional::constant(0.6), 2, 1, std::nullopt},
  };
  double worst = 0.0;
  for (const auto& st : settings) {
    const chaos::LocalTimeSpec spec{st.h, 1.0, st.N, st.eps};
    const auto phi = gaussians(0.8, st.d);
    const auto pairing = chaos::chaos_pairing(spec, phi, 8);
    const double direct = chaos::s_transform_local_time(spec, phi);
    const double rel = std::abs(pairing.partial_sums.back() - direct) / std::abs(direct);
    worst = std::max(worst, rel);
    o.require(pairing.max_ratio <= 1.0, "small test function");
    o.detail << "d=" << st.d << " N=" << st.N << " eps=" << (st.eps ? *st.eps : 0.0) << ": " << sci(rel) << "; ";
  }
  o.require(worst <= 1e-3, "relative error <= 1e-3");
  return o;
}

// 6. eps -> 0 convergence of the S-transform
Outcome eps_convergence() {
  Outcome o;
  const double eps[] = {1e-1, 1e-2, 1e-3, 1e-4};
  const auto phi = gaussians(1.0, 2);
  for (const auto& h : {HurstFunctional::constant(0.6), HurstFunctional::linear(0.55, 0.1)}) {
    const auto table = chaos::convergence_eps({h, 1.0, 1, std::nullopt}, phi, eps);
    bool decreasing = true;
    for (std::size_t i = 0; i + 1 < table.rows.size(); ++i) {
      decreasing = decreasing && table.rows[i + 1].gap < table.rows[i].gap;
    }
    const double final_rel = table.rows.back().gap / std::abs(table.limit);
    o.require(decreasing, h.description() + ": gaps strictly decreasing");
    o.require(final_rel <= 1e-2, h.description() + ": final relative gap <= 1e-2");
    o.detail << h.description() << ": relative gaps";
    for (const auto& r : table.rows) o.detail << ' ' << sci(r.gap / std::abs(table.limit));
    o.detail << "; ";
  }
  return o;
}

// 7. (A2) gating
Outcome a2_gating() {
  Outcome o;
  const auto h = HurstFunctional::constant(0.6);
  const auto phi = gaussians(0.5, 3);
  bool diverged = false;
  try {
    chaos::s_transform_local_time({h, 1.0, 0, std::nullopt}, phi);
  } catch (const DivergenceError&) {
    diverged = true;
  }
  o.require(diverged, "N = 0 raises a divergence error");
  const double v = chaos::s_transform_local_time({h, 1.0, 2, std::nullopt}, phi);
  o.require(std::isfinite(v), "N = 2 succeeds");
  const auto diag = specfun::check_A2(h, {0, 3});
  o.require(diag.minimal_N == 2, "minimal N is 2");
  o.detail << "N=0 divergence " << (diverged ? "raised" : "missing") << ", N=2 value " << std::setprecision(6) << v
           << ", minimal N " << diag.minimal_N;
  return o;
}

// 8. kernel parity, finite-difference oracle, permutation invariance
Outcome kernel_structure() {
  Outcome o;
  const auto c7 = HurstFunctional::constant(0.7);
  const chaos::LocalTimeSpec spec{c7, 1.0, 0, 0.01};

  const double u5[] = {0.1, 0.2, 0.3, 0.4, 0.5};
  const double u3[] = {0.1, 0.2, 0.3};
  o.require(chaos::kernel_eval({spec, {{3, 2}}}, u5) == 0.0, "odd index (3,2) is 0");
  o.require(chaos::kernel_eval({spec, {{1, 2}}}, u3) == 0.0, "odd index (1,2) is 0");
  o.require(chaos::kernel_eval({spec, {{3}}}, u3) == 0.0, "odd index (3) is 0");

  // <F_2, psi (x) psi> by a product rule graded at u = 0 and u = T
  const chaos::KernelSpec k2{spec, {{2}}};
  const chaos::TestFunction psi({chaos::GaussianBump{1.0, 0.3, 0.25}});
  std::vector<double> nodes, weights;
  const auto gl = quad::gauss_legendre(16);
  auto piece = [&](double from, double to) {
    for (std::size_t i = 0; i < gl.size(); ++i) {
      const double s = 0.5 * (gl.nodes[i] + 1.0);
      nodes.push_back(from + (to - from) * s * s);
      weights.push_back(std::abs(gl.weights[i] * s * (to - from)));
    }
  };
  piece(0.0, -2.0);
  piece(0.0, 0.5);
  piece(1.0, 0.5);
  piece(1.0, 2.6);
  double pairing = 0.0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      const double uu[] = {nodes[i], nodes[j]};
      const double v =
          chaos::kernel_eval(k2, uu) * psi.eval(0, nodes[i]) * psi.eval(0, nodes[j]) * weights[i] * weights[j];
      pairing += i == j ? v : 2.0 * v;
    }
  }
  const quad::Options tight{.abs_tol = 1e-15, .rel_tol = 1e-13};
  const double s0 = chaos::s_transform_local_time(spec, chaos::TestFunction::zero(1), tight);
  auto second = [&](double lam) {
    return 2.0 * (chaos::s_transform_local_time(spec, psi.scaled(lam), tight) - s0) / (lam * lam);
  };
  const double fd = 0.5 * (4.0 * second(0.05) - second(0.1)) / 3.0;
  const double rel = std::abs(pairing - fd) / std::abs(fd);
  o.require(rel <= 1e-3, "order-2 kernel matches the finite difference to 1e-3");

  const chaos::KernelSpec k24{{HurstFunctional::linear(0.55, 0.3), 1.0, 0, 0.01}, {{2, 4}}};
  std::vector<double> u{-0.7, 0.1, 0.35, 0.8, 1.4, 0.05};
  const double ref = chaos::kernel_eval(k24, u);
  std::mt19937 rng(8);
  int identical = 0;
  for (int r = 0; r < 20; ++r) {
    std::shuffle(u.begin(), u.end(), rng);
    identical += chaos::kernel_eval(k24, u) == ref;
  }
  o.require(identical == 20, "permutation invariance");
  o.detail << "pairing " << std::setprecision(8) << pairing << " vs finite difference " << fd << " (rel "
           << sci(rel) << "), " << identical << "/20 permutations identical";
  return o;
}

// 9. Wood-Chan fBm and mBm field
Outcome wood_chan() {
  Outcome o;
  const double H = 0.75;
  const std::size_t s = 4096, n = 1000;
  const auto p = simulator::simulate_wood_chan_fbm(H, s, 1.0, n, 900);
  std::vector<double> x, y;
  for (std::size_t k = 1; k <= s; k *= 2) {
    x.push_back(std::log(p.grid[k - 1]));
    y.push_back(std::log(product_moment(p, 0, k - 1, 0, k - 1).first));
  }
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / x.size();
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / y.size();
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  const double H_hat = 0.5 * sxy / sxx;
  o.require(std::abs(H_hat - H) <= 0.05, "regression H within 0.05");

  const auto h = HurstFunctional::linear(0.6, 0.3);
  const auto q = simulator::simulate_wood_chan_mbm(sim(h, s, n, 1, 901, simulator::Method::WoodChan));
  double acc = 0.0;
  for (std::size_t k = 0; k < q.n_times(); ++k) {
    const double t = q.grid[k];
    const double r = product_moment(q, 0, k, 0, k).first / std::pow(t, 2 * h(t)) - 1.0;
    acc += r * r;
  }
  const double rms = std::sqrt(acc / q.n_times());
  o.require(rms <= 0.05, "variance curve within 5% RMS");
  o.detail << "fBm H=0.75 regression " << std::setprecision(4) << H_hat << ", mBm variance RMS relative error "
           << sci(rms);
  return o;
}

// 10. byte-identical subcommand outputs across thread counts
Outcome determinism() {
  Outcome o;
  const fs::path root = fs::temp_directory_path() / ("mbmlt-acceptance-" + std::to_string(::getpid()));
  fs::create_directories(root);
  const nlohmann::json phi2 = nlohmann::json::parse(
      R"([{"gauss": {"amplitude": 0.8, "center": 0.3, "width": 0.5}},
          {"gauss": {"amplitude": 0.8, "center": -0.2, "width": 0.4}}])");
  const nlohmann::json lin = {{"linear", {{"a", 0.55}, {"b", 0.3}}}};
  // (A2) for d = 2, N = 1 needs sup h < 3/4
  const nlohmann::json flat = {{"linear", {{"a", 0.55}, {"b", 0.1}}}};
  const std::vector<std::pair<std::string, nlohmann::json>> jobs = {
      {"simulate", {{"hurst", lin}, {"d", 2}, {"s", 64}, {"n_paths", 40}, {"seed", 7}}},
      {"simulate", {{"hurst", lin}, {"s", 256}, {"n_paths", 40}, {"seed", 7}, {"method", "wood_chan"}}},
      {"covariance", {{"hurst", lin}, {"s", 48}}},
      {"localtime",
       {{"hurst", lin},
        {"s", 128},
        {"n_paths", 300},
        {"seed", 3},
        {"eps", {0.1, 0.01}},
        {"bins", {{"lo", -6.0}, {"hi", 6.0}, {"count", 24}}}}},
      {"stransform", {{"hurst", flat}, {"d", 2}, {"N", 1}, {"eps", {0.01, 0.0}}, {"n_max", 4}, {"phi", phi2}}},
      {"kernels",
       {{"hurst", lin}, {"index", {2, 2}}, {"d", 2}, {"u", {{0.1, 0.2, 0.3, 0.4}, {-0.5, 0.0, 0.7, 1.2}}}}},
      {"converge", {{"hurst", flat}, {"d", 2}, {"N", 1}, {"eps", {0.1, 0.01, 0.001}}, {"phi", phi2}}},
  };
  auto read = [](const fs::path& f) {
    std::ifstream is(f, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(is), {});
  };
  int compared = 0;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const auto& [cmd, cfg] = jobs[i];
    const fs::path config = root / ("job" + std::to_string(i) + ".json");
    std::ofstream(config) << cfg.dump();
    std::vector<fs::path> dirs;
    for (const char* threads : {"1", "4", "4"}) {
      const fs::path dir = root / ("job" + std::to_string(i) + "-" + std::to_string(dirs.size()));
      std::ostringstream out, err;
      const int code = cli::run({cmd, "--config", config.string(), "--out", dir.string(), "--threads", threads},
                                out, err);
      o.require(code == 0, cmd + " exits 0 (" + err.str().substr(0, err.str().find('\n')) + ")");
      dirs.push_back(dir);
    }
    for (const auto& entry : fs::directory_iterator(dirs[0])) {
      const auto name = entry.path().filename();
      if (name == "manifest.json") continue;
      const auto a = read(entry.path());
      o.require(!a.empty(), cmd + "/" + name.string() + " non-empty");
      for (std::size_t k = 1; k < dirs.size(); ++k) {
        o.require(a == read(dirs[k] / name), cmd + "/" + name.string() + " identical");
        ++compared;
      }
    }
  }
  fs::remove_all(root);
  o.detail << compared << " output comparisons over " << jobs.size()
           << " runs of 6 subcommands at 1 and 4 threads";
  return o;
}

struct Criterion {
  int id;
  const char* title;
  double budget;
  std::function<Outcome()> check;
};

}  // namespace

std::vector<CriterionResult> run_all(std::ostream& log, const std::vector<int>& only) {
  const Criterion criteria[] = {
      {1, "isometry of M_H", 5, isometry},
      {2, "covariance vs weighted-Fourier oracle", 30, covariance_oracle},
      {3, "simulation moments", 60, simulation_moments},
      {4, "local-time expectation", 120, local_time_expectation},
      {5, "chaos-sum consistency", 120, chaos_consistency},
      {6, "eps -> 0 convergence", 60, eps_convergence},
      {7, "(A2) gating", 1, a2_gating},
      {8, "kernel structure", 30, kernel_structure},
      {9, "Wood-Chan validity", 60, wood_chan},
      {10, "determinism across thread counts", 30, determinism},
  };
  std::vector<CriterionResult> results;
  for (const auto& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    CriterionResult r;
    r.id = c.id;
    r.title = c.title;
    r.budget_seconds = c.budget;
    const auto start = std::chrono::steady_clock::now();
    try {
      Outcome o = c.check();
      r.pass = o.pass;
      r.detail = o.detail.str();
    } catch (const std::exception& e) {
      r.pass = false;
      r.detail = std::string("exception: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (r.seconds > r.budget_seconds) {
      r.pass = false;
      r.detail += " [over time budget]";
    }
    log << (r.pass ? "PASS" : "FAIL") << "  " << std::setw(2) << r.id << "  " << r.title << ": " << r.detail << " ("
        << std::fixed << std::setprecision(2) << r.seconds << " s, budget " << std::setprecision(0)
        << r.budget_seconds << " s)" << std::defaultfloat << std::endl;
    results.push_back(std::move(r));
  }
  const auto passed = std::count_if(results.begin(), results.end(), [](const auto& r) { return r.pass; });
  log << passed << "/" << results.size() << " criteria passed" << std::endl;
  return results;
}

}  // namespace mbm::acceptance
