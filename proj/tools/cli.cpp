#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <Eigen/Core>

#include "acceptance.hpp"
#include "mbm/errors.hpp"
#include "mbm/mh_operator.hpp"
#include "mbm/parallel.hpp"

#ifndef MBM_VERSION
#define MBM_VERSION "unknown"
#endif

namespace mbm::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

double number(const json& j, const std::string& key) {
  if (!j.is_number()) throw ConfigError("config." + key + ": expected a number");
  return j.get<double>();
}

std::uint64_t unsigned_integer(const json& j, const std::string& key) {
  if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<std::int64_t>() >= 0)) {
    throw ConfigError("config." + key + ": expected a nonnegative integer");
  }
  return j.get<std::uint64_t>();
}

std::vector<double> number_list(const json& j, const std::string& key) {
  if (j.is_number()) return {j.get<double>()};
  if (!j.is_array()) throw ConfigError("config." + key + ": expected a number or an array of numbers");
  std::vector<double> v;
  for (const auto& x : j) v.push_back(number(x, key));
  return v;
}

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {"hurst", "T",   "d",   "method", "s", "n_paths",
                                             "seed",  "eps", "N",   "n_max",  "phi", "grid",
                                             "index", "u",   "bins", "out"};
  return keys;
}

std::string one_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

// CSV streams use 17 significant digits so doubles round-trip.
std::ofstream open_csv(const fs::path& path) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot write " + path.string());
  os.precision(17);
  return os;
}

void ensure_directory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw ConfigError("cannot create output directory " + dir.string());
}

struct Overrides {
  std::string config_path;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::vector<double> eps;
  std::optional<std::size_t> n_paths;
  std::optional<std::size_t> threads;
};

RunConfig load(const Overrides& o) {
  json j = json::object();
  if (!o.config_path.empty()) {
    std::ifstream is(o.config_path);
    if (!is) throw ConfigError("cannot read config file " + o.config_path);
    try {
      j = json::parse(is);
    } catch (const json::parse_error& e) {
      throw ConfigError("config file " + o.config_path + " is not valid JSON: " + e.what());
    }
  }
  RunConfig c = RunConfig::from_json(j);
  if (o.out) c.out = *o.out;
  if (o.seed) c.seed = *o.seed;
  if (!o.eps.empty()) c.eps = o.eps;
  if (o.n_paths) c.n_paths = *o.n_paths;
  return c;
}

/// Output files and manifest bookkeeping for one invocation.
class Run {
 public:
  Run(std::string subcommand, RunConfig config)
      : subcommand_(std::move(subcommand)),
        config_(std::move(config)),
        start_(std::chrono::steady_clock::now()) {
    ensure_directory(config_.out);
  }

  const RunConfig& config() const { return config_; }

  std::ofstream csv(const std::string& name) {
    outputs_.push_back(name);
    return open_csv(fs::path(config_.out) / name);
  }
  void write_json(const std::string& name, const json& j) {
    outputs_.push_back(name);
    std::ofstream os(fs::path(config_.out) / name);
    if (!os) throw ConfigError("cannot write " + name);
    os << j.dump(2) << '\n';
  }
  void result(const std::string& key, json value) { results_[key] = std::move(value); }
  void warn(const std::string& w) { warnings_.push_back(w); }

  void finish(std::ostream& out) {
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    json m = {
        {"subcommand", subcommand_},
        {"config", config_.to_json()},
        {"versions",
         {{"mbmlt", MBM_VERSION},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                        std::to_string(EIGEN_MINOR_VERSION)},
          {"fftw", simulator::fft_backend_version()},
          {"compiler", __VERSION__}}},
        {"seed", config_.seed},
        {"threads", thread_count()},
        {"wall_time_seconds", wall},
        {"outputs", outputs_},
    };
    if (!results_.empty()) m["results"] = results_;
    if (!warnings_.empty()) m["warnings"] = warnings_;
    write_json("manifest.json", m);
    for (const auto& w : warnings_) out << "warning: " << w << '\n';
    out << subcommand_ << ": wrote";
    for (const auto& f : outputs_) out << ' ' << (fs::path(config_.out) / f).string();
    out << '\n';
  }

 private:
  std::string subcommand_;
  RunConfig config_;
  std::chrono::steady_clock::time_point start_;
  std::vector<std::string> outputs_;
  json results_ = json::object();
  std::vector<std::string> warnings_;
};

std::optional<double> regularization(double eps) {
  if (eps < 0.0) throw DomainError("eps must be nonnegative");
  return eps > 0.0 ? std::optional<double>(eps) : std::nullopt;
}

void cmd_simulate(Run& run) {
  const auto paths = simulator::simulate_mbm_d(run.config().simulation());
  auto os = run.csv("paths.csv");
  paths.write_csv(os);
  run.write_json("paths.json", paths.metadata());
}

void cmd_covariance(Run& run) {
  const auto& c = run.config();
  const auto h = c.hurst_functional();
  const auto grid = c.grid ? *c.grid : c.simulation().grid();
  const auto m = mh::covariance_matrix(grid, h);
  auto os = run.csv("covariance.csv");
  m.write_csv(os);
  run.result("trace", m.trace());
  run.result("min_eigenvalue", m.min_eigenvalue());
}

void cmd_localtime(Run& run) {
  const auto& c = run.config();
  const auto paths = simulator::simulate_mbm_d(c.simulation());
  auto os = run.csv("localtime.csv");
  os << "eps,N,estimate,stderr,n_paths\n";
  for (double eps : c.eps) {
    const auto est = localtime::local_time_mc(paths, {eps, c.N});
    os << eps << ',' << c.N << ',' << est.estimate << ',' << est.standard_error << ',' << est.n_paths << '\n';
    if (est.warning) run.warn(*est.warning);
  }
  if (c.bins) {
    const auto hist = localtime::occupation_histogram(paths, *c.bins);
    auto hs = run.csv("occupation.csv");
    hs << "lo,hi,density,stderr\n";
    for (std::size_t b = 0; b < hist.density.size(); ++b) {
      hs << hist.edges[b] << ',' << hist.edges[b + 1] << ',' << hist.density[b] << ','
         << hist.standard_error[b] << '\n';
    }
    run.result("mean_total_mass", hist.mean_total_mass);
  }
}

void cmd_stransform(Run& run) {
  const auto& c = run.config();
  const auto h = c.hurst_functional();
  const auto phi = c.test_function();
  auto os = run.csv("stransform.csv");
  auto cs = run.csv("chaos.csv");
  os << "eps,N,value\n";
  cs << "eps,n,term,partial_sum\n";
  for (double eps : c.eps) {
    const chaos::LocalTimeSpec spec{h, c.T, c.N, regularization(eps)};
    os << eps << ',' << c.N << ',' << chaos::s_transform_local_time(spec, phi) << '\n';
    if (c.n_max < c.N) continue;
    const auto p = chaos::chaos_pairing(spec, phi, c.n_max);
    for (std::size_t i = 0; i < p.orders.size(); ++i) {
      cs << eps << ',' << p.orders[i] << ',' << p.terms[i] << ',' << p.partial_sums[i] << '\n';
    }
  }
}

void cmd_kernels(Run& run) {
  const auto& c = run.config();
  if (c.index.size() != c.d) throw ConfigError("config.index: expected d kernel orders");
  const unsigned order = std::accumulate(c.index.begin(), c.index.end(), 0u);
  if (c.u.empty()) throw ConfigError("config.u: expected at least one evaluation point");
  for (const auto& row : c.u) {
    if (row.size() != order) throw ConfigError("config.u: each point needs sum(index) coordinates");
  }
  const auto h = c.hurst_functional();
  auto os = run.csv("kernels.csv");
  os << "eps";
  for (unsigned i = 0; i < order; ++i) os << ",u" << (i + 1);
  os << ",value\n";
  for (double eps : c.eps) {
    const chaos::KernelSpec spec{{h, c.T, c.N, regularization(eps)}, {c.index}};
    std::vector<double> values(c.u.size());
    parallel_for(c.u.size(), [&](std::size_t i) { values[i] = chaos::kernel_eval(spec, c.u[i]); });
    for (std::size_t i = 0; i < c.u.size(); ++i) {
      os << eps;
      for (double x : c.u[i]) os << ',' << x;
      os << ',' << values[i] << '\n';
    }
  }
}

void cmd_converge(Run& run) {
  const auto& c = run.config();
  const chaos::LocalTimeSpec spec{c.hurst_functional(), c.T, c.N, std::nullopt};
  const auto table = chaos::convergence_eps(spec, c.test_function(), c.eps);
  auto os = run.csv("converge.csv");
  os << "eps,value,gap\n";
  for (const auto& r : table.rows) os << r.eps << ',' << r.value << ',' << r.gap << '\n';
  run.result("limit", table.limit);
}

bool cmd_selftest(Run& run, const std::vector<int>& only, std::ostream& out) {
  std::ostringstream log;
  const auto results = acceptance::run_all(log, only);
  run.csv("acceptance.txt") << log.str();
  out << log.str();
  const auto passed = std::count_if(results.begin(), results.end(), [](const auto& r) { return r.pass; });
  run.result("passed", passed);
  run.result("total", results.size());
  return passed == static_cast<std::ptrdiff_t>(results.size());
}

}  // namespace

RunConfig RunConfig::from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config: expected a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!known_keys().count(key)) throw ConfigError("config: unknown key '" + key + "'");
  }
  RunConfig c;
  if (j.contains("hurst")) c.hurst = j.at("hurst");
  if (j.contains("T")) c.T = number(j.at("T"), "T");
  if (!(c.T > 0.0)) throw ConfigError("config.T: must be positive");
  if (j.contains("d")) c.d = static_cast<unsigned>(unsigned_integer(j.at("d"), "d"));
  if (c.d == 0) throw ConfigError("config.d: must be positive");
  if (j.contains("method")) {
    if (!j.at("method").is_string()) throw ConfigError("config.method: expected a string");
    c.method = simulator::method_from_string(j.at("method").get<std::string>());
  }
  if (j.contains("s")) c.s = unsigned_integer(j.at("s"), "s");
  if (j.contains("n_paths")) c.n_paths = unsigned_integer(j.at("n_paths"), "n_paths");
  if (j.contains("seed")) c.seed = unsigned_integer(j.at("seed"), "seed");
  if (j.contains("eps")) c.eps = number_list(j.at("eps"), "eps");
  if (c.eps.empty()) throw ConfigError("config.eps: expected at least one value");
  if (j.contains("N")) c.N = static_cast<unsigned>(unsigned_integer(j.at("N"), "N"));
  if (j.contains("n_max")) c.n_max = static_cast<unsigned>(unsigned_integer(j.at("n_max"), "n_max"));
  if (j.contains("phi")) c.phi = j.at("phi");
  if (j.contains("grid")) c.grid = number_list(j.at("grid"), "grid");
  if (j.contains("index")) {
    if (!j.at("index").is_array()) throw ConfigError("config.index: expected an array");
    for (const auto& x : j.at("index")) c.index.push_back(static_cast<unsigned>(unsigned_integer(x, "index")));
  }
  if (j.contains("u")) {
    if (!j.at("u").is_array()) throw ConfigError("config.u: expected an array of points");
    for (const auto& row : j.at("u")) c.u.push_back(number_list(row, "u"));
  }
  if (j.contains("bins")) {
    const auto& b = j.at("bins");
    if (!b.is_object()) throw ConfigError("config.bins: expected {lo, hi, count}");
    localtime::HistogramBins bins;
    if (b.contains("lo")) bins.lo = number(b.at("lo"), "bins.lo");
    if (b.contains("hi")) bins.hi = number(b.at("hi"), "bins.hi");
    if (b.contains("count")) bins.count = unsigned_integer(b.at("count"), "bins.count");
    c.bins = bins;
  }
  if (j.contains("out")) {
    if (!j.at("out").is_string()) throw ConfigError("config.out: expected a path");
    c.out = j.at("out").get<std::string>();
  }
  return c;
}

json RunConfig::to_json() const {
  json j = {
      {"hurst", hurst},   {"T", T},         {"d", d},         {"method", simulator::to_string(method)},
      {"s", s},           {"n_paths", n_paths}, {"seed", seed}, {"eps", eps},
      {"N", N},           {"n_max", n_max}, {"out", out},
  };
  if (phi) j["phi"] = *phi;
  if (grid) j["grid"] = *grid;
  if (!index.empty()) j["index"] = index;
  if (!u.empty()) j["u"] = u;
  if (bins) j["bins"] = {{"lo", bins->lo}, {"hi", bins->hi}, {"count", bins->count}};
  return j;
}

specfun::HurstFunctional RunConfig::hurst_functional() const {
  auto h = specfun::HurstFunctional::from_json(hurst, T);
  h.validate();
  return h;
}

chaos::TestFunction RunConfig::test_function() const {
  if (!phi) return chaos::TestFunction::zero(d);
  auto f = chaos::TestFunction::from_json(*phi);
  if (f.dim() != d) throw ConfigError("config.phi: expected d components");
  return f;
}

simulator::SimulationConfig RunConfig::simulation() const {
  simulator::SimulationConfig c{hurst_functional()};
  c.T = T;
  c.s = s;
  c.n_paths = n_paths;
  c.d = d;
  c.seed = seed;
  c.method = method;
  c.validate();
  return c;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return kExitConfig;
  if (dynamic_cast<const json::exception*>(&e)) return kExitConfig;
  if (dynamic_cast<const fs::filesystem_error*>(&e)) return kExitConfig;
  if (dynamic_cast<const DomainError*>(&e)) return kExitDomain;
  if (dynamic_cast<const NumericalError*>(&e)) return kExitNumerical;
  return kExitNumerical;
}

namespace {

const char* kind_for(const std::exception& e) {
  if (dynamic_cast<const DivergenceError*>(&e)) return "divergence";
  switch (exit_code_for(e)) {
    case kExitConfig:
      return "config";
    case kExitDomain:
      return "domain";
    default:
      return "numerical";
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multifractional Brownian motion: simulation, local times and chaos kernels", "mbmlt"};
  app.require_subcommand(1);
  app.set_version_flag("--version", MBM_VERSION);

  Overrides o;
  std::vector<int> only;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config_path, "JSON configuration file")->check(CLI::ExistingFile);
    sub->add_option("--out", o.out, "output directory (overrides config.out)");
    sub->add_option("--seed", o.seed, "master seed (overrides config.seed)");
    sub->add_option("--eps", o.eps, "regularization width(s), comma separated (overrides config.eps)")
        ->delimiter(',');
    sub->add_option("--n-paths", o.n_paths, "number of paths (overrides config.n_paths)");
    sub->add_option("--threads", o.threads, "worker threads (default: MBM_NUM_THREADS or all cores)");
  };
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"simulate", "simulate mBm paths (paths.csv, paths.json)"},
      {"covariance", "covariance matrix R_h on a grid (covariance.csv)"},
      {"localtime", "Monte Carlo regularized local time at 0 (localtime.csv)"},
      {"stransform", "S-transform of the local time and its chaos partial sums"},
      {"kernels", "chaos kernels on a grid of points (kernels.csv)"},
      {"converge", "eps -> 0 S-transform gap table (converge.csv)"},
      {"selftest", "run the acceptance suite"},
  };
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    add_common(sub);
    if (name == "selftest") sub->add_option("--only", only, "criterion numbers to run")->delimiter(',');
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return kExitOk;
    }
    err << "error: exit=" << kExitConfig << " kind=usage reason=" << one_line(e.what()) << '\n';
    return kExitConfig;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  struct ThreadScope {
    bool active;
    ~ThreadScope() {
      if (active) set_thread_count(0);
    }
  } scope{o.threads.has_value()};
  try {
    if (o.threads) {
      if (*o.threads == 0) throw ConfigError("--threads: must be positive");
      set_thread_count(*o.threads);
    }
    Run r(name, load(o));
    int status = kExitOk;
    if (name == "simulate") cmd_simulate(r);
    else if (name == "covariance") cmd_covariance(r);
    else if (name == "localtime") cmd_localtime(r);
    else if (name == "stransform") cmd_stransform(r);
    else if (name == "kernels") cmd_kernels(r);
    else if (name == "converge") cmd_converge(r);
    else if (name == "selftest" && !cmd_selftest(r, only, out)) status = kExitSelftestFailed;
    r.finish(out);
    return status;
  } catch (const std::exception& e) {
    const int code = exit_code_for(e);
    err << "error: exit=" << code << " kind=" << kind_for(e) << " reason=" << one_line(e.what()) << '\n';
    return code;
  }
}

}  // namespace mbm::cli
