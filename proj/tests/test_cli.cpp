#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "cli.hpp"
#include "mbm/errors.hpp"

using namespace mbm;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Invocation {
  int code;
  std::string out, err;
};

Invocation invoke(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(is), {});
}

class Scratch {
 public:
  Scratch() : root_(fs::temp_directory_path() / ("mbmlt-test-" + std::to_string(::getpid()))) {
    fs::create_directories(root_);
  }
  ~Scratch() { fs::remove_all(root_); }
  fs::path config(const std::string& name, const json& j) const {
    const auto p = root_ / (name + ".json");
    std::ofstream(p) << j.dump();
    return p;
  }
  fs::path dir(const std::string& name) const { return root_ / name; }

 private:
  fs::path root_;
};

const json kLinear = {{"linear", {{"a", 0.55}, {"b", 0.1}}}};

}  // namespace

TEST_CASE("configuration parsing") {
  const auto c = cli::RunConfig::from_json(json::parse(R"({
      "hurst": {"sin": {"a": 0.7, "b": 0.1, "omega": 3}}, "T": 2, "d": 2, "method": "wood_chan",
      "s": 64, "n_paths": 10, "seed": 5, "eps": [0.1, 0.01], "N": 1, "n_max": 4,
      "bins": {"lo": -3, "hi": 3, "count": 12}})"));
  CHECK(c.T == 2.0);
  CHECK(c.d == 2);
  CHECK(c.method == simulator::Method::WoodChan);
  CHECK(c.eps == std::vector<double>{0.1, 0.01});
  CHECK(c.bins->count == 12);
  CHECK(cli::RunConfig::from_json(c.to_json()).to_json() == c.to_json());
  CHECK(c.hurst_functional().horizon() == 2.0);
  CHECK(c.test_function().is_zero());

  CHECK_THROWS_AS(cli::RunConfig::from_json(json::parse(R"({"hurts": {"const": 0.7}})")), ConfigError);
  CHECK_THROWS_AS(cli::RunConfig::from_json(json::parse(R"({"T": -1})")), ConfigError);
  CHECK_THROWS_AS(cli::RunConfig::from_json(json::parse(R"({"seed": -3})")), ConfigError);
  CHECK_THROWS_AS(cli::RunConfig::from_json(json::parse(R"({"method": "fast"})")), ConfigError);
  CHECK_THROWS_AS(cli::RunConfig::from_json(json::parse(R"({"eps": "small"})")), ConfigError);
  CHECK_THROWS_AS(cli::RunConfig::from_json(json::parse("[1, 2]")), ConfigError);
}

TEST_CASE("exit codes and reasons") {
  Scratch tmp;
  SUBCASE("A1 violation") {
    const auto cfg = tmp.config("a1", {{"hurst", {{"linear", {{"a", 0.4}, {"b", 0.3}}}}}, {"s", 8}, {"n_paths", 2}});
    const auto r = invoke({"simulate", "--config", cfg.string(), "--out", tmp.dir("a1").string()});
    CHECK(r.code == cli::kExitDomain);
    CHECK(r.err.rfind("error: exit=2 kind=domain reason=A1 violated", 0) == 0);
    CHECK(std::count(r.err.begin(), r.err.end(), '\n') == 1);
  }
  SUBCASE("A2 violation") {
    const auto cfg = tmp.config("a2", {{"hurst", {{"const", 0.6}}}, {"d", 3}, {"eps", 0.0}});
    const auto r = invoke({"stransform", "--config", cfg.string(), "--out", tmp.dir("a2").string()});
    CHECK(r.code == cli::kExitDomain);
    CHECK(r.err.find("kind=divergence reason=A2 violated") != std::string::npos);
  }
  SUBCASE("configuration errors") {
    const auto bad = tmp.config("bad", {{"nonsense", 1}});
    CHECK(invoke({"simulate", "--config", bad.string()}).code == cli::kExitConfig);
    CHECK(invoke({"simulate", "--config", "/nonexistent/config.json"}).code == cli::kExitConfig);
    CHECK(invoke({"frobnicate"}).code == cli::kExitConfig);
    CHECK(invoke({}).code == cli::kExitConfig);
    const auto r = invoke({"simulate", "--n-paths", "many"});
    CHECK(r.code == cli::kExitConfig);
    CHECK(r.err.rfind("error: exit=1 kind=usage", 0) == 0);
  }
  SUBCASE("help") {
    const auto r = invoke({"--help"});
    CHECK(r.code == 0);
    CHECK(r.out.find("stransform") != std::string::npos);
  }
  CHECK(cli::exit_code_for(NumericalError("quadrature did not converge", 1e-3)) == cli::kExitNumerical);
  CHECK(cli::exit_code_for(DivergenceError("x")) == cli::kExitDomain);
  CHECK(cli::exit_code_for(ConfigError("x")) == cli::kExitConfig);
}

TEST_CASE("simulate output and reproducibility") {
  Scratch tmp;
  const auto cfg = tmp.config("sim", {{"hurst", kLinear}, {"d", 2}, {"s", 16}, {"n_paths", 3}, {"seed", 11}});
  REQUIRE(invoke({"simulate", "--config", cfg.string(), "--out", tmp.dir("a").string()}).code == 0);
  REQUIRE(invoke({"simulate", "--config", cfg.string(), "--out", tmp.dir("b").string(), "--threads", "3"}).code == 0);
  REQUIRE(invoke({"simulate", "--config", cfg.string(), "--out", tmp.dir("c").string(), "--seed", "12"}).code == 0);

  const auto a = slurp(tmp.dir("a") / "paths.csv");
  CHECK(a == slurp(tmp.dir("b") / "paths.csv"));
  CHECK(a != slurp(tmp.dir("c") / "paths.csv"));
  CHECK(a.rfind("path,t,x1,x2\n0,0,0,0\n", 0) == 0);

  const auto manifest = json::parse(slurp(tmp.dir("a") / "manifest.json"));
  CHECK(manifest["subcommand"] == "simulate");
  CHECK(manifest["seed"] == 11);
  CHECK(manifest["config"]["hurst"] == kLinear);
  CHECK(manifest["versions"].contains("fftw"));
  CHECK(manifest["wall_time_seconds"].get<double>() >= 0.0);
  CHECK(json::parse(slurp(tmp.dir("c") / "manifest.json"))["seed"] == 12);
  CHECK(json::parse(slurp(tmp.dir("a") / "paths.json"))["method"] == "exact");

  // the CSV body is the module's own export
  auto sc = cli::RunConfig::from_json(json::parse(slurp(cfg))).simulation();
  std::ostringstream direct;
  direct.precision(17);
  simulator::simulate_mbm_d(sc).write_csv(direct);
  CHECK(a == direct.str());
}

TEST_CASE("covariance, localtime, kernels") {
  Scratch tmp;
  const auto cfg = tmp.config("cov", {{"hurst", kLinear}, {"grid", {0.25, 0.5, 1.0}}});
  REQUIRE(invoke({"covariance", "--config", cfg.string(), "--out", tmp.dir("cov").string()}).code == 0);
  std::ostringstream direct;
  mh::covariance_matrix(std::vector<double>{0.25, 0.5, 1.0}, specfun::HurstFunctional::linear(0.55, 0.1))
      .write_csv(direct);
  CHECK(slurp(tmp.dir("cov") / "covariance.csv") == direct.str());

  const auto lt = tmp.config("lt", {{"hurst", kLinear}, {"s", 32}, {"n_paths", 50}, {"seed", 2}, {"N", 1}});
  const auto r = invoke({"localtime", "--config", lt.string(), "--out", tmp.dir("lt").string(), "--eps", "0.5,0.1"});
  REQUIRE(r.code == 0);
  std::istringstream rows(slurp(tmp.dir("lt") / "localtime.csv"));
  std::string line;
  std::getline(rows, line);
  CHECK(line == "eps,N,estimate,stderr,n_paths");
  std::getline(rows, line);
  CHECK(line.rfind("0.5,1,", 0) == 0);
  std::getline(rows, line);
  CHECK(line.rfind("0.10000000000000001,1,", 0) == 0);
  CHECK(line.substr(line.rfind(',') + 1) == "50");

  const auto ker = tmp.config("ker", {{"hurst", {{"const", 0.7}}},
                                      {"index", {2}},
                                      {"u", {{0.2, 0.4}, {0.4, 0.2}}},
                                      {"eps", 0.01}});
  REQUIRE(invoke({"kernels", "--config", ker.string(), "--out", tmp.dir("ker").string()}).code == 0);
  std::istringstream kr(slurp(tmp.dir("ker") / "kernels.csv"));
  std::vector<std::string> lines;
  while (std::getline(kr, line)) lines.push_back(line);
  REQUIRE(lines.size() == 3);
  CHECK(lines[0] == "eps,u1,u2,value");
  CHECK(lines[1].substr(lines[1].rfind(',')) == lines[2].substr(lines[2].rfind(',')));
  const auto bad = tmp.config("kbad", {{"hurst", {{"const", 0.7}}}, {"index", {2}}, {"u", {{0.2}}}});
  CHECK(invoke({"kernels", "--config", bad.string(), "--out", tmp.dir("kbad").string()}).code == cli::kExitConfig);
}

TEST_CASE("converge emits a monotone gap table") {
  Scratch tmp;
  const auto cfg = tmp.config("conv", {{"hurst", kLinear},
                                       {"d", 2},
                                       {"N", 1},
                                       {"eps", {0.1, 0.01, 0.001}},
                                       {"phi", json::parse(R"([{"gauss": {"amplitude": 1, "center": 0.3, "width": 0.5}},
                                                               {"gauss": {"amplitude": 1, "center": -0.2, "width": 0.4}}])")}});
  REQUIRE(invoke({"converge", "--config", cfg.string(), "--out", tmp.dir("conv").string()}).code == 0);
  std::istringstream is(slurp(tmp.dir("conv") / "converge.csv"));
  std::string line;
  std::getline(is, line);
  CHECK(line == "eps,value,gap");
  double prev = INFINITY;
  int rows = 0;
  while (std::getline(is, line)) {
    const double gap = std::stod(line.substr(line.rfind(',') + 1));
    CHECK(gap < prev);
    prev = gap;
    ++rows;
  }
  CHECK(rows == 3);
  const auto manifest = json::parse(slurp(tmp.dir("conv") / "manifest.json"));
  CHECK(manifest["results"]["limit"].get<double>() < 0.0);

  const auto up = tmp.config("up", {{"hurst", kLinear}, {"eps", {0.01, 0.1}}});
  CHECK(invoke({"converge", "--config", up.string(), "--out", tmp.dir("up").string()}).code == cli::kExitConfig);
}

TEST_CASE("stransform writes the value and chaos partial sums") {
  Scratch tmp;
  const auto cfg = tmp.config("st", {{"hurst", kLinear},
                                     {"eps", {0.01, 0.0}},
                                     {"n_max", 3},
                                     {"phi", json::parse(R"([{"gauss": {"amplitude": 0.5, "center": 0.2, "width": 0.5}}])")}});
  REQUIRE(invoke({"stransform", "--config", cfg.string(), "--out", tmp.dir("st").string()}).code == 0);
  std::istringstream is(slurp(tmp.dir("st") / "chaos.csv"));
  std::string line;
  int rows = 0;
  while (std::getline(is, line)) ++rows;
  CHECK(rows == 1 + 2 * 4);
  CHECK(slurp(tmp.dir("st") / "stransform.csv").rfind("eps,N,value\n0.01,0,", 0) == 0);
}
