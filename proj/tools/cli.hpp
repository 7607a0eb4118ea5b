#pragma once

// Command-line front end: configuration parsing, subcommand dispatch and
// file output.  All numerics live in the mbm library.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mbm/chaos.hpp"
#include "mbm/localtime.hpp"
#include "mbm/simulator.hpp"
#include "mbm/specfun.hpp"

namespace mbm::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitDomain = 2;
inline constexpr int kExitNumerical = 3;
inline constexpr int kExitSelftestFailed = 4;

/// Everything a run needs.  Parsed from a JSON object; unknown keys are
/// rejected so that a manifest echo fully describes the run.
struct RunConfig {
  nlohmann::json hurst = {{"const", 0.7}};
  double T = 1.0;
  unsigned d = 1;
  simulator::Method method = simulator::Method::Exact;
  std::size_t s = 100;
  std::size_t n_paths = 1000;
  std::uint64_t seed = 0;
  std::vector<double> eps = {0.01};  ///< 0 requests the unregularized functional
  unsigned N = 0;
  unsigned n_max = 8;
  std::optional<nlohmann::json> phi;  ///< test function; zero when absent
  std::optional<std::vector<double>> grid;  ///< covariance grid; kT/s when absent
  std::vector<unsigned> index;  ///< kernel orders (2n_1, ..., 2n_d)
  std::vector<std::vector<double>> u;  ///< kernel evaluation points
  std::optional<localtime::HistogramBins> bins;
  std::string out = ".";

  static RunConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;

  specfun::HurstFunctional hurst_functional() const;
  chaos::TestFunction test_function() const;
  simulator::SimulationConfig simulation() const;
};

/// Runs one invocation.  args excludes the program name.  Returns the exit
/// status; failures print one line "error: exit=<code> kind=<kind> reason=<text>" to err.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Exit status for an exception escaping a subcommand.
int exit_code_for(const std::exception& e);

}  // namespace mbm::cli
