#include "mbm/specfun.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "mbm/errors.hpp"

namespace mbm::specfun {

using std::numbers::pi;

double normalizing_constant(double x) {
  if (!(x > 0.0 && x < 1.0)) {
    throw DomainError("normalizing_constant: argument must lie in (0,1), got " + std::to_string(x));
  }
  return std::sqrt(2.0 * pi / (std::tgamma(2.0 * x + 1.0) * std::sin(pi * x)));
}

double gamma_factor(double H) {
  if (!(H > 0.5 && H < 1.0)) {
    throw DomainError("gamma_factor: H must lie in (1/2,1), got " + std::to_string(H));
  }
  const double num = std::sqrt(std::tgamma(2.0 * H + 1.0) * std::sin(pi * H));
  return num / (2.0 * std::tgamma(H - 0.5) * std::cos(pi * (H - 0.5) / 2.0));
}

double hermite_function(unsigned k, double x) {
  const double gauss = std::exp(-0.5 * x * x);
  if (gauss == 0.0) return 0.0;
  double prev = 0.0;
  double curr = std::pow(pi, -0.25) * gauss;
  for (unsigned j = 0; j < k; ++j) {
    const double next =
        std::sqrt(2.0 / (j + 1.0)) * x * curr - std::sqrt(static_cast<double>(j) / (j + 1.0)) * prev;
    prev = curr;
    curr = next;
  }
  return curr;
}

HurstFunctional::HurstFunctional(double T, std::function<double(double)> eval,
                                 std::string description)
    : T_(T), eval_(std::move(eval)), description_(std::move(description)) {
  if (!(T > 0.0) || !std::isfinite(T)) throw ConfigError("Hurst functional: horizon T must be positive");
  if (!eval_) throw ConfigError("Hurst functional: empty evaluator");
}

HurstFunctional HurstFunctional::constant(double H, double T) {
  std::ostringstream os;
  os.precision(12);
  os << "const " << H;
  HurstFunctional h(T, [H](double) { return H; }, os.str());
  h.kind_ = Kind::Constant;
  h.params_ = {H};
  return h;
}

HurstFunctional HurstFunctional::linear(double a, double b, double T) {
  std::ostringstream os;
  os.precision(12);
  os << "linear " << a << " + " << b << " t";
  HurstFunctional h(T, [a, b](double t) { return a + b * t; }, os.str());
  h.kind_ = Kind::Linear;
  h.params_ = {a, b};
  return h;
}

HurstFunctional HurstFunctional::sine(double a, double b, double omega, double T) {
  std::ostringstream os;
  os.precision(12);
  os << "sin " << a << " + " << b << " sin(" << omega << " t)";
  HurstFunctional h(T, [a, b, omega](double t) { return a + b * std::sin(omega * t); }, os.str());
  h.kind_ = Kind::Sine;
  h.params_ = {a, b, omega};
  return h;
}

namespace {

double number_field(const nlohmann::json& obj, const char* key, const char* family) {
  if (!obj.is_object() || !obj.contains(key) || !obj.at(key).is_number()) {
    throw ConfigError(std::string("hurst.") + family + ": missing numeric field '" + key + "'");
  }
  return obj.at(key).get<double>();
}

}  // namespace

HurstFunctional HurstFunctional::from_json(const nlohmann::json& j, double T) {
  if (!j.is_object() || j.size() != 1) {
    throw ConfigError("hurst: expected exactly one of {\"const\"}, {\"linear\"}, {\"sin\"}");
  }
  if (j.contains("const")) {
    if (!j.at("const").is_number()) throw ConfigError("hurst.const: expected a number");
    return constant(j.at("const").get<double>(), T);
  }
  if (j.contains("linear")) {
    const auto& p = j.at("linear");
    return linear(number_field(p, "a", "linear"), number_field(p, "b", "linear"), T);
  }
  if (j.contains("sin")) {
    const auto& p = j.at("sin");
    return sine(number_field(p, "a", "sin"), number_field(p, "b", "sin"),
                number_field(p, "omega", "sin"), T);
  }
  throw ConfigError("hurst: unknown family '" + j.begin().key() + "'");
}

nlohmann::json HurstFunctional::to_json() const {
  switch (kind_) {
    case Kind::Constant:
      return {{"const", params_[0]}};
    case Kind::Linear:
      return {{"linear", {{"a", params_[0]}, {"b", params_[1]}}}};
    case Kind::Sine:
      return {{"sin", {{"a", params_[0]}, {"b", params_[1]}, {"omega", params_[2]}}}};
    case Kind::Custom:
      break;
  }
  return {{"custom", description_}};
}

std::vector<double> HurstFunctional::validation_grid(std::size_t points) const {
  points = std::max<std::size_t>(points, 2);
  std::vector<double> grid(points);
  for (std::size_t i = 0; i < points; ++i) {
    grid[i] = T_ * static_cast<double>(i) / static_cast<double>(points - 1);
  }
  return grid;
}

double HurstFunctional::sup(std::size_t points) const {
  double s = -std::numeric_limits<double>::infinity();
  for (double t : validation_grid(points)) s = std::max(s, eval_(t));
  return s;
}

double HurstFunctional::inf(std::size_t points) const {
  double s = std::numeric_limits<double>::infinity();
  for (double t : validation_grid(points)) s = std::min(s, eval_(t));
  return s;
}

namespace {

double max_jump(const HurstFunctional& h, std::size_t points) {
  const auto grid = h.validation_grid(points);
  double jump = 0.0;
  double prev = h(grid.front());
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const double v = h(grid[i]);
    jump = std::max(jump, std::abs(v - prev));
    prev = v;
  }
  return jump;
}

}  // namespace

void HurstFunctional::validate(std::span<const double> extra_points, std::size_t points) const {
  auto check = [&](double t) {
    const double v = eval_(t);
    if (!(v > 0.5 && v < 1.0)) {
      std::ostringstream os;
      os.precision(12);
      os << "A1 violated: h(" << t << ") = " << v << " outside (1/2,1) for " << description_;
      throw DomainError(os.str());
    }
  };
  for (double t : validation_grid(points)) check(t);
  for (double t : extra_points) {
    if (t < 0.0 || t > T_) throw DomainError("A1 violated: evaluation point outside [0,T]");
    check(t);
  }
  // A continuous function's largest grid jump shrinks under refinement; a
  // discontinuity keeps it bounded away from zero.
  const double coarse = max_jump(*this, points);
  const double fine = max_jump(*this, 2 * points - 1);
  if (fine > 1e-3 && fine > 0.75 * coarse) {
    throw DomainError("A1 violated: " + description_ + " appears discontinuous on [0,T]");
  }
}

double a2_bound(unsigned N, unsigned d) {
  if (d == 0) throw DomainError("a2_bound: dimension must be positive");
  return (1.0 + 2.0 * N) / (2.0 * N + d);
}

A2Diagnostic check_A2(const HurstFunctional& h, TruncationParams params, std::size_t points) {
  A2Diagnostic diag;
  diag.sup = h.sup(points);
  diag.bound = a2_bound(params.N, params.d);
  diag.holds = diag.sup < diag.bound;
  // (1+2N)/(2N+d) increases to 1, so the scan terminates whenever sup h < 1.
  unsigned n = 0;
  if (diag.sup < 1.0) {
    while (!(diag.sup < a2_bound(n, params.d))) ++n;
  } else {
    n = std::numeric_limits<unsigned>::max();
  }
  diag.minimal_N = n;
  return diag;
}

}  // namespace mbm::specfun
