#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace mbm::specfun {

/// C(x) = (2 pi / (Gamma(2x+1) sin(pi x)))^{1/2} for 0 < x < 1.
double normalizing_constant(double x);

/// gamma(H) = sqrt(Gamma(2H+1) sin(pi H)) / (2 Gamma(H-1/2) cos(pi (H-1/2)/2)),
/// the prefactor of the convolution form of M_H, for 1/2 < H < 1.
double gamma_factor(double H);

/// L2-orthonormal Hermite function h_k(x) = (2^k k! sqrt(pi))^{-1/2} H_k(x) e^{-x^2/2},
/// evaluated by the normalized three-term recurrence.
double hermite_function(unsigned k, double x);

inline constexpr std::size_t kDefaultValidationPoints = 10001;

/// The Hurst functional h : [0,T] -> (1/2, 1).
///
/// Constructed either from one of the parametric families accepted in
/// configuration files (constant, linear a+bt, sinusoidal a+b sin(wt)) or
/// from an arbitrary callable.  Admissibility is checked on a validation
/// grid by validate(); construction alone does not validate.
class HurstFunctional {
 public:
  enum class Kind { Constant, Linear, Sine, Custom };

  HurstFunctional(double T, std::function<double(double)> eval, std::string description);

  static HurstFunctional constant(double H, double T = 1.0);
  static HurstFunctional linear(double a, double b, double T = 1.0);
  static HurstFunctional sine(double a, double b, double omega, double T = 1.0);

  /// Parses {"const": H}, {"linear": {"a":..,"b":..}} or
  /// {"sin": {"a":..,"b":..,"omega":..}}.  Throws ConfigError on shape errors.
  static HurstFunctional from_json(const nlohmann::json& j, double T);
  nlohmann::json to_json() const;

  double operator()(double t) const { return eval_(t); }
  double horizon() const { return T_; }
  const std::string& description() const { return description_; }
  Kind kind() const { return kind_; }
  bool is_constant() const { return kind_ == Kind::Constant; }

  /// Equispaced grid of `points` values on [0, T].
  std::vector<double> validation_grid(std::size_t points = kDefaultValidationPoints) const;
  double sup(std::size_t points = kDefaultValidationPoints) const;
  double inf(std::size_t points = kDefaultValidationPoints) const;

  /// Condition (A1): h(t) in (1/2, 1) on the validation grid and at every
  /// extra point, and grid jumps shrink under refinement (continuity).
  /// Throws DomainError whose message starts with "A1 violated".
  void validate(std::span<const double> extra_points = {},
                std::size_t points = kDefaultValidationPoints) const;

 private:
  double T_;
  std::function<double(double)> eval_;
  std::string description_;
  Kind kind_ = Kind::Custom;
  std::vector<double> params_;
};

struct TruncationParams {
  unsigned N = 0;  ///< truncation order
  unsigned d = 1;  ///< dimension
};

struct A2Diagnostic {
  bool holds = false;
  double sup = 0.0;        ///< sup of h over the validation grid
  double bound = 0.0;      ///< (1+2N)/(2N+d)
  unsigned minimal_N = 0;  ///< smallest N for which the bound holds at this d
};

/// (1 + 2N) / (2N + d).
double a2_bound(unsigned N, unsigned d);

/// Condition (A2): sup_t h(t) < (1+2N)/(2N+d), required for the truncated
/// local time of order N in dimension d to exist.
A2Diagnostic check_A2(const HurstFunctional& h, TruncationParams params,
                      std::size_t points = kDefaultValidationPoints);

}  // namespace mbm::specfun
