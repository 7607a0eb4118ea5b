#include "mbm/chaos.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "mbm/errors.hpp"
#include "mbm/parallel.hpp"

namespace mbm::chaos {

using std::numbers::pi;

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

// Closed form of M_H 1_{[0,t)} with gamma(H)/(H-1/2) hoisted out.
class IndicatorImage {
 public:
  IndicatorImage(double H, double t)
      : beta_(H - 0.5), scale_(specfun::gamma_factor(H) / (H - 0.5)), t_(t) {}

  double operator()(double u) const {
    if (t_ == 0.0) return 0.0;
    return scale_ * (signed_power(t_ - u) + signed_power(u));
  }

 private:
  double signed_power(double x) const {
    if (x == 0.0) return 0.0;
    return x > 0.0 ? std::pow(x, beta_) : -std::pow(-x, beta_);
  }
  double beta_, scale_, t_;
};

// Adaptive integral over [lo, hi] split at the given interior cuts.  Every
// piece is halved; each half is graded towards its outer endpoint with
// exponent `kink`, except at `lo` where `lo_exponent` applies.
quad::Result integrate_with_cuts(const quad::Integrand& f, double lo, double hi,
                                 std::vector<double> cuts, double lo_exponent, double kink,
                                 const quad::Options& opts) {
  cuts.push_back(lo);
  cuts.push_back(hi);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  cuts.erase(std::remove_if(cuts.begin(), cuts.end(), [&](double c) { return c < lo || c > hi; }),
             cuts.end());
  quad::Result total;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double a = cuts[i];
    const double b = cuts[i + 1];
    const double mid = 0.5 * (a + b);
    total += quad::integrate_singular(f, a, mid, i == 0 ? lo_exponent : kink, opts);
    quad::Result upper = quad::integrate_singular(f, b, mid, kink, opts);
    upper.value = -upper.value;
    total += upper;
  }
  return total;
}

double hermite_cutoff(const HermiteCombination& c) {
  return std::sqrt(2.0 * static_cast<double>(c.coefficients.size()) + 1.0) + 10.0;
}

// Exponent e with integrand ~ t^e at t = 0 for the unregularized truncated
// local time of order N: t^{-d h} (t^{2 - 2h})^N, worst case at sup h.
double local_time_exponent(const specfun::HurstFunctional& h, unsigned N, unsigned d) {
  const double hs = h.sup();
  return 2.0 * N * (1.0 - hs) - static_cast<double>(d) * hs;
}

void require_A2(const specfun::HurstFunctional& h, unsigned N, unsigned d) {
  const auto diag = specfun::check_A2(h, {N, d});
  if (!diag.holds) {
    std::ostringstream os;
    os << "A2 violated: sup h = " << diag.sup << " >= (1+2N)/(2N+d) = " << diag.bound
       << " for N = " << N << ", d = " << d << " (minimal N = " << diag.minimal_N
       << "); unregularized integral diverges";
    throw DivergenceError(os.str());
  }
}

void validate_spec(const LocalTimeSpec& spec, unsigned d) {
  if (d == 0) throw ConfigError("test function must have at least one component");
  if (!(spec.T > 0.0) || spec.T > spec.h.horizon() * (1.0 + 1e-12)) {
    throw ConfigError("local time: T must lie in (0, horizon of h]");
  }
  spec.h.validate();
  if (spec.eps) {
    if (!(*spec.eps >= 0.0)) throw DomainError("local time: eps must be nonnegative");
  }
  const bool regularized = spec.eps && *spec.eps > 0.0;
  if (!regularized) require_A2(spec.h, spec.N, d);
}

double variance_at(const specfun::HurstFunctional& h, double t, std::optional<double> eps) {
  return eps.value_or(0.0) + std::pow(t, 2.0 * h(t));
}

}  // namespace

TestFunction::TestFunction(std::vector<TestComponent> components)
    : components_(std::move(components)) {
  for (const auto& c : components_) {
    if (const auto* g = std::get_if<GaussianBump>(&c)) {
      if (!(g->width > 0.0)) throw ConfigError("test function: Gaussian width must be positive");
    }
  }
}

TestFunction TestFunction::zero(unsigned d) {
  return TestFunction(std::vector<TestComponent>(d, GaussianBump{0.0, 0.0, 1.0}));
}

TestFunction TestFunction::from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.empty()) throw ConfigError("test_function: expected a non-empty array");
  std::vector<TestComponent> comps;
  for (const auto& c : j) {
    if (c.contains("gauss")) {
      const auto& g = c.at("gauss");
      comps.emplace_back(GaussianBump{g.value("amplitude", 1.0), g.value("center", 0.0),
                                      g.value("width", 1.0)});
    } else if (c.contains("hermite")) {
      if (!c.at("hermite").is_array()) throw ConfigError("test_function.hermite: expected an array");
      comps.emplace_back(HermiteCombination{c.at("hermite").get<std::vector<double>>()});
    } else {
      throw ConfigError("test_function: component must be {\"gauss\": ...} or {\"hermite\": [...]}");
    }
  }
  return TestFunction(std::move(comps));
}

nlohmann::json TestFunction::to_json() const {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& c : components_) {
    std::visit(Overloaded{
                   [&](const GaussianBump& g) {
                     out.push_back({{"gauss",
                                     {{"amplitude", g.amplitude}, {"center", g.center}, {"width", g.width}}}});
                   },
                   [&](const HermiteCombination& h) { out.push_back({{"hermite", h.coefficients}}); },
               },
               c);
  }
  return out;
}

double TestFunction::eval(unsigned j, double x) const {
  return std::visit(Overloaded{
                        [&](const GaussianBump& g) {
                          const double z = (x - g.center) / g.width;
                          return g.amplitude * std::exp(-0.5 * z * z);
                        },
                        [&](const HermiteCombination& h) {
                          double s = 0.0;
                          for (std::size_t k = 0; k < h.coefficients.size(); ++k) {
                            if (h.coefficients[k] != 0.0) {
                              s += h.coefficients[k] * specfun::hermite_function(static_cast<unsigned>(k), x);
                            }
                          }
                          return s;
                        },
                    },
                    components_.at(j));
}

double TestFunction::l2_norm_sq(unsigned j) const {
  return std::visit(Overloaded{
                        [](const GaussianBump& g) {
                          return g.amplitude * g.amplitude * g.width * std::sqrt(pi);
                        },
                        [](const HermiteCombination& h) {
                          double s = 0.0;
                          for (double c : h.coefficients) s += c * c;
                          return s;
                        },
                    },
                    components_.at(j));
}

bool TestFunction::is_zero() const {
  for (unsigned j = 0; j < dim(); ++j) {
    if (l2_norm_sq(j) != 0.0) return false;
  }
  return true;
}

TestFunction TestFunction::scaled(double lambda) const {
  std::vector<TestComponent> out = components_;
  for (auto& c : out) {
    std::visit(Overloaded{
                   [&](GaussianBump& g) { g.amplitude *= lambda; },
                   [&](HermiteCombination& h) {
                     for (double& v : h.coefficients) v *= lambda;
                   },
               },
               c);
  }
  return TestFunction(std::move(out));
}

mh::ScalarFunction TestFunction::component_function(unsigned j) const {
  mh::ScalarFunction f;
  f.eval = [self = *this, j](double x) { return self.eval(j, x); };
  std::visit(Overloaded{
                 [&](const GaussianBump& g) {
                   // |a| e^{-r^2/2} < 1e-16 |a| beyond r = 8.6
                   const double r = 9.0 * g.width;
                   f.support = std::pair{g.center - r, g.center + r};
                 },
                 [&](const HermiteCombination& h) {
                   const double r = hermite_cutoff(h);
                   f.support = std::pair{-r, r};
                 },
             },
             components_.at(j));
  return f;
}

unsigned ChaosIndex::total() const {
  unsigned s = 0;
  for (unsigned m : orders) s += m;
  return s;
}

double ChaosIndex::factorial() const {
  double f = 1.0;
  for (unsigned m : orders) f *= std::tgamma(m + 1.0);
  return f;
}

bool ChaosIndex::all_even() const {
  return std::all_of(orders.begin(), orders.end(), [](unsigned m) { return m % 2 == 0; });
}

double exp_trunc(unsigned N, double x) {
  if (N == 0) return std::exp(x);
  const double ax = std::abs(x);
  if (ax <= 0.5 || N >= 2.0 * ax) {
    double term = 1.0;
    for (unsigned k = 1; k <= N; ++k) term *= x / k;
    double sum = 0.0;
    for (unsigned n = N; n < N + 200; ++n) {
      sum += term;
      if (std::abs(term) <= 1e-17 * std::abs(sum) || term == 0.0) break;
      term *= x / (n + 1.0);
    }
    return sum;
  }
  // Neumaier-compensated e^x - sum_{n<N} x^n/n!
  double sum = std::exp(x);
  double comp = 0.0;
  double term = 1.0;
  for (unsigned n = 0; n < N; ++n) {
    const double v = -term;
    const double t = sum + v;
    comp += std::abs(sum) >= std::abs(v) ? (sum - t) + v : (v - t) + sum;
    sum = t;
    term *= x / (n + 1.0);
  }
  return sum + comp;
}

double projection(const TestFunction& phi, unsigned j, double H, double t, const quad::Options& opts) {
  if (t == 0.0) return 0.0;
  const auto f = phi.component_function(j);
  if (phi.l2_norm_sq(j) == 0.0) return 0.0;
  const IndicatorImage image(H, t);
  auto integrand = [&](double x) { return f(x) * image(x); };
  const auto [lo, hi] = *f.support;
  const double kink = H - 0.5;
  const auto r = integrate_with_cuts(integrand, lo, hi, {0.0, t}, kink, kink, opts);
  return quad::value_or_throw(r, "projection");
}

double s_transform_delta(const specfun::HurstFunctional& h, double t, const TestFunction& phi,
                         std::optional<double> eps) {
  if (!(t > 0.0) || t > h.horizon()) throw DomainError("s_transform_delta: t must lie in (0, T]");
  if (eps && !(*eps >= 0.0)) throw DomainError("s_transform_delta: eps must be nonnegative");
  const double H = h(t);
  const double w = variance_at(h, t, eps);
  double a2 = 0.0;
  for (unsigned j = 0; j < phi.dim(); ++j) {
    const double a = projection(phi, j, H, t);
    a2 += a * a;
  }
  const double d = phi.dim();
  return std::pow(2.0 * pi * w, -0.5 * d) * std::exp(-0.5 * a2 / w);
}

double s_transform_local_time(const LocalTimeSpec& spec, const TestFunction& phi,
                              const quad::Options& opts) {
  const unsigned d = phi.dim();
  validate_spec(spec, d);
  const bool zero = phi.is_zero();
  auto integrand = [&](double t) {
    if (t == 0.0) return 0.0;
    const double H = spec.h(t);
    const double w = variance_at(spec.h, t, spec.eps);
    double a2 = 0.0;
    if (!zero) {
      for (unsigned j = 0; j < d; ++j) {
        const double a = projection(phi, j, H, t);
        a2 += a * a;
      }
    }
    return std::pow(2.0 * pi * w, -0.5 * d) * exp_trunc(spec.N, -0.5 * a2 / w);
  };
  double exponent = 0.0;
  if (specfun::check_A2(spec.h, {spec.N, d}).holds) {
    exponent = std::min(0.0, local_time_exponent(spec.h, spec.N, d));
  }
  const auto r = quad::integrate_singular(integrand, 0.0, spec.T, exponent, opts);
  return quad::value_or_throw(r, "s_transform_local_time");
}

double kernel_eval(const KernelSpec& spec, std::span<const double> u, const quad::Options& opts) {
  const auto& lt = spec.functional;
  const unsigned d = spec.index.dim();
  if (d == 0) throw ConfigError("kernel_eval: empty chaos index");
  if (u.size() != spec.index.total()) {
    throw ConfigError("kernel_eval: expected " + std::to_string(spec.index.total()) +
                      " arguments, got " + std::to_string(u.size()));
  }
  if (!spec.index.all_even()) return 0.0;
  const unsigned n = spec.index.total() / 2;
  if (n < lt.N) return 0.0;
  validate_spec(lt, d);

  std::vector<double> args(u.begin(), u.end());
  std::sort(args.begin(), args.end());

  double n_factorial = 1.0;
  for (unsigned m : spec.index.orders) n_factorial *= std::tgamma(m / 2 + 1.0);
  const double prefactor =
      std::pow(2.0 * pi, -0.5 * d) * std::pow(-0.5, static_cast<double>(n)) / n_factorial;

  const double h_lo = lt.h.inf();
  const double h_hi = lt.h.sup();
  const bool regularized = lt.eps && *lt.eps > 0.0;
  double zeros = 0.0, nonzeros = 0.0;
  for (double v : args) (v == 0.0 ? zeros : nonzeros) += 1.0;
  double exponent = nonzeros + zeros * (h_lo - 0.5);
  if (!regularized) exponent -= (2.0 * n + d) * h_hi;
  if (!(exponent > -1.0)) {
    throw DivergenceError("kernel_eval: time integrand not integrable at t = 0 (exponent " +
                          std::to_string(exponent) + ")");
  }

  const double power = -(static_cast<double>(n) + 0.5 * d);
  auto integrand = [&](double t) {
    if (t == 0.0) return 0.0;
    const double H = lt.h(t);
    const IndicatorImage image(H, t);
    double prod = std::pow(variance_at(lt.h, t, lt.eps), power);
    for (double v : args) prod *= image(v);
    return prod;
  };
  std::vector<double> cuts;
  for (double v : args) {
    if (v > 0.0 && v < lt.T) cuts.push_back(v);
  }
  const auto r = integrate_with_cuts(integrand, 0.0, lt.T, cuts, std::min(0.0, exponent),
                                     h_lo - 0.5, opts);
  return prefactor * quad::value_or_throw(r, "kernel_eval");
}

std::vector<std::vector<unsigned>> compositions(unsigned n, unsigned d) {
  std::vector<std::vector<unsigned>> out;
  if (d == 0) return out;
  std::vector<unsigned> cur(d, 0);
  // enumerate by recursion on the first d-1 entries
  auto rec = [&](auto&& self, unsigned pos, unsigned remaining) -> void {
    if (pos + 1 == d) {
      cur[pos] = remaining;
      out.push_back(cur);
      return;
    }
    for (unsigned k = 0; k <= remaining; ++k) {
      cur[pos] = remaining - k;
      self(self, pos + 1, k);
    }
  };
  rec(rec, 0, n);
  return out;
}

ChaosPairing chaos_pairing(const LocalTimeSpec& spec, const TestFunction& phi, unsigned n_max,
                           const PairingOptions& opts) {
  const unsigned d = phi.dim();
  validate_spec(spec, d);
  if (n_max < spec.N) throw ConfigError("chaos_pairing: n_max must be at least N");

  double alpha = 0.0;
  if (specfun::check_A2(spec.h, {spec.N, d}).holds) {
    alpha = std::max(0.0, -local_time_exponent(spec.h, spec.N, d));
  }
  const double grading = std::min(2.0 / (1.0 - alpha), 40.0);
  const auto rule = quad::graded_rule(spec.T, opts.panels, opts.points_per_panel, grading);
  const std::size_t nodes = rule.size();

  // cache a_j(t) and w(t) at every node
  std::vector<double> a(nodes * d), w(nodes);
  parallel_for(nodes, [&](std::size_t i) {
    const double t = rule.nodes[i];
    const double H = spec.h(t);
    w[i] = variance_at(spec.h, t, spec.eps);
    for (unsigned j = 0; j < d; ++j) a[i * d + j] = projection(phi, j, H, t);
  });

  ChaosPairing out;
  for (std::size_t i = 0; i < nodes; ++i) {
    double a2 = 0.0;
    for (unsigned j = 0; j < d; ++j) a2 += a[i * d + j] * a[i * d + j];
    out.max_ratio = std::max(out.max_ratio, a2 / w[i]);
  }

  const double base = std::pow(2.0 * pi, -0.5 * d);
  std::vector<double> weighted(nodes);
  double running = 0.0;
  for (unsigned n = spec.N; n <= n_max; ++n) {
    double order_sum = 0.0;
    for (const auto& half : compositions(n, d)) {
      double half_factorial = 1.0;
      for (unsigned k : half) half_factorial *= std::tgamma(k + 1.0);
      const double power = -(static_cast<double>(n) + 0.5 * d);
      for (std::size_t i = 0; i < nodes; ++i) {
        double prod = rule.weights[i] * std::pow(w[i], power);
        for (unsigned j = 0; j < d; ++j) prod *= std::pow(a[i * d + j], 2.0 * half[j]);
        weighted[i] = prod;
      }
      const double value =
          base * std::pow(-0.5, static_cast<double>(n)) / half_factorial * pairwise_sum(weighted);
      ChaosIndex full;
      for (unsigned k : half) full.orders.push_back(2 * k);
      out.index_terms.emplace_back(std::move(full), value);
      order_sum += value;
    }
    running += order_sum;
    out.orders.push_back(n);
    out.terms.push_back(order_sum);
    out.partial_sums.push_back(running);
  }
  return out;
}

ConvergenceTable convergence_eps(const LocalTimeSpec& spec, const TestFunction& phi,
                                 std::span<const double> eps_list) {
  for (std::size_t i = 0; i < eps_list.size(); ++i) {
    if (!(eps_list[i] > 0.0)) throw ConfigError("convergence_eps: widths must be positive");
    if (i > 0 && !(eps_list[i] < eps_list[i - 1])) {
      throw ConfigError("convergence_eps: widths must be strictly decreasing");
    }
  }
  LocalTimeSpec limit_spec = spec;
  limit_spec.eps.reset();
  ConvergenceTable table;
  table.limit = s_transform_local_time(limit_spec, phi);
  for (double eps : eps_list) {
    LocalTimeSpec reg = spec;
    reg.eps = eps;
    const double v = s_transform_local_time(reg, phi);
    table.rows.push_back({eps, v, std::abs(v - table.limit)});
  }
  return table;
}

}  // namespace mbm::chaos
