#include "mbm/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <queue>
#include <string>
#include <utility>

#include "mbm/errors.hpp"

namespace mbm::quad {

namespace {

// QUADPACK qk15 abscissae and weights.
constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
  double a, b, value, error;
  bool operator<(const Segment& o) const { return error < o.error; }
};

Segment kronrod15(const Integrand& f, double a, double b) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(center);
  double kronrod = fc * kWgk[7];
  double gauss = fc * kWg[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = half * kXgk[j];
    const double f1 = f(center - dx);
    const double f2 = f(center + dx);
    kronrod += kWgk[j] * (f1 + f2);
    if (j % 2 == 1) gauss += kWg[j / 2] * (f1 + f2);
  }
  return {a, b, kronrod * half, std::abs((kronrod - gauss) * half)};
}

}  // namespace

Result& Result::operator+=(const Result& other) {
  value += other.value;
  abs_error += other.abs_error;
  evaluations += other.evaluations;
  converged = converged && other.converged;
  return *this;
}

Result gauss_kronrod(const Integrand& f, double a, double b, const Options& opts) {
  if (a == b) return {};
  if (b < a) {
    Result r = gauss_kronrod(f, b, a, opts);
    r.value = -r.value;
    return r;
  }

  std::priority_queue<Segment> heap;
  Segment first = kronrod15(f, a, b);
  double value = first.value;
  double error = first.error;
  std::size_t evals = 15;
  heap.push(first);

  auto done = [&] { return error <= std::max(opts.abs_tol, opts.rel_tol * std::abs(value)); };
  while (!done() && heap.size() < opts.max_intervals) {
    const Segment worst = heap.top();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) break;  // interval exhausted in floating point
    heap.pop();
    const Segment left = kronrod15(f, worst.a, mid);
    const Segment right = kronrod15(f, mid, worst.b);
    evals += 30;
    value += left.value + right.value - worst.value;
    error += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
  }

  // Re-sum to shed the drift from incremental updates.
  value = 0.0;
  error = 0.0;
  std::vector<Segment> segments;
  segments.reserve(heap.size());
  while (!heap.empty()) {
    segments.push_back(heap.top());
    heap.pop();
  }
  std::sort(segments.begin(), segments.end(),
            [](const Segment& x, const Segment& y) { return x.a < y.a; });
  for (const auto& s : segments) {
    value += s.value;
    error += s.error;
  }
  return {value, error, evals, done()};
}

Result integrate_singular(const Integrand& f, double a, double b, double exponent,
                          const Options& opts) {
  if (a == b) return {};
  if (!(exponent > -1.0)) throw DomainError("integrate_singular: endpoint exponent must exceed -1");
  const double p = std::max(1.0, 2.0 / (1.0 + exponent));
  const double length = b - a;
  auto g = [&](double s) {
    const double sp1 = std::pow(s, p - 1.0);
    return f(a + length * sp1 * s) * length * p * sp1;
  };
  return gauss_kronrod(g, 0.0, 1.0, opts);
}

Result integrate_upper_tail(const Integrand& f, double a, double decay, const Options& opts) {
  if (!(decay < -1.0)) throw DivergenceError("integrate_upper_tail: tail decay must be faster than 1/x");
  const double c = std::max(1.0, std::abs(a));
  auto g = [&](double s) {
    const double x = a + c * (1.0 / s - 1.0);
    if (!std::isfinite(x)) return 0.0;
    return f(x) * c / (s * s);
  };
  const double beta = std::min(-decay - 2.0, 4.0);
  return integrate_singular(g, 0.0, 1.0, beta, opts);
}

Result integrate_lower_tail(const Integrand& f, double b, double decay, const Options& opts) {
  return integrate_upper_tail([&](double y) { return f(-y); }, -b, decay, opts);
}

Result integrate_pieces(const Integrand& f, std::vector<double> breakpoints,
                        double endpoint_exponent, const Options& opts) {
  std::sort(breakpoints.begin(), breakpoints.end());
  breakpoints.erase(std::unique(breakpoints.begin(), breakpoints.end()), breakpoints.end());
  Result total;
  for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i) {
    const double lo = breakpoints[i];
    const double hi = breakpoints[i + 1];
    const double mid = 0.5 * (lo + hi);
    total += integrate_singular(f, lo, mid, endpoint_exponent, opts);
    Result upper = integrate_singular(f, hi, mid, endpoint_exponent, opts);
    total += upper;
  }
  return total;
}

double value_or_throw(const Result& r, std::string_view what) {
  if (!r.converged || !std::isfinite(r.value)) {
    throw NumericalError(std::string(what) + ": quadrature did not converge (estimated error " +
                             std::to_string(r.abs_error) + ")",
                         r.abs_error);
  }
  return r.value;
}

double Rule::apply(const Integrand& f) const {
  double s = 0.0;
  for (std::size_t i = 0; i < nodes.size(); ++i) s += weights[i] * f(nodes[i]);
  return s;
}

Rule gauss_legendre(std::size_t n) {
  Rule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  if (n == 1) {
    rule.weights[0] = 2.0;
    return rule;
  }
  // Newton iteration on P_n, returning P_n(x) and P_{n-1}(x).
  auto legendre = [n](double x) {
    double p0 = 1.0, p1 = x;
    for (std::size_t k = 2; k <= n; ++k) {
      const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / static_cast<double>(k);
      p0 = p1;
      p1 = pk;
    }
    return std::pair{p1, p0};
  };
  const double nd = static_cast<double>(n);
  for (std::size_t i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (nd + 0.5));
    double dp = 1.0;
    for (int iter = 0; iter < 100; ++iter) {
      const auto [pn, pm] = legendre(x);
      dp = nd * (x * pn - pm) / (x * x - 1.0);
      const double dx = pn / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const auto [pn, pm] = legendre(x);
    dp = nd * (x * pn - pm) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  return rule;
}

Rule graded_rule(double T, std::size_t panels, std::size_t points_per_panel, double grading) {
  // Uniform Gauss-Legendre panels in sigma, mapped by t = T sigma^grading;
  // panel edges land on t_k = T (k / panels)^grading.
  const Rule base = gauss_legendre(points_per_panel);
  Rule rule;
  rule.nodes.reserve(panels * points_per_panel);
  rule.weights.reserve(panels * points_per_panel);
  const double h = 1.0 / static_cast<double>(panels);
  for (std::size_t k = 0; k < panels; ++k) {
    const double mid = (static_cast<double>(k) + 0.5) * h;
    for (std::size_t i = 0; i < base.size(); ++i) {
      const double sigma = mid + 0.5 * h * base.nodes[i];
      const double sp = std::pow(sigma, grading - 1.0);
      rule.nodes.push_back(T * sp * sigma);
      rule.weights.push_back(0.5 * h * base.weights[i] * T * grading * sp);
    }
  }
  return rule;
}

}  // namespace mbm::quad
