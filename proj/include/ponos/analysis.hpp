#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "ponos/errors.hpp"
#include "ponos/problems.hpp"
#include "ponos/vec.hpp"

namespace ponos {

// ---------------------------------------------------------------------------
// Rate certificates
// ---------------------------------------------------------------------------

enum class Regime { strongly_convex, convex, pl };

// Numeric constants of the three convergence theorems, with a validity flag
// per hypothesis. "b" of the strongly convex rate is named rate_b to avoid
// the batch-size collision.
struct RateCertificate {
  Regime regime = Regime::strongly_convex;
  bool valid = true;
  std::vector<std::string> violated;

  double eta_min = 0.0;  // min{ 2 delta (1-c) / L_max, eta_bar_min }

  // strongly convex
  double d = 0.0;
  double a = 0.0;
  double rate_b = 0.0;

  // convex
  double d1 = 0.0;
  double a1 = 0.0;
  double b1 = 0.0;

  // PL
  double a2 = 0.0;
  double nu = 0.0;
  double b2 = 0.0;
  double d2 = 0.0;

  void require(bool ok, const std::string& reason) {
    if (!ok) {
      valid = false;
      violated.push_back(reason);
    }
  }
};

inline double eta_min_bound(double c, double delta, double l_max, double eta_bar_min) {
  return std::min(2.0 * delta * (1.0 - c) / l_max, eta_bar_min);
}

// Linear-rate constants under strong convexity:
//   eta_min = min{2 delta (1-c)/L_max, eta_bar_min},  a = eta_min (2 - 1/c),
//   b = (1 + eta_max/(a c)) xi,  d = max(1 - eta_min mu, b).
// Valid iff c > 1/2, xi strictly below 1/(1 + eta_max/(eta_min (2c-1))), and
// the constants land in their open intervals.
inline RateCertificate certificate_strongly_convex(double c, double xi, double delta,
                                                   double eta_bar_min, double eta_max, double mu,
                                                   double l_max) {
  RateCertificate cert;
  cert.regime = Regime::strongly_convex;
  cert.eta_min = eta_min_bound(c, delta, l_max, eta_bar_min);
  cert.a = cert.eta_min * (2.0 - 1.0 / c);
  cert.rate_b = cert.a > 0.0 ? (1.0 + eta_max / (cert.a * c)) * xi
                             : std::numeric_limits<double>::infinity();
  cert.d = std::max(1.0 - cert.eta_min * mu, cert.rate_b);

  cert.require(c > 0.5, "c must be > 1/2");
  if (c > 0.5) {
    const double xi_bound = 1.0 / (1.0 + eta_max / (cert.eta_min * (2.0 * c - 1.0)));
    cert.require(xi < xi_bound, "xi must be < 1/(1 + eta_max/(eta_min (2c-1)))");
  }
  cert.require(xi >= 0.0, "xi must be >= 0");
  cert.require(cert.a > 0.0, "a must be positive");
  cert.require(cert.rate_b < 1.0, "rate constant b must be < 1");
  cert.require(cert.d > 0.0 && cert.d < 1.0, "contraction d must lie in (0,1)");
  return cert;
}

// O(1/k) constants under convexity: d1 = c/(c(2-a1)-1), b1 = (1 + 1/(a1 c)) xi.
// Valid iff c > 1/2, 0 < a1 < 2 - 1/c, xi < a1/2.
inline RateCertificate certificate_convex(double c, double xi, double a1, double delta,
                                          double eta_bar_min, double l_max) {
  RateCertificate cert;
  cert.regime = Regime::convex;
  cert.eta_min = eta_min_bound(c, delta, l_max, eta_bar_min);
  cert.a1 = a1;
  const double denom = c * (2.0 - a1) - 1.0;
  cert.d1 = denom != 0.0 ? c / denom : std::numeric_limits<double>::infinity();
  cert.b1 = a1 > 0.0 ? (1.0 + 1.0 / (a1 * c)) * xi : std::numeric_limits<double>::infinity();

  cert.require(c > 0.5, "c must be > 1/2");
  cert.require(a1 > 0.0 && a1 < 2.0 - 1.0 / c, "a1 out of range (0, 2 - 1/c)");
  cert.require(xi < a1 / 2.0, "xi must be < a1/2");
  cert.require(xi >= 0.0, "xi must be >= 0");
  cert.require(cert.d1 > 0.0, "d1 must be positive");
  cert.require(cert.b1 <= 1.0, "b1 must be <= 1");
  return cert;
}

// Linear-rate constants under the PL condition. The theorem prints the
// contraction as min(nu, b2); a contraction argument needs the larger factor,
// so d2 reports max(nu, b2) and validity demands both lie in (0,1).
inline RateCertificate certificate_pl(double c, double xi, double delta, double eta_bar_min,
                                      double eta_max, double mu, double l_max) {
  RateCertificate cert;
  cert.regime = Regime::pl;
  cert.eta_min = eta_min_bound(c, delta, l_max, eta_bar_min);
  const double curvature_gap = l_max - 4.0 * mu * c * (1.0 - c);
  cert.a2 = -curvature_gap / (4.0 * delta * c * (1.0 - c)) + 1.0 / (2.0 * eta_max);
  cert.nu = eta_max * (curvature_gap / (2.0 * delta * c * (1.0 - c)) + cert.a2);
  cert.b2 = cert.a2 > 0.0 ? (1.0 + l_max / (cert.a2 * c)) * xi
                          : std::numeric_limits<double>::infinity();
  cert.d2 = std::max(cert.nu, cert.b2);

  cert.require(c > l_max / (4.0 * mu) && c < 1.0, "c must lie in (L_max/(4 mu), 1)");
  cert.require(2.0 * delta * (1.0 - c) / l_max < eta_bar_min,
               "eta_bar_min must exceed 2 delta (1-c)/L_max");
  cert.require(curvature_gap > 0.0 ? eta_max < 2.0 * delta * c * (1.0 - c) / curvature_gap : true,
               "eta_max must be < 2 delta c (1-c)/(L_max - 4 mu c (1-c))");
  cert.require(cert.a2 > 0.0, "a2 must be positive");
  if (cert.a2 > 0.0) {
    cert.require(xi < cert.a2 * c / (cert.a2 * c + l_max),
                 "xi must be < a2 c/(a2 c + L_max)");
  }
  cert.require(xi >= 0.0, "xi must be >= 0");
  cert.require(cert.nu > 0.0 && cert.nu < 1.0, "nu must lie in (0,1)");
  cert.require(cert.b2 < 1.0, "b2 must be < 1");
  return cert;
}

// ---------------------------------------------------------------------------
// Empirical rate estimation
// ---------------------------------------------------------------------------

struct RateFit {
  double d_hat = 1.0;     // exp(slope of log series vs index)
  double r_squared = 0.0;
  double slope = 0.0;
  double intercept = 0.0;
  std::size_t points = 0;
};

// Least-squares fit of log(series_k) against k; d_hat = exp(slope).
inline RateFit estimate_geometric_rate(std::span<const double> series) {
  if (series.size() < 10) throw NonPositiveSeries("need at least 10 points to fit a rate");
  for (double v : series)
    if (!(v > 0.0)) throw NonPositiveSeries("series values must be positive");

  const double n = static_cast<double>(series.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t k = 0; k < series.size(); ++k) {
    const double x = static_cast<double>(k);
    const double y = std::log(series[k]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    syy += y * y;
  }
  RateFit fit;
  fit.points = series.size();
  const double var_x = sxx - sx * sx / n;
  const double cov = sxy - sx * sy / n;
  const double var_y = syy - sy * sy / n;
  fit.slope = var_x > 0.0 ? cov / var_x : 0.0;
  fit.intercept = (sy - fit.slope * sx) / n;
  fit.d_hat = std::exp(fit.slope);
  fit.r_squared = var_y > 0.0 ? (cov * cov) / (var_x * var_y) : 1.0;
  return fit;
}

// Restricts a decaying series to the contiguous index range where it lies in
// [lo, hi] (dodging warm-up above hi and the floating-point floor below lo).
inline std::vector<double> rate_fit_window(std::span<const double> series, double lo, double hi) {
  std::size_t first = series.size();
  for (std::size_t k = 0; k < series.size(); ++k) {
    if (series[k] <= hi) {
      first = k;
      break;
    }
  }
  std::vector<double> window;
  for (std::size_t k = first; k < series.size(); ++k) {
    if (!(series[k] >= lo)) break;
    window.push_back(series[k]);
  }
  return window;
}

// ---------------------------------------------------------------------------
// Theorem-1 Lyapunov function and the Lemma-4 variance bound
// ---------------------------------------------------------------------------

inline double lyapunov_strongly_convex(std::span<const double> w, std::span<const double> w_star,
                                       double c_k, double f_star, double a) {
  return squared_distance(w, w_star) + a * (c_k - f_star);
}

struct VarianceBoundCheck {
  double lhs = 0.0;  // (1/M) sum_i ||grad f_i(w)||^2
  double rhs = 0.0;  // 2 L_max (f(w) - f*)
  bool ok = false;
};

// Under interpolation and L_i-smoothness, (1/M) sum_i ||grad f_i(w)||^2 <=
// 2 L_max (f(w) - f*). The factor 2 is the smoothness lemma's own constant
// (||g||^2 <= 2L (f - f*), with equality on quadratics).
inline VarianceBoundCheck check_variance_bound(const Problem& problem,
                                               std::span<const double> w) {
  if (!problem.interpolating())
    throw MissingMetadata("variance bound needs an interpolating problem");
  if (!problem.lipschitz_max())
    throw MissingMetadata("variance bound needs the L_max metadata");
  const std::size_t m = problem.sample_count();
  Vector g(problem.dim());
  std::vector<double> grad_sq(m);
  std::vector<double> values(m);
  for (std::size_t i = 0; i < m; ++i) {
    std::fill(g.begin(), g.end(), 0.0);
    values[i] = problem.per_sample_value_grad(w, i, 1.0, g);
    grad_sq[i] = squared_norm(g);
  }
  VarianceBoundCheck check;
  check.lhs = pairwise_sum(grad_sq) / static_cast<double>(m);
  const double f = pairwise_sum(values) / static_cast<double>(m);
  check.rhs = 2.0 * (*problem.lipschitz_max()) * (f - problem.f_star());
  check.ok = check.lhs <= check.rhs * (1.0 + 1e-9);
  return check;
}

}  // namespace ponos
