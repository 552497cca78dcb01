#pragma once

#include <cmath>
#include <numbers>

namespace silt {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

inline double gamma_fn(double x) { return std::tgamma(x); }

inline double beta_fn(double a, double b) {
  return std::exp(std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b));
}

/// Centered normal density with variance `var`, p_var(x).
inline double normal_pdf(double x, double var) {
  return std::exp(-0.5 * x * x / var) / std::sqrt(kTwoPi * var);
}

/// d/dx p_var(x) = -(x / var) p_var(x).
inline double normal_pdf_dx(double x, double var) { return -x / var * normal_pdf(x, var); }

/// Standard normal cdf.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

/// \int_a^b d/dx p_v(x) dv for 0 <= a < b, in closed form.
///
/// Substituting u = |x| / sqrt(v) turns the integrand into a Gaussian density,
/// giving -2 sign(x) [Phi(|x|/sqrt(a)) - Phi(|x|/sqrt(b))]; a = 0 reads Phi(inf) = 1.
inline double integrated_pdf_dx(double x, double a, double b) {
  if (x == 0.0) return 0.0;
  const double ax = std::abs(x);
  // Phi(u) - Phi(l) written as a difference of upper tails to stay accurate for large |x|.
  const double tail_a = a > 0.0 ? 0.5 * std::erfc(ax / std::sqrt(2.0 * a)) : 0.0;
  const double tail_b = 0.5 * std::erfc(ax / std::sqrt(2.0 * b));
  return (x > 0.0 ? -2.0 : 2.0) * (tail_b - tail_a);
}

}  // namespace silt
