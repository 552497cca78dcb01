#pragma once

// Globally adaptive Gauss-Kronrod (7/15) quadrature on finite intervals.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <queue>
#include <span>
#include <vector>

#include "silt/error.hpp"

namespace silt::quad {

struct Result {
  double value = 0.0;
  double error = 0.0;
  int intervals = 0;
};

struct Options {
  double abs_tol = 1e-12;
  double rel_tol = 1e-10;
  int max_intervals = 4000;
};

namespace detail {

inline constexpr std::array<double, 8> kNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};

inline constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};

inline constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
  double a, b, value, error, absval;
  bool operator<(const Segment& o) const { return error < o.error; }
};

template <class F>
Segment gk15(F& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  const double fc = f(c);
  double kronrod = fc * kKronrodWeights[7];
  double gauss = fc * kGaussWeights[3];
  double absk = std::abs(fc) * kKronrodWeights[7];
  for (int i = 0; i < 7; ++i) {
    const double x = h * kNodes[i];
    const double fl = f(c - x), fr = f(c + x);
    const double s = fl + fr;
    kronrod += kKronrodWeights[i] * s;
    absk += kKronrodWeights[i] * (std::abs(fl) + std::abs(fr));
    if (i % 2 == 1) gauss += kGaussWeights[i / 2] * s;
  }
  return {a, b, kronrod * h, std::abs((kronrod - gauss) * h), absk * std::abs(h)};
}

}  // namespace detail

/// Integrates f over [a, b]; `breaks` are interior points where f may be
/// non-smooth (they seed the initial partition).
template <class F>
Result integrate(F&& f, double a, double b, const Options& opt = {},
                 std::span<const double> breaks = {}) {
  if (!(b > a)) return {};
  std::vector<double> cuts{a};
  for (double x : breaks)
    if (x > a && x < b) cuts.push_back(x);
  cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  std::priority_queue<detail::Segment> heap;
  double total = 0.0, err = 0.0, absum = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    auto s = detail::gk15(f, cuts[i], cuts[i + 1]);
    total += s.value;
    err += s.error;
    absum += s.absval;
    heap.push(s);
  }
  int count = static_cast<int>(heap.size());
  // Error estimates below the rounding level of \int |f| cannot be improved by bisection.
  constexpr double kRoundoff = 100.0 * std::numeric_limits<double>::epsilon();
  while (err > std::max({opt.abs_tol, opt.rel_tol * std::abs(total), kRoundoff * absum})) {
    if (count >= opt.max_intervals)
      throw QuadratureError("adaptive quadrature did not reach tolerance (error estimate " +
                            std::to_string(err) + ")");
    auto worst = heap.top();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) break;  // no representable midpoint left
    heap.pop();
    auto left = detail::gk15(f, worst.a, mid);
    auto right = detail::gk15(f, mid, worst.b);
    total += left.value + right.value - worst.value;
    err += left.error + right.error - worst.error;
    absum += left.absval + right.absval - worst.absval;
    heap.push(left);
    heap.push(right);
    ++count;
  }
  // Re-sum to shed accumulated cancellation in `total`.
  double sum = 0.0, esum = 0.0;
  while (!heap.empty()) {
    sum += heap.top().value;
    esum += heap.top().error;
    heap.pop();
  }
  return {sum, esum, count};
}

}  // namespace silt::quad
