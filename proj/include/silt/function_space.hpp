#pragma once

// Piecewise-constant elements of L2[0,1]: step functions with arbitrary
// breakpoints and uniform-grid functions (one value per cell, sampled at the
// cell midpoint). Both are treated as exactly piecewise constant, so inner
// products, prefix integrals and linear combinations are computed in closed form.

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "silt/error.hpp"

namespace silt {

/// A closed subinterval [lo, hi] of [0, 1]. Indicators use the half-open
/// cell [lo, hi); the difference is a null set.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  Interval() = default;
  Interval(double lo_, double hi_) : lo(lo_), hi(hi_) {
    if (!(lo >= 0.0 && lo <= hi && hi <= 1.0))
      throw InputError("interval [" + std::to_string(lo) + ", " + std::to_string(hi) +
                       "] is not inside [0,1] with lo <= hi");
  }
  double length() const { return hi - lo; }
};

inline double overlap(const Interval& a, const Interval& b) {
  return std::max(0.0, std::min(a.hi, b.hi) - std::max(a.lo, b.lo));
}

class StepFunction {
 public:
  /// `breakpoints` strictly increasing from 0 to 1; one value per cell.
  StepFunction(std::vector<double> breakpoints, std::vector<double> values)
      : breaks_(std::move(breakpoints)), values_(std::move(values)) {
    if (breaks_.size() < 2 || breaks_.front() != 0.0 || breaks_.back() != 1.0)
      throw InputError("step function breakpoints must start at 0 and end at 1");
    for (std::size_t i = 1; i < breaks_.size(); ++i)
      if (!(breaks_[i] > breaks_[i - 1])) throw InputError("step function breakpoints must be strictly increasing");
    if (values_.size() != breaks_.size() - 1)
      throw InputError("step function needs one value per cell");
    for (double v : values_)
      if (!std::isfinite(v)) throw InputError("step function values must be finite");
  }

  static StepFunction constant(double c) { return StepFunction({0.0, 1.0}, {c}); }

  const std::vector<double>& breakpoints() const { return breaks_; }
  const std::vector<double>& values() const { return values_; }
  std::size_t cells() const { return values_.size(); }

  double operator()(double x) const {
    auto it = std::upper_bound(breaks_.begin(), breaks_.end(), x);
    std::size_t i = it == breaks_.begin() ? 0 : static_cast<std::size_t>(it - breaks_.begin()) - 1;
    return values_[std::min(i, values_.size() - 1)];
  }

 private:
  std::vector<double> breaks_;
  std::vector<double> values_;
};

class GridFunction {
 public:
  explicit GridFunction(std::vector<double> values) : values_(std::move(values)) {
    if (values_.empty()) throw InputError("grid function needs at least one cell");
    for (double v : values_)
      if (!std::isfinite(v)) throw InputError("grid function values must be finite");
  }

  /// Samples f at the midpoints of n uniform cells.
  template <class F>
  static GridFunction sample(std::size_t n, F&& f) {
    if (n == 0) throw InputError("grid function needs at least one cell");
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = f((static_cast<double>(i) + 0.5) / static_cast<double>(n));
    return GridFunction(std::move(v));
  }

  std::size_t n() const { return values_.size(); }
  const std::vector<double>& values() const { return values_; }
  double cell_width() const { return 1.0 / static_cast<double>(n()); }

  double operator()(double x) const {
    const auto i = static_cast<std::ptrdiff_t>(std::floor(x * static_cast<double>(n())));
    return values_[static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(i, 0, static_cast<std::ptrdiff_t>(n()) - 1))];
  }

 private:
  std::vector<double> values_;
};

using Function = std::variant<StepFunction, GridFunction>;

inline StepFunction to_step(const GridFunction& g) {
  const std::size_t n = g.n();
  std::vector<double> b(n + 1);
  for (std::size_t i = 0; i <= n; ++i) b[i] = static_cast<double>(i) / static_cast<double>(n);
  b.back() = 1.0;
  return StepFunction(std::move(b), g.values());
}

inline StepFunction to_step(const Function& f) {
  if (auto* s = std::get_if<StepFunction>(&f)) return *s;
  return to_step(std::get<GridFunction>(f));
}

/// Midpoint discretization of a step function onto n cells.
inline GridFunction discretize(const StepFunction& f, std::size_t n) {
  return GridFunction::sample(n, [&](double x) { return f(x); });
}

/// 1 on [lo, hi), 0 elsewhere.
inline StepFunction indicator(const Interval& iv) {
  if (iv.length() == 0.0) return StepFunction::constant(0.0);
  std::vector<double> b{0.0};
  std::vector<double> v;
  if (iv.lo > 0.0) {
    b.push_back(iv.lo);
    v.push_back(0.0);
  }
  b.push_back(iv.hi);
  v.push_back(1.0);
  if (iv.hi < 1.0) {
    b.push_back(1.0);
    v.push_back(0.0);
  }
  return StepFunction(std::move(b), std::move(v));
}

namespace detail {

// Walks the common refinement of two step functions, calling
// visit(cell_lo, cell_hi, value_f, value_g) for each cell.
template <class Visit>
void co_cells(const StepFunction& f, const StepFunction& g, Visit&& visit) {
  const auto& bf = f.breakpoints();
  const auto& bg = g.breakpoints();
  std::size_t i = 0, j = 0;
  double lo = 0.0;
  while (i < f.cells() && j < g.cells()) {
    const double hi = std::min(bf[i + 1], bg[j + 1]);
    if (hi > lo) visit(lo, hi, f.values()[i], g.values()[j]);
    lo = hi;
    if (bf[i + 1] == hi) ++i;
    if (bg[j + 1] == hi) ++j;
  }
}

template <class Op>
StepFunction combine(const StepFunction& f, const StepFunction& g, Op op) {
  std::vector<double> b{0.0};
  std::vector<double> v;
  co_cells(f, g, [&](double, double hi, double a, double c) {
    b.push_back(hi);
    v.push_back(op(a, c));
  });
  b.back() = 1.0;
  return StepFunction(std::move(b), std::move(v));
}

template <class Op>
GridFunction combine(const GridFunction& f, const GridFunction& g, Op op) {
  if (f.n() != g.n())
    throw ResolutionError("grid functions have different resolutions (" + std::to_string(f.n()) + " vs " +
                          std::to_string(g.n()) + ")");
  std::vector<double> v(f.n());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = op(f.values()[i], g.values()[i]);
  return GridFunction(std::move(v));
}

template <class Op>
Function combine(const Function& f, const Function& g, Op op) {
  if (std::holds_alternative<GridFunction>(f) && std::holds_alternative<GridFunction>(g))
    return combine(std::get<GridFunction>(f), std::get<GridFunction>(g), op);
  return combine(to_step(f), to_step(g), op);
}

}  // namespace detail

inline double inner_product(const StepFunction& f, const StepFunction& g) {
  double s = 0.0;
  detail::co_cells(f, g, [&](double lo, double hi, double a, double b) { s += (hi - lo) * a * b; });
  return s;
}

inline double inner_product(const GridFunction& f, const GridFunction& g) {
  if (f.n() != g.n())
    throw ResolutionError("grid functions have different resolutions (" + std::to_string(f.n()) + " vs " +
                          std::to_string(g.n()) + ")");
  double s = 0.0;
  for (std::size_t i = 0; i < f.n(); ++i) s += f.values()[i] * g.values()[i];
  return s / static_cast<double>(f.n());
}

inline double inner_product(const Function& f, const Function& g) {
  if (std::holds_alternative<GridFunction>(f) && std::holds_alternative<GridFunction>(g))
    return inner_product(std::get<GridFunction>(f), std::get<GridFunction>(g));
  return inner_product(to_step(f), to_step(g));
}

inline double norm(const Function& f) { return std::sqrt(inner_product(f, f)); }

inline Function scaled(const Function& f, double c) {
  return std::visit(
      [c](const auto& g) -> Function {
        auto v = g.values();
        for (double& x : v) x *= c;
        if constexpr (std::is_same_v<std::decay_t<decltype(g)>, StepFunction>)
          return StepFunction(g.breakpoints(), std::move(v));
        else
          return GridFunction(std::move(v));
      },
      f);
}

/// a * x + y
inline Function axpy(double a, const Function& x, const Function& y) {
  return detail::combine(x, y, [a](double u, double v) { return a * u + v; });
}

/// Pointwise product.
inline Function multiply(const Function& f, const Function& g) {
  return detail::combine(f, g, [](double u, double v) { return u * v; });
}

inline double evaluate(const Function& f, double x) {
  return std::visit([x](const auto& g) { return g(x); }, f);
}

inline double min_abs(const Function& f) {
  return std::visit(
      [](const auto& g) {
        double m = INFINITY;
        for (double v : g.values()) m = std::min(m, std::abs(v));
        return m;
      },
      f);
}

inline double max_abs(const Function& f) {
  return std::visit(
      [](const auto& g) {
        double m = 0.0;
        for (double v : g.values()) m = std::max(m, std::abs(v));
        return m;
      },
      f);
}

/// x -> \int_0^x f, exact for piecewise-constant f.
class PrefixIntegral {
 public:
  PrefixIntegral() : PrefixIntegral(Function(StepFunction::constant(0.0))) {}

  explicit PrefixIntegral(const Function& f) {
    if (auto* g = std::get_if<GridFunction>(&f)) {
      uniform_ = true;
      n_ = g->n();
    }
    const StepFunction s = to_step(f);
    breaks_ = s.breakpoints();
    values_ = s.values();
    cumulative_.resize(breaks_.size());
    cumulative_[0] = 0.0;
    for (std::size_t i = 0; i < values_.size(); ++i)
      cumulative_[i + 1] = cumulative_[i] + values_[i] * (breaks_[i + 1] - breaks_[i]);
  }

  double operator()(double x) const {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return cumulative_.back();
    std::size_t i;
    if (uniform_) {
      i = std::min(static_cast<std::size_t>(x * static_cast<double>(n_)), n_ - 1);
      // Guard against x*n rounding across a cell edge.
      if (breaks_[i] > x) --i;
      else if (breaks_[i + 1] <= x) ++i;
    } else {
      i = static_cast<std::size_t>(std::upper_bound(breaks_.begin(), breaks_.end(), x) - breaks_.begin()) - 1;
    }
    return cumulative_[i] + values_[i] * (x - breaks_[i]);
  }

  double over(const Interval& iv) const { return (*this)(iv.hi) - (*this)(iv.lo); }
  double between(double a, double b) const { return (*this)(b) - (*this)(a); }

 private:
  bool uniform_ = false;
  std::size_t n_ = 0;
  std::vector<double> breaks_;
  std::vector<double> values_;
  std::vector<double> cumulative_;
};

struct GramSchmidtResult {
  std::vector<Function> basis;
  /// Residual norm of each input before normalization (0 for dropped inputs).
  std::vector<double> residual_norms;
};

/// Modified Gram-Schmidt with one reorthogonalization pass. An input is
/// dropped when its residual norm falls below 1e-10 of its original norm.
inline GramSchmidtResult gram_schmidt(std::span<const Function> fs) {
  if (fs.empty()) throw InputError("orthonormalize needs a nonempty sequence");
  GramSchmidtResult out;
  for (const auto& f : fs) {
    const double original = norm(f);
    Function r = f;
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& e : out.basis) r = axpy(-inner_product(r, e), e, r);
    const double rn = norm(r);
    if (original == 0.0 || rn < 1e-10 * original) {
      out.residual_norms.push_back(0.0);
      continue;
    }
    out.residual_norms.push_back(rn);
    out.basis.push_back(scaled(r, 1.0 / rn));
  }
  if (out.basis.empty()) throw EmptyBasisError("orthonormalize: all inputs are numerically zero");
  return out;
}

inline std::vector<Function> orthonormalize(std::span<const Function> fs) { return gram_schmidt(fs).basis; }

}  // namespace silt
