#pragma once

// Operators A on L2[0,1] that define the integrator x(t) = (A 1_[0,t], xi).

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "silt/error.hpp"
#include "silt/function_space.hpp"
#include "silt/gram_matrix.hpp"

namespace silt {

struct OperatorBounds {
  double m = 1.0;         // lower bound of |phi|
  double M = 1.0;         // upper bound of |phi|
  double inv_norm = 1.0;  // norm of the inverse of A restricted to (ker A)^perp
};

struct Identity {};

struct Multiplication {
  Function phi;
  OperatorBounds bounds;
  std::string label;  // canonical text after "mult:"
  PrefixIntegral phi_prefix;
  PrefixIntegral phi_sq_prefix;
};

struct ProjectionComplement {
  std::vector<Function> basis;
  std::string label;  // canonical text after "projcomp:"
  std::vector<PrefixIntegral> prefix;
};

using OperatorSpec = std::variant<Identity, Multiplication, ProjectionComplement>;

/// Multiplication by phi with the stated bounds m <= |phi| <= M.
inline Multiplication make_multiplication(Function phi, double m, double M, std::string label = "") {
  if (!(m > 0.0 && m <= M)) throw InputError("multiplication bounds need 0 < m <= M");
  const double lo = min_abs(phi), hi = max_abs(phi);
  if (lo < m * (1.0 - 1e-12) || hi > M * (1.0 + 1e-12))
    throw InputError("multiplier violates its bounds: |phi| ranges over [" + num_str(lo) + ", " + num_str(hi) +
                     "], stated [" + num_str(m) + ", " + num_str(M) + "]");
  Multiplication out{phi, {m, M, 1.0 / m}, std::move(label), PrefixIntegral(phi), PrefixIntegral(multiply(phi, phi))};
  return out;
}

/// Multiplication with bounds taken from the extreme values of |phi|.
inline Multiplication make_multiplication(Function phi, std::string label = "") {
  const double m = min_abs(phi), M = max_abs(phi);
  if (!(m > 0.0)) throw InputError("multiplier must be bounded away from zero");
  return make_multiplication(std::move(phi), m, M, std::move(label));
}

/// I - P where P projects onto span(basis); basis must be orthonormal.
inline ProjectionComplement make_projection_complement(std::vector<Function> basis, std::string label = "") {
  for (std::size_t i = 0; i < basis.size(); ++i)
    for (std::size_t j = 0; j <= i; ++j) {
      const double g = inner_product(basis[i], basis[j]);
      if (std::abs(g - (i == j ? 1.0 : 0.0)) > 1e-10)
        throw InputError("projection basis is not orthonormal at (" + std::to_string(i) + ", " + std::to_string(j) +
                         ")");
    }
  ProjectionComplement out{std::move(basis), std::move(label), {}};
  for (const auto& e : out.basis) out.prefix.emplace_back(e);
  return out;
}

/// Projection complement onto the normalized indicators of the cells of the
/// partition 0 < s_1 < ... < s_N < 1. N = 0 gives the Brownian bridge.
inline ProjectionComplement bridge(const std::vector<double>& interior) {
  std::vector<double> pts{0.0};
  for (double s : interior) {
    if (!(s > pts.back() && s < 1.0)) throw InputError("bridge partition must be strictly increasing inside (0,1)");
    pts.push_back(s);
  }
  pts.push_back(1.0);
  std::vector<Function> basis;
  std::string label;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const double len = pts[i + 1] - pts[i];
    basis.push_back(scaled(Function(indicator(Interval(pts[i], pts[i + 1]))), 1.0 / std::sqrt(len)));
  }
  for (std::size_t i = 0; i < interior.size(); ++i) {
    std::ostringstream os;
    os.precision(17);
    os << interior[i];
    label += (i ? "," : "") + os.str();
  }
  return make_projection_complement(std::move(basis), label);
}

inline OperatorBounds bounds(const OperatorSpec& A) {
  if (auto* m = std::get_if<Multiplication>(&A)) return m->bounds;
  return {};
}

inline std::string to_string(const OperatorSpec& A) {
  return std::visit(
      [](const auto& op) -> std::string {
        using T = std::decay_t<decltype(op)>;
        if constexpr (std::is_same_v<T, Identity>) return "identity";
        else if constexpr (std::is_same_v<T, Multiplication>) return "mult:" + op.label;
        else return "projcomp:" + op.label;
      },
      A);
}

inline Function apply(const OperatorSpec& A, const Function& f) {
  return std::visit(
      [&](const auto& op) -> Function {
        using T = std::decay_t<decltype(op)>;
        if constexpr (std::is_same_v<T, Identity>) {
          return f;
        } else if constexpr (std::is_same_v<T, Multiplication>) {
          return multiply(op.phi, f);
        } else {
          Function r = f;
          for (const auto& e : op.basis) r = axpy(-inner_product(f, e), e, r);
          return r;
        }
      },
      A);
}

/// All three variants are self-adjoint.
inline Function apply_adjoint(const OperatorSpec& A, const Function& h) { return silt::apply(A, h); }

/// <A 1_I, 1_J>.
inline double loading(const OperatorSpec& A, const Interval& I, const Interval& J) {
  const double lo = std::max(I.lo, J.lo), hi = std::min(I.hi, J.hi);
  return std::visit(
      [&](const auto& op) -> double {
        using T = std::decay_t<decltype(op)>;
        if constexpr (std::is_same_v<T, Identity>) {
          return std::max(0.0, hi - lo);
        } else if constexpr (std::is_same_v<T, Multiplication>) {
          return hi > lo ? op.phi_prefix.between(lo, hi) : 0.0;
        } else {
          double s = std::max(0.0, hi - lo);
          for (const auto& p : op.prefix) s -= p.over(I) * p.over(J);
          return s;
        }
      },
      A);
}

/// <A 1_I, A 1_J>.
inline double increment_cov(const OperatorSpec& A, const Interval& I, const Interval& J) {
  const double lo = std::max(I.lo, J.lo), hi = std::min(I.hi, J.hi);
  return std::visit(
      [&](const auto& op) -> double {
        using T = std::decay_t<decltype(op)>;
        if constexpr (std::is_same_v<T, Identity>) {
          return std::max(0.0, hi - lo);
        } else if constexpr (std::is_same_v<T, Multiplication>) {
          return hi > lo ? op.phi_sq_prefix.between(lo, hi) : 0.0;
        } else {
          // (I - P) is an orthogonal projection, so <(I-P)f, (I-P)g> = <f, g> - <Pf, Pg>.
          double s = std::max(0.0, hi - lo);
          for (const auto& p : op.prefix) s -= p.over(I) * p.over(J);
          return s;
        }
      },
      A);
}

inline Eigen::MatrixXd increment_gram_entries(const OperatorSpec& A, std::span<const Interval> ivs) {
  const auto n = static_cast<Eigen::Index>(ivs.size());
  Eigen::MatrixXd g(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j <= i; ++j) g(i, j) = g(j, i) = increment_cov(A, ivs[i], ivs[j]);
  return g;
}

/// Matrix of <A 1_{ivs[i]}, A 1_{ivs[j]}>.
inline GramMatrix increment_gram(const OperatorSpec& A, std::span<const Interval> ivs) {
  return GramMatrix(increment_gram_entries(A, ivs));
}

namespace detail {

inline std::vector<double> parse_number_list(const std::string& text, const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    double v;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      throw InputError("bad number '" + item + "' in " + what);
    }
    if (used != item.size()) throw InputError("bad number '" + item + "' in " + what);
    out.push_back(v);
  }
  return out;
}

}  // namespace detail

/// Parses the canonical operator text:
///   identity
///   mult:const:c          phi = c
///   mult:affine:a,b       phi(r) = a + b r, sampled on an n-cell grid
///   mult:<file>           one grid value per line
///   projcomp:s1,...,sN    projection complement of the partition indicators
///   bridge                same as "projcomp:"
inline OperatorSpec parse_operator(const std::string& text, std::size_t grid_n = 256) {
  if (text == "identity") return Identity{};
  if (text == "bridge") return bridge({});
  if (text.rfind("projcomp:", 0) == 0) return bridge(detail::parse_number_list(text.substr(9), "projcomp breakpoints"));
  if (text.rfind("mult:", 0) == 0) {
    const std::string rest = text.substr(5);
    if (rest.rfind("const:", 0) == 0) {
      const auto v = detail::parse_number_list(rest.substr(6), "mult:const");
      if (v.size() != 1) throw InputError("mult:const takes one value");
      if (v[0] == 0.0) throw InputError("multiplier must be bounded away from zero");
      return make_multiplication(Function(StepFunction::constant(v[0])), std::abs(v[0]), std::abs(v[0]), rest);
    }
    if (rest.rfind("affine:", 0) == 0) {
      const auto v = detail::parse_number_list(rest.substr(7), "mult:affine");
      if (v.size() != 2) throw InputError("mult:affine takes two values a,b");
      const double a = v[0], b = v[1];
      return make_multiplication(Function(GridFunction::sample(grid_n, [&](double r) { return a + b * r; })), rest);
    }
    std::ifstream in(rest);
    if (!in) throw InputError("cannot open multiplier file '" + rest + "'");
    std::vector<double> vals;
    double v;
    while (in >> v) vals.push_back(v);
    if (!in.eof()) throw InputError("multiplier file '" + rest + "' contains a non-numeric entry");
    return make_multiplication(Function(GridFunction(std::move(vals))), rest);
  }
  throw InputError("unknown operator '" + text + "' (expected identity, bridge, mult:..., projcomp:...)");
}

}  // namespace silt
