#pragma once

// Gram determinants, projection norms, and the determinant identities and
// inequalities used to control the local-time integrands.

#include <algorithm>
#include <cmath>
#include <span>
#include <utility>
#include <vector>

#include "silt/error.hpp"
#include "silt/function_space.hpp"
#include "silt/gram_matrix.hpp"
#include "silt/operators.hpp"

namespace silt {

inline GramMatrix gram_matrix(std::span<const Function> fs) {
  const auto n = static_cast<Eigen::Index>(fs.size());
  Eigen::MatrixXd g(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j <= i; ++j) g(i, j) = g(j, i) = inner_product(fs[i], fs[j]);
  return GramMatrix(std::move(g));
}

inline double gram_det(std::span<const Function> fs) { return fs.empty() ? 1.0 : gram_matrix(fs).det(); }

inline Eigen::VectorXd inner_products(std::span<const Function> fs, const Function& h) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(fs.size()));
  for (std::size_t i = 0; i < fs.size(); ++i) v(static_cast<Eigen::Index>(i)) = inner_product(fs[i], h);
  return v;
}

/// ||P h||^2 for P the orthogonal projection onto span(fs), via the normal
/// equations B c = (<f_i, h>)_i.
inline double projection_norm_sq(std::span<const Function> fs, const Function& h) {
  if (fs.empty()) return 0.0;
  const GramMatrix B = gram_matrix(fs);
  return B.quadratic_inverse(inner_products(fs, h));
}

namespace detail {

inline double minor(const Eigen::MatrixXd& b, Eigen::Index row, Eigen::Index col) {
  const Eigen::Index n = b.rows();
  if (n == 1) return 1.0;
  Eigen::MatrixXd m(n - 1, n - 1);
  for (Eigen::Index i = 0, r = 0; i < n; ++i) {
    if (i == row) continue;
    for (Eigen::Index j = 0, c = 0; j < n; ++j) {
      if (j == col) continue;
      m(r, c++) = b(i, j);
    }
    ++r;
  }
  return m.determinant();
}

}  // namespace detail

/// ||P h||^2 from the cofactor expansion
///   P h = G^{-1} sum_{i,j} (-1)^{i+j} M_ij <f_i, h> f_j,
/// with M_ij the minors of the Gram matrix B and G = det B. Cross-check only (dim <= 4).
inline double projection_norm_sq_minors(const Eigen::MatrixXd& B, const Eigen::VectorXd& v) {
  const Eigen::Index n = B.rows();
  if (n > 4) throw InputError("minor formula is only provided for dimension <= 4");
  if (n == 0) return 0.0;
  const double G = B.determinant();
  if (G == 0.0) throw DegeneracyError("Gram matrix is singular in minor formula", G);
  Eigen::VectorXd c = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) c(j) += (((i + j) % 2) ? -1.0 : 1.0) * detail::minor(B, i, j) * v(i) / G;
  return c.dot(B * c);
}

inline double projection_norm_sq_minors(std::span<const Function> fs, const Function& h) {
  return projection_norm_sq_minors(gram_matrix(fs).entries(), inner_products(fs, h));
}

struct TwoSides {
  double lhs = 0.0;
  double rhs = 0.0;
};

/// G((I-P_L) g_1, ..., (I-P_L) g_k) against G(g_1, ..., g_k, e_1, ..., e_m)
/// for an orthonormal basis e of L.
inline TwoSides cavalieri_both_sides(std::span<const Function> basis, std::span<const Function> gs) {
  std::vector<Function> projected;
  if (basis.empty()) {
    projected.assign(gs.begin(), gs.end());
  } else {
    const OperatorSpec A = make_projection_complement({basis.begin(), basis.end()});
    for (const auto& g : gs) projected.push_back(silt::apply(A, g));
  }
  std::vector<Function> joined(gs.begin(), gs.end());
  joined.insert(joined.end(), basis.begin(), basis.end());
  return {gram_det(projected), gram_det(joined)};
}

namespace detail {

/// Lebesgue measure of iv minus the union of `covered` (sorted, disjoint).
inline double uncovered_length(const Interval& iv, const std::vector<std::pair<double, double>>& covered) {
  double len = iv.length();
  for (const auto& [lo, hi] : covered) len -= std::max(0.0, std::min(hi, iv.hi) - std::max(lo, iv.lo));
  return std::max(0.0, len);
}

inline void add_to_union(std::vector<std::pair<double, double>>& u, const Interval& iv) {
  if (iv.length() == 0.0) return;
  u.emplace_back(iv.lo, iv.hi);
  std::sort(u.begin(), u.end());
  std::vector<std::pair<double, double>> merged;
  for (const auto& seg : u) {
    if (!merged.empty() && seg.first <= merged.back().second)
      merged.back().second = std::max(merged.back().second, seg.second);
    else
      merged.push_back(seg);
  }
  u = std::move(merged);
}

}  // namespace detail

struct DetBound {
  double det = 0.0;
  double bound = 0.0;
};

/// Gram determinant of the indicators of `sets` and the lower bound
/// prod_k |Delta_k \ (Delta_1 u ... u Delta_{k-1})|.
inline DetBound indicator_gram_lower_bound(std::span<const Interval> sets) {
  std::vector<Function> fs;
  for (const auto& s : sets) fs.emplace_back(indicator(s));
  DetBound out{gram_det(fs), 1.0};
  std::vector<std::pair<double, double>> covered;
  for (const auto& s : sets) {
    out.bound *= detail::uncovered_length(s, covered);
    detail::add_to_union(covered, s);
  }
  return out;
}

/// det G(A f_1, ..., A f_n) against the lower bound det G(f_1, ..., f_n) / ||A^{-1}||^{2n}
/// for a continuously invertible A.
inline DetBound invertible_operator_bound(const OperatorSpec& A, std::span<const Function> fs) {
  if (std::holds_alternative<ProjectionComplement>(A))
    throw InputError("the invertible-operator bound needs an invertible operator");
  std::vector<Function> afs;
  for (const auto& f : fs) afs.push_back(silt::apply(A, f));
  const double inv = bounds(A).inv_norm;
  return {gram_det(afs), gram_det(fs) / std::pow(inv, 2.0 * static_cast<double>(fs.size()))};
}

}  // namespace silt
