#pragma once

// Symmetric positive-semidefinite matrices of L2 inner products.
//
// Factorization is an unpivoted LDL^T in which a pivot that falls below
// roundoff level is clamped to zero. Gram matrices of nearly collinear
// families then report det = 0 instead of a small negative number.

#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Dense>

#include "silt/error.hpp"

namespace silt {

class GramMatrix {
 public:
  GramMatrix() = default;

  explicit GramMatrix(Eigen::MatrixXd entries) : a_(std::move(entries)) {
    if (a_.rows() != a_.cols()) throw InputError("Gram matrix must be square");
    const Eigen::Index n = a_.rows();
    const double scale = std::max(1.0, a_.cwiseAbs().maxCoeff());
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < i; ++j) {
        if (std::abs(a_(i, j) - a_(j, i)) > 1e-12 * scale)
          throw InputError("Gram matrix is not symmetric at (" + std::to_string(i) + ", " + std::to_string(j) + ")");
        a_(i, j) = a_(j, i) = 0.5 * (a_(i, j) + a_(j, i));
      }
    factorize();
  }

  Eigen::Index dim() const { return a_.rows(); }
  const Eigen::MatrixXd& entries() const { return a_; }
  double operator()(Eigen::Index i, Eigen::Index j) const { return a_(i, j); }

  double det() const { return det_; }
  double diag_product() const { return diag_prod_; }

  /// det < 1e-14 * prod(diag); scale-free, so it does not depend on units.
  bool is_singular() const { return dim() > 0 && !(det_ > 1e-14 * diag_prod_); }

  /// Solves G c = v.
  Eigen::VectorXd solve(const Eigen::VectorXd& v) const {
    require_regular("solve");
    Eigen::VectorXd y = v;
    const Eigen::Index n = dim();
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index k = 0; k < i; ++k) y(i) -= l_(i, k) * y(k);
    for (Eigen::Index i = 0; i < n; ++i) y(i) /= d_(i);
    for (Eigen::Index i = n - 1; i >= 0; --i)
      for (Eigen::Index k = i + 1; k < n; ++k) y(i) -= l_(k, i) * y(k);
    return y;
  }

  Eigen::MatrixXd inverse() const {
    require_regular("inverse");
    Eigen::MatrixXd out(dim(), dim());
    for (Eigen::Index j = 0; j < dim(); ++j) out.col(j) = solve(Eigen::VectorXd::Unit(dim(), j));
    return 0.5 * (out + out.transpose());
  }

  /// v^T G^{-1} v.
  double quadratic_inverse(const Eigen::VectorXd& v) const { return v.dot(solve(v)); }

  /// Lower-triangular F with F F^T = G (clamped pivots give zero columns),
  /// usable for sampling N(0, G) even when G is only semidefinite.
  Eigen::MatrixXd factor() const {
    Eigen::MatrixXd f = l_;
    for (Eigen::Index j = 0; j < dim(); ++j) f.col(j) *= std::sqrt(d_(j));
    return f;
  }

  const Eigen::VectorXd& pivots() const { return d_; }

 private:
  void factorize() {
    const Eigen::Index n = dim();
    l_ = Eigen::MatrixXd::Identity(n, n);
    d_ = Eigen::VectorXd::Zero(n);
    det_ = 1.0;
    diag_prod_ = 1.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      diag_prod_ *= std::abs(a_(j, j));
      double dj = a_(j, j);
      for (Eigen::Index k = 0; k < j; ++k) dj -= l_(j, k) * l_(j, k) * d_(k);
      if (dj <= 8.0 * std::numeric_limits<double>::epsilon() * std::abs(a_(j, j))) dj = 0.0;
      d_(j) = dj;
      det_ *= dj;
      for (Eigen::Index i = j + 1; i < n; ++i) {
        if (dj == 0.0) {
          l_(i, j) = 0.0;
          continue;
        }
        double s = a_(i, j);
        for (Eigen::Index k = 0; k < j; ++k) s -= l_(i, k) * l_(j, k) * d_(k);
        l_(i, j) = s / dj;
      }
    }
  }

  void require_regular(const char* op) const {
    if (is_singular())
      throw DegeneracyError(std::string("Gram matrix is singular in ") + op + " (det = " + num_str(det_) + ")",
                            det_);
  }

  Eigen::MatrixXd a_;
  Eigen::MatrixXd l_;
  Eigen::VectorXd d_;
  double det_ = 1.0;
  double diag_prod_ = 1.0;
};

}  // namespace silt
