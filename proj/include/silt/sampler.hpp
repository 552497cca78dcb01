#pragma once

// Joint sampling of discretized white noise and the integrator path
//   x(t_j) = (A 1_[0,t_j], xi) = sum_i <A 1_[0,t_j], e_i> z_i,
// where e_i = sqrt(n) 1_{cell i} and z_i are iid N(0,1). The path law is exact
// whenever A maps cell indicators to functions that are constant on cells
// (identity, grid-aligned multipliers and partitions).

#include <cmath>
#include <cstdint>
#include <ostream>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "silt/error.hpp"
#include "silt/function_space.hpp"
#include "silt/gram_matrix.hpp"
#include "silt/monte_carlo.hpp"
#include "silt/operators.hpp"

namespace silt {

struct PathGrid {
  std::size_t n = 256;

  explicit PathGrid(std::size_t n_) : n(n_) {
    if (n < 2) throw InputError("path grid needs n >= 2");
  }
  double time(std::size_t j) const { return static_cast<double>(j) / static_cast<double>(n); }
  Interval cell(std::size_t i) const { return Interval(time(i), i + 1 == n ? 1.0 : time(i + 1)); }
  Interval prefix(std::size_t j) const { return Interval(0.0, j == n ? 1.0 : time(j)); }
};

struct JointSample {
  PathGrid grid{2};
  std::vector<double> z;  // white-noise coordinates on e_i
  std::vector<double> x;  // x(t_0), ..., x(t_n)
  std::uint64_t seed = 0;
  std::uint64_t index = 0;
};

inline void fill_normals(std::span<double> z, Engine& rng) {
  std::normal_distribution<double> nd(0.0, 1.0);
  for (double& v : z) v = nd(rng);
}

class PathSampler {
 public:
  PathSampler(OperatorSpec A, PathGrid grid) : A_(std::move(A)), grid_(grid) {
    const std::size_t n = grid_.n;
    const double sn = std::sqrt(static_cast<double>(n));
    // Identity and multiplication are causal and local: x(t_j) is a running sum of weighted z_i.
    causal_ = !std::holds_alternative<ProjectionComplement>(A_);
    if (causal_) {
      weights_.resize(n);
      for (std::size_t i = 0; i < n; ++i) weights_[i] = sn * loading(A_, grid_.cell(i), grid_.cell(i));
    } else {
      const auto& pc = std::get<ProjectionComplement>(A_);
      loading_ = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n + 1), static_cast<Eigen::Index>(n));
      // <(I-P) 1_[0,t_j], 1_cell> = |[0,t_j] n cell| - sum_m E_m([0,t_j]) E_m(cell)
      Eigen::MatrixXd pre(static_cast<Eigen::Index>(n + 1), static_cast<Eigen::Index>(pc.prefix.size()));
      Eigen::MatrixXd cel(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(pc.prefix.size()));
      for (std::size_t m = 0; m < pc.prefix.size(); ++m) {
        for (std::size_t j = 0; j <= n; ++j) pre(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(m)) = pc.prefix[m].over(grid_.prefix(j));
        for (std::size_t i = 0; i < n; ++i) cel(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(m)) = pc.prefix[m].over(grid_.cell(i));
      }
      loading_ = -(pre * cel.transpose());
      for (std::size_t j = 0; j <= n; ++j)
        for (std::size_t i = 0; i < j; ++i) loading_(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) += grid_.cell(i).length();
      loading_ *= sn;
      loading_.row(0).setZero();
    }
  }

  const OperatorSpec& op() const { return A_; }
  const PathGrid& grid() const { return grid_; }

  /// Loading matrix L with x = L z, of size (n+1) x n.
  Eigen::MatrixXd loading_matrix() const {
    if (!causal_) return loading_;
    const std::size_t n = grid_.n;
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n + 1), static_cast<Eigen::Index>(n));
    for (std::size_t j = 1; j <= n; ++j)
      for (std::size_t i = 0; i < j; ++i) L(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = weights_[i];
    return L;
  }

  /// x from given white-noise coordinates.
  void path_from_noise(std::span<const double> z, std::span<double> x) const {
    const std::size_t n = grid_.n;
    if (z.size() != n || x.size() != n + 1) throw ResolutionError("noise/path length does not match the grid");
    if (causal_) {
      x[0] = 0.0;
      for (std::size_t i = 0; i < n; ++i) x[i + 1] = x[i] + weights_[i] * z[i];
    } else {
      Eigen::Map<const Eigen::VectorXd> zz(z.data(), static_cast<Eigen::Index>(n));
      Eigen::Map<Eigen::VectorXd> xx(x.data(), static_cast<Eigen::Index>(n + 1));
      xx.noalias() = loading_ * zz;
    }
  }

  JointSample sample(Engine& rng, std::uint64_t seed = 0, std::uint64_t index = 0) const {
    JointSample s{grid_, std::vector<double>(grid_.n), std::vector<double>(grid_.n + 1), seed, index};
    fill_normals(s.z, rng);
    path_from_noise(s.z, s.x);
    return s;
  }

  /// Sample for path `index` from the stream (seed, index).
  JointSample sample(std::uint64_t seed, std::uint64_t index) const {
    Engine rng = make_stream(seed, index);
    return sample(rng, seed, index);
  }

  /// Analytic covariance of (x(t_0), ..., x(t_n)).
  Eigen::MatrixXd path_covariance() const {
    const std::size_t n = grid_.n;
    Eigen::MatrixXd c(static_cast<Eigen::Index>(n + 1), static_cast<Eigen::Index>(n + 1));
    for (std::size_t a = 0; a <= n; ++a)
      for (std::size_t b = 0; b <= a; ++b)
        c(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = c(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a)) =
            increment_cov(A_, grid_.prefix(a), grid_.prefix(b));
    return c;
  }

 private:
  OperatorSpec A_;
  PathGrid grid_;
  bool causal_ = true;
  std::vector<double> weights_;
  Eigen::MatrixXd loading_;
};

inline JointSample sample_joint(const OperatorSpec& A, const PathGrid& grid, Engine& rng) {
  return PathSampler(A, grid).sample(rng);
}

/// Path-only sampler through a factorization of the analytic path
/// covariance. Cross-check for PathSampler; carries no white noise.
class CholeskyPathSampler {
 public:
  CholeskyPathSampler(const OperatorSpec& A, PathGrid grid) : grid_(grid) {
    const Eigen::MatrixXd c = PathSampler(A, grid).path_covariance();
    // Drop x(0) = 0, factor the rest (semidefinite for bridges, where x(1) = 0).
    const Eigen::Index n = static_cast<Eigen::Index>(grid.n);
    factor_ = GramMatrix(c.bottomRightCorner(n, n)).factor();
  }

  std::vector<double> sample(Engine& rng) const {
    const Eigen::Index n = static_cast<Eigen::Index>(grid_.n);
    std::vector<double> z(grid_.n);
    fill_normals(z, rng);
    const Eigen::VectorXd y = factor_ * Eigen::Map<const Eigen::VectorXd>(z.data(), n);
    std::vector<double> x(grid_.n + 1, 0.0);
    for (Eigen::Index j = 0; j < n; ++j) x[static_cast<std::size_t>(j) + 1] = y(j);
    return x;
  }

 private:
  PathGrid grid_;
  Eigen::MatrixXd factor_;
};

/// (h, xi) = sum_i <h, e_i> z_i for h on the sample's grid.
inline double pairing(const JointSample& s, const GridFunction& h) {
  if (h.n() != s.grid.n)
    throw ResolutionError("pairing: test function has " + std::to_string(h.n()) + " cells, path grid has " +
                          std::to_string(s.grid.n));
  double acc = 0.0;
  for (std::size_t i = 0; i < s.z.size(); ++i) acc += h.values()[i] * s.z[i];
  return acc / std::sqrt(static_cast<double>(s.grid.n));
}

/// Left-point sum sum_j integrand[j] (driver[j+1] - driver[j]).
inline double ito_sum(std::span<const double> integrand, std::span<const double> driver) {
  if (driver.size() != integrand.size() + 1)
    throw ResolutionError("ito_sum: integrand has " + std::to_string(integrand.size()) + " values, driver has " +
                          std::to_string(driver.size()) + " (expected one more)");
  double acc = 0.0;
  for (std::size_t j = 0; j < integrand.size(); ++j) acc += integrand[j] * (driver[j + 1] - driver[j]);
  return acc;
}

struct CovariancePair {
  Eigen::MatrixXd cov_a;
  Eigen::MatrixXd cov_b;
};

/// Covariance of (x(t_0), ..., x(t_n)) for the projection complement of the
/// partition indicators, computed from the sampler's loading matrix (L L^T),
/// against the covariance of independent Brownian bridges on the partition
/// segments: within a segment starting at s with length l,
/// cov(x(s+u), x(s+v)) = min(u,v) - u v / l, and 0 across segments.
inline CovariancePair bridge_covariance_check(const std::vector<double>& partition, std::size_t n = 128) {
  const PathGrid grid(n);
  const PathSampler sampler(bridge(partition), grid);
  const Eigen::MatrixXd L = sampler.loading_matrix();
  CovariancePair out{L * L.transpose(), Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n + 1), static_cast<Eigen::Index>(n + 1))};

  std::vector<double> pts{0.0};
  pts.insert(pts.end(), partition.begin(), partition.end());
  pts.push_back(1.0);
  auto segment = [&](double t) {
    std::size_t k = 0;
    while (k + 2 < pts.size() && t >= pts[k + 1]) ++k;
    return k;
  };
  for (std::size_t a = 0; a <= n; ++a)
    for (std::size_t b = 0; b <= n; ++b) {
      const double ta = grid.time(a), tb = grid.time(b);
      const std::size_t ka = segment(ta), kb = segment(tb);
      if (ka != kb) continue;
      const double s = pts[ka], l = pts[ka + 1] - pts[ka];
      const double u = ta - s, v = tb - s;
      out.cov_b(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = std::min(u, v) - u * v / l;
    }
  return out;
}

inline void write_path_csv(std::ostream& os, const JointSample& s) {
  os << "t,x,seed,index\n";
  os.precision(17);
  for (std::size_t j = 0; j < s.x.size(); ++j) os << s.grid.time(j) << ',' << s.x[j] << ',' << s.seed << ',' << s.index << '\n';
}

}  // namespace silt
