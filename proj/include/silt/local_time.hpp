#pragma once

// The epsilon-approximation
//   T_{eps,k} = \int_{Delta_k} prod_{i<k} p_eps(x(t_{i+1}) - x(t_i)) dt
// on sampled paths, its Gaussian-smoothed moments
//   E prod p_eps(increments) = (2 pi)^{-m/2} det(E + B)^{-1/2},
// and the closed-form means.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "silt/error.hpp"
#include "silt/gram_matrix.hpp"
#include "silt/monte_carlo.hpp"
#include "silt/operators.hpp"
#include "silt/sampler.hpp"
#include "silt/simplex.hpp"
#include "silt/special.hpp"

namespace silt {

class EpsSchedule {
 public:
  EpsSchedule() = default;
  explicit EpsSchedule(std::vector<double> eps) : eps_(std::move(eps)) {
    if (eps_.empty()) throw InputError("epsilon schedule is empty");
    for (std::size_t i = 0; i < eps_.size(); ++i) {
      if (!(eps_[i] > 0.0)) throw InputError("epsilon values must be positive (got " + num_str(eps_[i]) + ")");
      if (i > 0 && !(eps_[i] < eps_[i - 1])) throw InputError("epsilon schedule must be strictly decreasing");
    }
  }
  const std::vector<double>& values() const { return eps_; }
  std::size_t size() const { return eps_.size(); }
  double operator[](std::size_t i) const { return eps_[i]; }

 private:
  std::vector<double> eps_;
};

namespace detail {

/// Trapezoid weights on the points t_0, ..., t_n of a uniform grid.
inline std::vector<double> trapezoid_weights(std::size_t n) {
  std::vector<double> w(n + 1, 1.0 / static_cast<double>(n));
  w.front() *= 0.5;
  w.back() *= 0.5;
  return w;
}

/// Discrete simplex sum of prod_i kern(j_i, j_{i+1}) over nondecreasing
/// index tuples j_1 <= ... <= j_k, with product trapezoid weights and weight
/// 1/m! for each run of m equal indices. This is the product trapezoid rule on
/// [0,1]^k applied to the symmetric extension of the integrand, divided by k!.
/// `kern` is (n+1) x (n+1), row-major, read for j <= j' only.
inline double simplex_sum(std::span<const double> kern, std::span<const double> w, int k) {
  const std::size_t N = w.size();
  // v[r][j]: partial sums ending at index j with a current tie run of length r+1.
  std::vector<std::vector<double>> v(static_cast<std::size_t>(k), std::vector<double>(N, 0.0));
  for (std::size_t j = 0; j < N; ++j) v[0][j] = w[j];
  std::vector<double> total(N);
  for (int level = 1; level < k; ++level) {
    for (std::size_t j = 0; j < N; ++j) {
      total[j] = 0.0;
      for (int r = 0; r < level; ++r) total[j] += v[static_cast<std::size_t>(r)][j];
    }
    std::vector<std::vector<double>> nv(static_cast<std::size_t>(k), std::vector<double>(N, 0.0));
    for (std::size_t jp = 0; jp < N; ++jp) {
      double s = 0.0;
      const double* row_end = kern.data() + jp;  // kern(j, jp) = kern[j*N + jp]
      for (std::size_t j = 0; j < jp; ++j) s += total[j] * row_end[j * N];
      nv[0][jp] = w[jp] * s;
      const double diag = kern[jp * N + jp];
      for (int r = 0; r < level; ++r)
        nv[static_cast<std::size_t>(r) + 1][jp] = v[static_cast<std::size_t>(r)][jp] * w[jp] * diag / static_cast<double>(r + 2);
    }
    v = std::move(nv);
  }
  double out = 0.0;
  for (const auto& row : v)
    for (double x : row) out += x;
  return out;
}

}  // namespace detail

/// T_{eps,k} on one sampled path for several eps at once.
inline std::vector<double> estimate_T_eps(std::span<const double> x, int k, std::span<const double> eps) {
  if (k < 2) throw InputError("local time order k must be >= 2");
  if (x.size() < 3) throw InputError("path needs at least 2 cells");
  const std::size_t N = x.size();
  if (static_cast<std::size_t>(k) > N - 1)
    throw InputError("order k = " + std::to_string(k) + " exceeds the grid size " + std::to_string(N - 1));
  for (double e : eps)
    if (!(e > 0.0)) throw InputError("epsilon must be positive");
  const auto w = detail::trapezoid_weights(N - 1);
  std::vector<double> out;
  out.reserve(eps.size());
  if (k == 2) {
    // sum_{i<j} w_i w_j p(x_j - x_i) + p(0)/2 sum_i w_i^2, all eps in one sweep over pairs.
    const std::size_t E = eps.size();
    std::vector<double> inv2e(E), norm(E), acc(E, 0.0);
    for (std::size_t e = 0; e < E; ++e) {
      inv2e[e] = 0.5 / eps[e];
      norm[e] = 1.0 / std::sqrt(kTwoPi * eps[e]);
    }
    std::vector<double> inner(E);
    for (std::size_t j = 1; j < N; ++j) {
      std::fill(inner.begin(), inner.end(), 0.0);
      for (std::size_t i = 0; i < j; ++i) {
        const double d = x[j] - x[i];
        const double d2 = d * d;
        for (std::size_t e = 0; e < E; ++e) inner[e] += w[i] * std::exp(-d2 * inv2e[e]);
      }
      for (std::size_t e = 0; e < E; ++e) acc[e] += w[j] * inner[e];
    }
    double wsq = 0.0;
    for (double wi : w) wsq += wi * wi;
    for (std::size_t e = 0; e < E; ++e) out.push_back(norm[e] * (acc[e] + 0.5 * wsq));
    return out;
  }
  std::vector<double> kern(N * N, 0.0);
  for (double e : eps) {
    for (std::size_t i = 0; i < N; ++i)
      for (std::size_t j = i; j < N; ++j) kern[i * N + j] = normal_pdf(x[j] - x[i], e);
    out.push_back(detail::simplex_sum(kern, w, k));
  }
  return out;
}

inline double estimate_T_eps(std::span<const double> x, int k, double eps) {
  return estimate_T_eps(x, k, std::span<const double>(&eps, 1)).front();
}

inline double estimate_T_eps(const JointSample& s, int k, double eps) { return estimate_T_eps(s.x, k, eps); }

/// Increment Gram matrix of the concatenated interval families
/// [t^f_i, t^f_{i+1}], f = 0..q-1, each family holding k times.
inline Eigen::MatrixXd family_gram(const OperatorSpec& A, std::span<const double> times, int k, int q) {
  std::vector<Interval> ivs;
  ivs.reserve(static_cast<std::size_t>(q * (k - 1)));
  for (int f = 0; f < q; ++f)
    for (int i = 0; i + 1 < k; ++i) {
      const double* t = times.data() + f * k;
      ivs.emplace_back(t[i], t[i + 1]);
    }
  return increment_gram_entries(A, ivs);
}

/// (2 pi)^{-m/2} det(E + B)^{-1/2} with E = diag(eps of each family's
/// intervals). Returns +inf where det(E + B) vanishes.
inline double smoothed_moment_integrand(const Eigen::MatrixXd& B, int k, std::span<const double> eps) {
  const Eigen::Index m = B.rows();
  Eigen::MatrixXd M = B;
  for (Eigen::Index i = 0; i < m; ++i) M(i, i) += eps[static_cast<std::size_t>(i / (k - 1))];
  const double det = GramMatrix(std::move(M)).det();
  if (!(det > 0.0)) return INFINITY;
  return std::pow(kTwoPi, -0.5 * static_cast<double>(m)) / std::sqrt(det);
}

inline double smoothed_moment_integrand(const OperatorSpec& A, std::span<const double> times, int k,
                                        std::span<const double> eps) {
  return smoothed_moment_integrand(family_gram(A, times, k, static_cast<int>(eps.size())), k, eps);
}

/// The mixed-epsilon integrand as printed for two families,
/// 1 / (2 pi sqrt(e1 e2 + e1 B11 + e2 B22 + G)), with B the 2x2 increment Gram matrix.
inline double mixed_eps_display(double e1, double e2, const Eigen::Matrix2d& B) {
  const double G = B(0, 0) * B(1, 1) - B(0, 1) * B(1, 0);
  return 1.0 / (kTwoPi * std::sqrt(e1 * e2 + e1 * B(0, 0) + e2 * B(1, 1) + G));
}

namespace detail {

/// MC over Delta_k^q of g(times) where `times` holds q sorted k-tuples.
template <class G>
Accumulator simplex_power_mc(int k, int q, std::size_t n, std::uint64_t seed, const ShardPlan& plan, G&& g) {
  return run_sharded(n, plan, Accumulator{}, [&](std::size_t s, std::size_t, std::size_t count, Accumulator& part) {
    Engine rng = make_stream(seed, s);
    std::vector<double> t(static_cast<std::size_t>(k * q));
    for (std::size_t i = 0; i < count; ++i) {
      for (int f = 0; f < q; ++f)
        sample_simplex_into(std::span<double>(t.data() + f * k, static_cast<std::size_t>(k)), 0.0, 1.0, rng);
      part.add(g(std::span<const double>(t)));
    }
  });
}

inline void require_integrable(const MCEstimate& e, const std::string& what) {
  if (e.integrability_warning())
    throw IntegrabilityError(what + ": " + num_str(100.0 * e.rejection_fraction()) +
                                 "% of samples were non-finite (limit 1%)",
                             e.rejection_fraction());
}

}  // namespace detail

/// \int_{Delta_k^q} (2 pi)^{-m/2} det(E + B)^{-1/2} with one family per eps entry.
inline MCEstimate smoothed_family_moment(const OperatorSpec& A, int k, std::span<const double> eps, std::size_t n_mc,
                                         std::uint64_t seed, const ShardPlan& plan = {}) {
  if (k < 2) throw InputError("local time order k must be >= 2");
  for (double e : eps)
    if (!(e >= 0.0)) throw InputError("smoothing parameters must be >= 0");
  const int q = static_cast<int>(eps.size());
  const auto acc = detail::simplex_power_mc(k, q, n_mc, seed, plan, [&](std::span<const double> t) {
    return smoothed_moment_integrand(A, t, k, eps);
  });
  const MCEstimate e = to_estimate(acc, seed, std::pow(simplex_volume(k, 0.0, 1.0), q));
  detail::require_integrable(e, "smoothed moment");
  return e;
}

/// E prod_{f=1}^{2p} T_{eps_f,k} for eps_list of length 2p.
inline MCEstimate moment_smoothed(const OperatorSpec& A, int k, int p, std::span<const double> eps_list,
                                  std::size_t n_mc, std::uint64_t seed, const ShardPlan& plan = {}) {
  if (p < 1) throw InputError("moment order p must be >= 1");
  if (eps_list.size() != static_cast<std::size_t>(2 * p))
    throw InputError("moment of order 2p needs 2p smoothing parameters");
  return smoothed_family_moment(A, k, eps_list, n_mc, seed, plan);
}

/// E T_{eps,k} (eps = 0 gives E T_k).
inline MCEstimate mean_T_eps(const OperatorSpec& A, int k, double eps, std::size_t n_mc, std::uint64_t seed,
                             const ShardPlan& plan = {}) {
  return smoothed_family_moment(A, k, std::span<const double>(&eps, 1), n_mc, seed, plan);
}

/// E T_k for the multiplication integrator.
inline MCEstimate mean_T_mult(const Function& phi, int k, std::size_t n_mc, std::uint64_t seed,
                              const ShardPlan& plan = {}) {
  return mean_T_eps(make_multiplication(phi), k, 0.0, n_mc, seed, plan);
}

/// E T_k^w = 1 / (2^{(k-1)/2} Gamma((k+3)/2)).
inline double mean_T_wiener(int k) {
  if (k < 2) throw InputError("local time order k must be >= 2");
  return 1.0 / (std::pow(2.0, 0.5 * (k - 1)) * gamma_fn(0.5 * (k + 3)));
}

/// E T_{eps,2}^w = (2 pi)^{-1/2} \int_0^1 (1 - d) (eps + d)^{-1/2} dd in closed form.
inline double mean_T_wiener_smoothed(double eps) {
  if (!(eps >= 0.0)) throw InputError("epsilon must be >= 0");
  const double a = 1.0 + eps, se = std::sqrt(eps);
  return ((4.0 / 3.0) * a * std::sqrt(a) - 2.0 * a * se + (2.0 / 3.0) * eps * se) / std::sqrt(kTwoPi);
}

/// Weights w with f(0) ~ sum_i w_i f(eps_i). One point: constant; two points:
/// affine in sqrt(eps); three or more: least-squares quadratic in sqrt(eps)
/// (a + b sqrt(eps) + c eps), which is exact interpolation for three points.
inline std::vector<double> extrapolation_weights(std::span<const double> eps) {
  const std::size_t n = eps.size();
  if (n == 0) throw InputError("extrapolation needs at least one epsilon");
  for (double e : eps)
    if (!(e > 0.0)) throw InputError("epsilon values must be positive");
  if (n == 1) return {1.0};
  const Eigen::Index cols = n == 2 ? 2 : 3;
  Eigen::MatrixXd X(static_cast<Eigen::Index>(n), cols);
  for (std::size_t i = 0; i < n; ++i) {
    const double s = std::sqrt(eps[i]);
    X(static_cast<Eigen::Index>(i), 0) = 1.0;
    X(static_cast<Eigen::Index>(i), 1) = s;
    if (cols == 3) X(static_cast<Eigen::Index>(i), 2) = eps[i];
  }
  // First row of (X^T X)^{-1} X^T.
  const Eigen::MatrixXd P = (X.transpose() * X).ldlt().solve(X.transpose());
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = P(0, static_cast<Eigen::Index>(i));
  return w;
}

struct PathMeanReport {
  std::vector<double> eps;
  std::vector<MCEstimate> per_eps;
  MCEstimate extrapolated;
  std::vector<double> weights;
};

/// Path Monte Carlo of E T_{eps,k} along the schedule, plus the eps -> 0
/// extrapolation evaluated per path (so its standard error includes the
/// correlation between the per-eps values).
inline PathMeanReport path_mean_T_eps(const OperatorSpec& A, int k, const EpsSchedule& sched, std::size_t grid_n,
                                      std::size_t n_paths, std::uint64_t seed, const ShardPlan& plan = {}) {
  const PathSampler sampler(A, PathGrid(grid_n));
  const auto w = extrapolation_weights(sched.values());
  const std::size_t E = sched.size();
  const auto acc = run_sharded(n_paths, plan, MultiAccumulator(E + 1),
                               [&](std::size_t, std::size_t first, std::size_t count, MultiAccumulator& part) {
                                 std::vector<double> row(E + 1);
                                 for (std::size_t p = first; p < first + count; ++p) {
                                   const JointSample s = sampler.sample(seed, p);
                                   const auto t = estimate_T_eps(s.x, k, sched.values());
                                   double ex = 0.0;
                                   for (std::size_t e = 0; e < E; ++e) {
                                     row[e] = t[e];
                                     ex += w[e] * t[e];
                                   }
                                   row[E] = ex;
                                   part.add(row);
                                 }
                               });
  PathMeanReport out{sched.values(), {}, to_estimate(acc[E], seed), w};
  for (std::size_t e = 0; e < E; ++e) out.per_eps.push_back(to_estimate(acc[e], seed));
  return out;
}

/// E (T_{e1,k} - T_{e2,k})^2 = M(e1,e1) - 2 M(e1,e2) + M(e2,e2), all three
/// second moments evaluated on the same simplex pairs.
inline MCEstimate cauchy_sq_difference(const OperatorSpec& A, int k, double e1, double e2, std::size_t n_mc,
                                       std::uint64_t seed, const ShardPlan& plan = {}) {
  const auto acc = detail::simplex_power_mc(k, 2, n_mc, seed, plan, [&](std::span<const double> t) {
    const Eigen::MatrixXd B = family_gram(A, t, k, 2);
    const double a[2] = {e1, e1}, b[2] = {e1, e2}, c[2] = {e2, e2};
    return smoothed_moment_integrand(B, k, a) - 2.0 * smoothed_moment_integrand(B, k, b) +
           smoothed_moment_integrand(B, k, c);
  });
  return to_estimate(acc, seed, std::pow(simplex_volume(k, 0.0, 1.0), 2));
}

}  // namespace silt
