#pragma once

// Clark representations and their checks: the delta-functional formula
//   delta_0(w(t) - w(s)) = 1/sqrt(2 pi (t-s)) + \int_s^t p'_{t-u}(w(u) - w(s)) dw(u),
// the Wiener self-intersection integrand beta, and the general-integrator
// integrand built from d_j p_R, verified through Fourier-Wiener transforms and
// L2 residuals of the eps-smoothed representations.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "silt/chaos.hpp"
#include "silt/error.hpp"
#include "silt/function_space.hpp"
#include "silt/gram.hpp"
#include "silt/gram_matrix.hpp"
#include "silt/local_time.hpp"
#include "silt/monte_carlo.hpp"
#include "silt/operators.hpp"
#include "silt/quadrature.hpp"
#include "silt/sampler.hpp"
#include "silt/simplex.hpp"
#include "silt/special.hpp"

namespace silt {

/// Centered Gaussian density N(0, R).
class GaussianDensity {
 public:
  explicit GaussianDensity(GramMatrix cov) : cov_(std::move(cov)) {
    if (cov_.is_singular())
      throw DegeneracyError("Gaussian density needs a positive definite covariance (det = " + num_str(cov_.det()) + ")",
                            cov_.det());
    norm_ = std::pow(kTwoPi, -0.5 * static_cast<double>(cov_.dim())) / std::sqrt(cov_.det());
  }

  Eigen::Index dim() const { return cov_.dim(); }
  const GramMatrix& covariance() const { return cov_; }

  double operator()(const Eigen::VectorXd& x) const {
    check(x);
    return norm_ * std::exp(-0.5 * cov_.quadratic_inverse(x));
  }

  /// d/dx_j p_R(x) = -(R^{-1} x)_j p_R(x).
  double grad(const Eigen::VectorXd& x, Eigen::Index j) const {
    check(x);
    if (j < 0 || j >= dim()) throw InputError("density gradient coordinate out of range");
    const Eigen::VectorXd y = cov_.solve(x);
    return -y(j) * norm_ * std::exp(-0.5 * x.dot(y));
  }

  Eigen::VectorXd grad(const Eigen::VectorXd& x) const {
    check(x);
    const Eigen::VectorXd y = cov_.solve(x);
    return -y * (norm_ * std::exp(-0.5 * x.dot(y)));
  }

 private:
  void check(const Eigen::VectorXd& x) const {
    if (x.size() != dim()) throw InputError("density argument has the wrong dimension");
  }

  GramMatrix cov_;
  double norm_ = 0.0;
};

inline double density_grad(const GaussianDensity& d, const Eigen::VectorXd& x, Eigen::Index j) { return d.grad(x, j); }

/// p_{t-s}(\int_s^t h) against 1/sqrt(2 pi (t-s)) + \int_s^t p'_{t-s}(\int_s^u h) h(u) du.
inline TwoSides clark_delta_fw_check(const Function& h, double s, double t) {
  if (!(s >= 0.0 && s < t && t <= 1.0)) throw InputError("need 0 <= s < t <= 1");
  const PrefixIntegral H(h);
  const double v = t - s;
  const double lhs = normal_pdf(H.between(s, t), v);
  const auto breaks = to_step(h).breakpoints();
  const auto r = quad::integrate([&](double u) { return normal_pdf_dx(H.between(s, u), v) * evaluate(h, u); }, s, t,
                                 {1e-14, 1e-12, 4000}, breaks);
  return {lhs, 1.0 / std::sqrt(kTwoPi * v) + r.value};
}

struct ResidualEstimate {
  double eps = 0.0;
  std::size_t grid_n = 0;
  MCEstimate residual;  // E[(F - mean - ito_sum)^2]
  MCEstimate ablation;  // same with the integrand set to zero
  double variance = 0.0;  // sample variance of F
};

/// L2 residual of the eps-smoothed delta representation
///   p_eps(w(t) - w(s)) = p_{t-s+eps}(0) + \int_s^t p'_{t-u+eps}(w(u) - w(s)) dw(u),
/// with the stochastic integral as a left-point sum on the grid.
inline ResidualEstimate clark_delta_l2_residual(double s, double t, double eps, std::size_t grid_n, std::size_t n_paths,
                                                std::uint64_t seed, const ShardPlan& plan = {}) {
  if (!(s >= 0.0 && s < t && t <= 1.0)) throw InputError("need 0 <= s < t <= 1");
  if (!(eps > 0.0)) throw InputError("epsilon must be positive");
  const PathGrid grid(grid_n);
  const auto aligned = [&](double x) {
    const double j = x * static_cast<double>(grid_n);
    return std::abs(j - std::round(j)) < 1e-9;
  };
  if (!aligned(s) || !aligned(t)) throw InputError("s and t must be grid points");
  const auto js = static_cast<std::size_t>(std::llround(s * static_cast<double>(grid_n)));
  const auto jt = static_cast<std::size_t>(std::llround(t * static_cast<double>(grid_n)));
  const double mean = 1.0 / std::sqrt(kTwoPi * (t - s + eps));
  const PathSampler sampler(Identity{}, grid);
  const auto acc = run_sharded(n_paths, plan, MultiAccumulator(3),
                               [&](std::size_t, std::size_t first, std::size_t count, MultiAccumulator& part) {
                                 std::vector<double> beta(jt - js);
                                 for (std::size_t p = first; p < first + count; ++p) {
                                   const JointSample smp = sampler.sample(seed, p);
                                   const auto& x = smp.x;
                                   for (std::size_t j = js; j < jt; ++j)
                                     beta[j - js] = normal_pdf_dx(x[j] - x[js], t - grid.time(j) + eps);
                                   const double F = normal_pdf(x[jt] - x[js], eps);
                                   const double I = ito_sum(beta, std::span<const double>(x).subspan(js, jt - js + 1));
                                   const double r = F - mean - I;
                                   const double a = F - mean;
                                   const double row[3] = {r * r, a * a, F};
                                   part.add(row);
                                 }
                               });
  return {eps, grid_n, to_estimate(acc[0], seed), to_estimate(acc[1], seed), acc[2].variance()};
}

namespace detail {

/// c(t) = \int_t^1 (2 pi (u - t + eps))^{-1/2} du.
inline double tail_mass(double t, double eps) {
  return 2.0 / std::sqrt(kTwoPi) * (std::sqrt(1.0 - t + eps) - std::sqrt(eps));
}

/// d(t) = \int_0^t (2 pi (t - u + eps))^{-1/2} du.
inline double head_mass(double t, double eps) { return 2.0 / std::sqrt(kTwoPi) * (std::sqrt(t + eps) - std::sqrt(eps)); }

/// Trapezoid weight of grid point i on [t_lo, t_hi] (indices lo..hi).
inline double trap(std::size_t i, std::size_t lo, std::size_t hi, double h) {
  if (lo == hi) return 0.0;
  return (i == lo || i == hi) ? 0.5 * h : h;
}

}  // namespace detail

/// Integrand beta_eps(t_j), j = 0..n-1, of the Clark representation of
/// T_{eps,k}^w on one Wiener path (eps = 0 is the unsmoothed integrand).
///
/// k = 2: beta(tau) = \int_0^tau dt_1 \int_tau^1 dt_2 p'_{t_2-tau+eps}(w(tau) - w(t_1)); the t_2
/// integral is closed form, the t_1 integral a trapezoid sum on the grid.
/// k = 3: the r = 1 terms (index sets {1}, {2}) and the r = 2 term, whose inner stochastic
/// integral over [t_1, t_2] is a left-point sum on the path.
inline std::vector<double> wiener_beta_path(std::span<const double> x, int k, double eps) {
  if (k != 2 && k != 3) throw ScopeError("the Wiener integrand is implemented for k = 2 and k = 3 only");
  if (!(eps >= 0.0)) throw InputError("epsilon must be >= 0");
  const std::size_t n = x.size() - 1;
  const double h = 1.0 / static_cast<double>(n);
  auto time = [&](std::size_t j) { return static_cast<double>(j) * h; };
  std::vector<double> beta(n, 0.0);
  // G(j, i) = \int_{t_j}^1 p'_{u - t_j + eps}(x_j - x_i) du for i <= j.
  auto tail_dx = [&](std::size_t j, std::size_t i) {
    return integrated_pdf_dx(x[j] - x[i], eps, 1.0 - time(j) + eps);
  };
  if (k == 2) {
    for (std::size_t j = 1; j < n; ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i <= j; ++i) s += detail::trap(i, 0, j, h) * tail_dx(j, i);
      beta[j] = s;
    }
    return beta;
  }
  auto dp = [&](double var, double y) { return var > 0.0 ? normal_pdf_dx(y, var) : 0.0; };
  // Q(m) = \int_0^{t_m} dt_1 \int_{t_1}^{t_m} p'_{t_m - u + eps}(w(u) - w(t_1)) dw(u).
  std::vector<double> Q(n + 1, 0.0);
  for (std::size_t m = 1; m <= n; ++m) {
    double q = 0.0;
    for (std::size_t i = 0; i <= m; ++i) {
      double S = 0.0;
      for (std::size_t u = i; u < m; ++u) S += dp(time(m) - time(u) + eps, x[u] - x[i]) * (x[u + 1] - x[u]);
      q += detail::trap(i, 0, m, h) * S;
    }
    Q[m] = q;
  }
  for (std::size_t j = 1; j < n; ++j) {
    const double tau = time(j);
    double b = 0.0;
    // {1}: tau in [t_1, t_2], t_3 free above t_2.
    for (std::size_t i = 0; i <= j; ++i) {
      double inner = 0.0;
      for (std::size_t m = j; m <= n; ++m)
        inner += detail::trap(m, j, n, h) * detail::tail_mass(time(m), eps) * dp(time(m) - tau + eps, x[j] - x[i]);
      b += detail::trap(i, 0, j, h) * inner;
    }
    // {2} and {1,2}: tau in [t_2, t_3]; t_1 below t_2.
    for (std::size_t m = 0; m <= j; ++m) {
      const double g = tail_dx(j, m);
      b += detail::trap(m, 0, j, h) * g * (detail::head_mass(time(m), eps) + Q[m]);
    }
    beta[j] = b;
  }
  return beta;
}

/// beta(tau) at the grid point tau = t_j of the sample.
inline double wiener_beta(const JointSample& s, int k, std::size_t j, double eps = 0.0) {
  if (j >= s.grid.n) throw InputError("tau must be a grid point before t = 1");
  return wiener_beta_path(s.x, k, eps)[j];
}

struct ClarkDecomposition {
  double constant = 0.0;
  std::vector<double> integrand;  // beta at t_0, ..., t_{n-1}
  double value = 0.0;             // T_{eps,k} on the path
  double residual = 0.0;          // value - constant - ito_sum(integrand, path)
};

/// eps-smoothed Clark decomposition of T_{eps,2}^w on one path.
inline ClarkDecomposition clark_decomposition_wiener(const JointSample& s, double eps) {
  ClarkDecomposition d;
  d.constant = mean_T_wiener_smoothed(eps);
  d.integrand = wiener_beta_path(s.x, 2, eps);
  d.value = estimate_T_eps(s.x, 2, eps);
  d.residual = d.value - d.constant - ito_sum(d.integrand, s.x);
  return d;
}

/// One (eps, grid) stage of the Wiener residual study.
struct ResidualStage {
  double eps = 0.0;
  std::size_t grid_n = 256;
};

/// Per stage: E[(T_{eps,2} - mean_eps - \int beta_eps dw)^2], the beta = 0 ablation
/// E[(T_{eps,2} - mean_eps)^2], and the sample variance of T_{eps,2}.
inline std::vector<ResidualEstimate> clark_wiener_l2_residual(int k, std::span<const ResidualStage> stages,
                                                              std::size_t n_paths, std::uint64_t seed,
                                                              const ShardPlan& plan = {}) {
  if (k != 2) throw ScopeError("the Wiener residual study is implemented for k = 2");
  std::vector<ResidualEstimate> out;
  for (const auto& st : stages) {
    if (!(st.eps > 0.0)) throw InputError("epsilon must be positive");
    const PathSampler sampler(Identity{}, PathGrid(st.grid_n));
    const double mean = mean_T_wiener_smoothed(st.eps);
    const auto acc = run_sharded(n_paths, plan, MultiAccumulator(3),
                                 [&](std::size_t, std::size_t first, std::size_t count, MultiAccumulator& part) {
                                   for (std::size_t p = first; p < first + count; ++p) {
                                     const JointSample smp = sampler.sample(seed, p);
                                     const double T = estimate_T_eps(smp.x, 2, st.eps);
                                     const auto beta = wiener_beta_path(smp.x, 2, st.eps);
                                     const double r = T - mean - ito_sum(beta, smp.x);
                                     const double row[3] = {r * r, (T - mean) * (T - mean), T};
                                     part.add(row);
                                   }
                                 });
    out.push_back({st.eps, st.grid_n, to_estimate(acc[0], seed), to_estimate(acc[1], seed), acc[2].variance()});
  }
  return out;
}

inline void write_residual_csv(std::ostream& os, std::span<const ResidualEstimate> rows, std::uint64_t seed) {
  os << "epsilon,grid_n,residual,stderr,ablation,ablation_stderr,variance,seed\n";
  os.precision(12);
  for (const auto& r : rows)
    os << r.eps << ',' << r.grid_n << ',' << r.residual.mean << ',' << r.residual.std_error << ',' << r.ablation.mean
       << ',' << r.ablation.std_error << ',' << r.variance << ',' << seed << '\n';
}

struct BetaMatrices {
  Eigen::MatrixXd B_full;
  Eigen::MatrixXd B_partial;
  Eigen::MatrixXd R;
  bool r_positive_definite = false;
};

/// B_partial = increment Gram matrix of [t_i, t_i + theta (t_{i+1} - t_i)], B_full the same
/// at theta = 1, R = B_full - B_partial (flagged when not positive definite).
inline BetaMatrices general_beta_matrices(const OperatorSpec& A, std::span<const double> t, double theta) {
  if (t.size() < 2) throw InputError("need at least two times");
  for (std::size_t i = 0; i + 1 < t.size(); ++i)
    if (!(t[i] < t[i + 1])) throw InputError("times must be strictly increasing");
  if (!(theta >= 0.0 && theta <= 1.0)) throw InputError("theta must lie in [0,1]");
  std::vector<Interval> full, part;
  for (std::size_t i = 0; i + 1 < t.size(); ++i) {
    full.emplace_back(t[i], t[i + 1]);
    part.emplace_back(t[i], theta == 1.0 ? t[i + 1] : t[i] + theta * (t[i + 1] - t[i]));
  }
  BetaMatrices m{increment_gram_entries(A, full), increment_gram_entries(A, part), {}, false};
  m.R = m.B_full - m.B_partial;
  Eigen::LLT<Eigen::MatrixXd> llt(m.R);
  m.r_positive_definite = llt.info() == Eigen::Success && m.R.diagonal().minCoeff() > 0.0 &&
                          !GramMatrix(m.R).is_singular();
  return m;
}

/// Newton-Leibniz integrand in theta at one simplex point:
///   p_B(0) + sum_j d_j p_B(V(theta)) (t_{j+1} - t_j) (A* h)(t_j + theta (t_{j+1} - t_j)),
/// where B is the full increment Gram matrix and V(theta)_j = \int_{t_j}^{t_j + theta Delta_j} A* h.
/// Averaging over theta ~ U(0,1) gives p_B(V(1)), the transform integrand.
inline double newton_leibniz_integrand(const OperatorSpec& A, const Function& adj_h, const PrefixIntegral& adj_prefix,
                                       std::span<const double> t, double theta) {
  const std::size_t d = t.size() - 1;
  const GramMatrix B(family_gram(A, t, static_cast<int>(t.size()), 1));
  if (B.is_singular()) return INFINITY;
  const GaussianDensity p(B);
  Eigen::VectorXd v(static_cast<Eigen::Index>(d));
  for (std::size_t j = 0; j < d; ++j) v(static_cast<Eigen::Index>(j)) = adj_prefix.between(t[j], t[j] + theta * (t[j + 1] - t[j]));
  const Eigen::VectorXd g = p.grad(v);
  double s = p(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d)));
  for (std::size_t j = 0; j < d; ++j) {
    const double dj = t[j + 1] - t[j];
    s += g(static_cast<Eigen::Index>(j)) * dj * evaluate(adj_h, t[j] + theta * dj);
  }
  return s;
}

struct TransformCheck {
  MCEstimate lhs;  // transform of T_k^x at h
  MCEstimate rhs;  // E T_k^x + transform of the Clark integral
};

/// lhs: simplex MC of the transform integrand p_B(V). rhs: independent MC over
/// (simplex point, theta) of the Newton-Leibniz integrand, whose constant part
/// is E T_k^x and whose theta part is the transform of the Clark integral
/// (by d_j p_R * p_{B_partial} = d_j p_{B_full}).
inline TransformCheck clark_general_fw_check(const OperatorSpec& A, int k, const Function& h, std::size_t n_mc,
                                             std::uint64_t seed, const ShardPlan& plan = {}) {
  if (k < 2) throw InputError("local time order k must be >= 2");
  TransformCheck out;
  out.lhs = fw_transform_quad(A, k, h, n_mc, seed, plan);
  const Function adj = apply_adjoint(A, h);
  const PrefixIntegral adj_prefix(adj);
  const std::uint64_t rhs_seed = seed ^ 0x9e3779b97f4a7c15ULL;
  const Accumulator acc = run_sharded(n_mc, plan, Accumulator{}, [&](std::size_t s, std::size_t, std::size_t count, Accumulator& part) {
    Engine rng = make_stream(rhs_seed, s);
    std::vector<double> t(static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < count; ++i) {
      sample_simplex_into(t, 0.0, 1.0, rng);
      const double theta = uniform01(rng);
      part.add(newton_leibniz_integrand(A, adj, adj_prefix, t, theta));
    }
  });
  out.rhs = to_estimate(acc, rhs_seed, simplex_volume(k, 0.0, 1.0));
  detail::require_integrable(out.rhs, "Clark transform check");
  return out;
}

/// MC of E[d_j p_R(X + v)], X ~ N(0, B_partial); equals d_j p_{B_partial + R}(v).
inline MCEstimate convolution_identity_mc(const Eigen::MatrixXd& B_partial, const Eigen::MatrixXd& R,
                                          const Eigen::VectorXd& v, Eigen::Index j, std::size_t n_mc,
                                          std::uint64_t seed, const ShardPlan& plan = {}) {
  const GaussianDensity pR{GramMatrix(R)};
  const Eigen::MatrixXd F = GramMatrix(B_partial).factor();
  const Accumulator acc = run_sharded(n_mc, plan, Accumulator{}, [&](std::size_t s, std::size_t, std::size_t count, Accumulator& part) {
    Engine rng = make_stream(seed, s);
    std::vector<double> z(static_cast<std::size_t>(v.size()));
    for (std::size_t i = 0; i < count; ++i) {
      fill_normals(z, rng);
      const Eigen::VectorXd x = F * Eigen::Map<const Eigen::VectorXd>(z.data(), v.size()) + v;
      part.add(pR.grad(x, j));
    }
  });
  return to_estimate(acc, seed);
}

}  // namespace silt
