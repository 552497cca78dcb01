#pragma once

// Fourier-Wiener transform of the local time, the multiplication-operator
// chaos kernels b_{2n}, and the chaos series for E (T_k^w)^2.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <span>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>
#include <Eigen/Dense>

#include "silt/error.hpp"
#include "silt/function_space.hpp"
#include "silt/gram_matrix.hpp"
#include "silt/local_time.hpp"
#include "silt/monte_carlo.hpp"
#include "silt/operators.hpp"
#include "silt/sampler.hpp"
#include "silt/simplex.hpp"
#include "silt/special.hpp"

namespace silt {

/// V_i = <A 1_{[t_i, t_{i+1}]}, h> = \int_{t_i}^{t_{i+1}} A* h.
inline Eigen::VectorXd transform_shift(const PrefixIntegral& adj_h, std::span<const double> t) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(t.size() - 1));
  for (std::size_t i = 0; i + 1 < t.size(); ++i) v(static_cast<Eigen::Index>(i)) = adj_h.between(t[i], t[i + 1]);
  return v;
}

/// Transform integrand at one simplex point:
/// p_{eps I + B}(V) = (2 pi)^{-(k-1)/2} det(eps I + B)^{-1/2} exp(-V^T (eps I + B)^{-1} V / 2).
/// At eps = 0, V^T B^{-1} V = ||P h||^2 for P the projection onto span(A 1_{[t_i, t_{i+1}]}).
inline double fw_integrand(const OperatorSpec& A, const PrefixIntegral& adj_h, std::span<const double> t, double eps) {
  const int k = static_cast<int>(t.size());
  Eigen::MatrixXd B = family_gram(A, t, k, 1);
  for (Eigen::Index i = 0; i < B.rows(); ++i) B(i, i) += eps;
  const GramMatrix G(std::move(B));
  if (G.is_singular()) return INFINITY;
  const double q = G.quadratic_inverse(transform_shift(adj_h, t));
  return std::exp(-0.5 * q) * std::pow(kTwoPi, -0.5 * (k - 1)) / std::sqrt(G.det());
}

/// \int_{Delta_k} e^{-||P h||^2 / 2} / ((2 pi)^{(k-1)/2} sqrt(G)) dt by simplex Monte Carlo
/// (eps > 0 gives the transform of T_{eps,k}).
inline MCEstimate fw_transform_quad(const OperatorSpec& A, int k, const Function& h, std::size_t n_mc,
                                    std::uint64_t seed, const ShardPlan& plan = {}, double eps = 0.0) {
  if (k < 2) throw InputError("local time order k must be >= 2");
  const PrefixIntegral adj(apply_adjoint(A, h));
  const MCEstimate e = mc_simplex_integrate(
      [&](std::span<const double> t) { return fw_integrand(A, adj, t, eps); }, k, 0.0, 1.0, n_mc, seed, plan);
  detail::require_integrable(e, "Fourier-Wiener transform");
  return e;
}

struct PathTransformReport {
  std::vector<double> eps;
  std::vector<MCEstimate> per_eps;  // E[T_{eps,k} E(h)]
  MCEstimate extrapolated;
  MCEstimate exponential_mean;  // E[E(h)], should be 1
};

/// E[T_{eps,k} exp((h, xi) - ||h||^2 / 2)] by path Monte Carlo along the schedule.
inline PathTransformReport fw_transform_mc(const OperatorSpec& A, int k, const GridFunction& h,
                                           const EpsSchedule& sched, std::size_t grid_n, std::size_t n_paths,
                                           std::uint64_t seed, const ShardPlan& plan = {}) {
  if (h.n() != grid_n)
    throw ResolutionError("test function has " + std::to_string(h.n()) + " cells, path grid has " +
                          std::to_string(grid_n));
  const PathSampler sampler(A, PathGrid(grid_n));
  const double hh = inner_product(h, h);
  const auto w = extrapolation_weights(sched.values());
  const std::size_t E = sched.size();
  const auto acc = run_sharded(n_paths, plan, MultiAccumulator(E + 2),
                               [&](std::size_t, std::size_t first, std::size_t count, MultiAccumulator& part) {
                                 std::vector<double> row(E + 2);
                                 for (std::size_t p = first; p < first + count; ++p) {
                                   const JointSample s = sampler.sample(seed, p);
                                   const double expo = std::exp(pairing(s, h) - 0.5 * hh);
                                   const auto t = estimate_T_eps(s.x, k, sched.values());
                                   double ex = 0.0;
                                   for (std::size_t e = 0; e < E; ++e) {
                                     row[e] = t[e] * expo;
                                     ex += w[e] * row[e];
                                   }
                                   row[E] = ex;
                                   row[E + 1] = expo;
                                   part.add(row);
                                 }
                               });
  PathTransformReport out{sched.values(), {}, to_estimate(acc[E], seed), to_estimate(acc[E + 1], seed)};
  for (std::size_t e = 0; e < E; ++e) out.per_eps.push_back(to_estimate(acc[e], seed));
  return out;
}

/// Integrand of b_{2n}(s) at the simplex point t, masses m_i = \int_{t_i}^{t_{i+1}} phi^2:
///   prod_i m_i^{-1/2} * prod_{j=1}^n sum_i 1{(s_{2j-1}, s_{2j}) in [t_i, t_{i+1}]^2} / m_i.
/// The sum over index tuples (i_1, ..., i_n) factorizes over the pairs.
inline double kernel_b2n_integrand(const PrefixIntegral& phi_sq, std::span<const double> t, std::span<const double> s) {
  const std::size_t cells = t.size() - 1;
  double base = 1.0;
  std::vector<double> mass(cells);
  for (std::size_t i = 0; i < cells; ++i) {
    mass[i] = phi_sq.between(t[i], t[i + 1]);
    base *= mass[i];
  }
  double out = 1.0 / std::sqrt(base);
  for (std::size_t j = 0; j + 1 < s.size(); j += 2) {
    const double lo = std::min(s[j], s[j + 1]), hi = std::max(s[j], s[j + 1]);
    double f = 0.0;
    for (std::size_t i = 0; i < cells; ++i)
      if (t[i] <= lo && hi <= t[i + 1]) f += 1.0 / mass[i];
    out *= f;
    if (out == 0.0) break;
  }
  return out;
}

/// b_{2n}(s) for the multiplication integrator, by simplex Monte Carlo.
inline MCEstimate kernel_b2n(const Function& phi, int k, int n, std::span<const double> s, std::size_t n_mc,
                             std::uint64_t seed, const ShardPlan& plan = {}) {
  if (k < 2) throw InputError("local time order k must be >= 2");
  if (n < 0 || s.size() != static_cast<std::size_t>(2 * n)) throw InputError("kernel b_{2n} needs a point with 2n coordinates");
  for (double x : s)
    if (!(x >= 0.0 && x <= 1.0)) throw InputError("kernel argument must lie in [0,1]");
  if (!(min_abs(phi) > 0.0)) throw InputError("multiplier must be bounded away from zero");
  const PrefixIntegral phi_sq(multiply(phi, phi));
  return mc_simplex_integrate([&](std::span<const double> t) { return kernel_b2n_integrand(phi_sq, t, s); }, k, 0.0,
                              1.0, n_mc, seed, plan);
}

/// sum_{i,j} |[t_i, t_{i+1}] n [t'_j, t'_{j+1}]|^2 / (Delta_i Delta'_j); empty cells contribute 0.
inline double overlap_kernel(std::span<const double> t, std::span<const double> tp) {
  if (t.size() != tp.size()) throw InputError("overlap kernel needs tuples of the same order");
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < t.size(); ++i) {
    const double d = t[i + 1] - t[i];
    if (!(d > 0.0)) continue;
    for (std::size_t j = 0; j + 1 < tp.size(); ++j) {
      const double dp = tp[j + 1] - tp[j];
      if (!(dp > 0.0)) continue;
      const double o = std::max(0.0, std::min(t[i + 1], tp[j + 1]) - std::max(t[i], tp[j]));
      s += o * o / (d * dp);
    }
  }
  return s;
}

/// (2n)! / (n!^2 4^n (2 pi)^{k-1}).
inline double series_coefficient(int n, int k) {
  double r = 1.0;
  for (int j = 0; j < n; ++j) r *= (2.0 * j + 1.0) / (2.0 * j + 2.0);
  return r * std::pow(kTwoPi, -(k - 1));
}

struct SeriesTerm {
  int n = 0;
  double value = 0.0;
  double std_error = 0.0;
  double cumulative = 0.0;
  double tail_diagnostic = 0.0;  // n^{5/2} * value
  double weighted_partial = 0.0;  // sum_{m <= n} m * term_m
};

struct ChaosSeriesReport {
  int k = 2;
  std::vector<SeriesTerm> terms;  // terms[0] is (E T_k^w)^2
  MCEstimate direct;              // (2 pi)^{-(k-1)} \int G^{-1/2} on the same samples
  MCEstimate direct_minus_series; // direct - partial sum at N, on the same samples
  std::size_t n_samples = 0;
  std::uint64_t seed = 0;
};

/// Terms of the chaos series for E (T_k^w)^2, all estimated on one set of
/// simplex pairs (powers of the same overlap value).
inline ChaosSeriesReport second_moment_series(int k, int n_terms, std::size_t n_mc, std::uint64_t seed,
                                              const ShardPlan& plan = {}) {
  if (k < 2) throw InputError("local time order k must be >= 2");
  if (n_terms < 1) throw InputError("series needs at least one term");
  const std::size_t N = static_cast<std::size_t>(n_terms);
  std::vector<double> coef(N + 1);
  for (std::size_t n = 0; n <= N; ++n) coef[n] = series_coefficient(static_cast<int>(n), k);
  const double vol2 = std::pow(simplex_volume(k, 0.0, 1.0), 2);
  const OperatorSpec wiener = Identity{};
  const std::array<double, 2> zero_eps{0.0, 0.0};
  const auto acc = run_sharded(n_mc, plan, MultiAccumulator(N + 2),
                               [&](std::size_t s, std::size_t, std::size_t count, MultiAccumulator& part) {
                                 Engine rng = make_stream(seed, s);
                                 std::vector<double> t(static_cast<std::size_t>(2 * k)), row(N + 2);
                                 for (std::size_t i = 0; i < count; ++i) {
                                   auto a = std::span<double>(t.data(), static_cast<std::size_t>(k));
                                   auto b = std::span<double>(t.data() + k, static_cast<std::size_t>(k));
                                   sample_simplex_into(a, 0.0, 1.0, rng);
                                   sample_simplex_into(b, 0.0, 1.0, rng);
                                   double gaps = 1.0;
                                   for (int j = 0; j + 1 < k; ++j) gaps *= (a[j + 1] - a[j]) * (b[j + 1] - b[j]);
                                   const double base = 1.0 / std::sqrt(gaps);
                                   const double rho = overlap_kernel(a, b);
                                   double pw = 1.0, partial = coef[0] * base;
                                   for (std::size_t n = 1; n <= N; ++n) {
                                     pw *= rho;
                                     row[n - 1] = coef[n] * pw * base;
                                     partial += row[n - 1];
                                   }
                                   const double direct = smoothed_moment_integrand(wiener, std::span<const double>(t), k, zero_eps);
                                   row[N] = direct;
                                   row[N + 1] = direct - partial;
                                   if (!(gaps > 0.0)) std::fill(row.begin(), row.end(), INFINITY);
                                   part.add(row);
                                 }
                               });
  ChaosSeriesReport out;
  out.k = k;
  out.seed = seed;
  out.n_samples = acc[0].count();
  const double m = mean_T_wiener(k);
  SeriesTerm t0{0, m * m, 0.0, m * m, 0.0, 0.0};
  out.terms.push_back(t0);
  double cum = m * m, weighted = 0.0;
  for (std::size_t n = 1; n <= N; ++n) {
    const MCEstimate e = to_estimate(acc[n - 1], seed, vol2);
    cum += e.mean;
    weighted += static_cast<double>(n) * e.mean;
    out.terms.push_back({static_cast<int>(n), e.mean, e.std_error, cum,
                         std::pow(static_cast<double>(n), 2.5) * e.mean, weighted});
  }
  out.direct = to_estimate(acc[N], seed, vol2);
  out.direct_minus_series = to_estimate(acc[N + 1], seed, vol2);
  return out;
}

inline void write_series_csv(std::ostream& os, const ChaosSeriesReport& r) {
  os << "n,term,stderr,cumsum,n52_term,seed\n";
  os.precision(12);
  for (const auto& t : r.terms)
    os << t.n << ',' << t.value << ',' << t.std_error << ',' << t.cumulative << ',' << t.tail_diagnostic << ','
       << r.seed << '\n';
}

struct StirlingRow {
  int n = 0;
  double ratio = 0.0;  // (2n)! / (n! 2^n)^2
  bool holds = false;  // ratio <= n^{-1/2}, decided exactly
};

/// Evaluates (2n)! / (n! 2^n)^2 exactly with r_{n+1} = r_n (2n+1)/(2n+2) and
/// checks r_n^2 n <= 1 in rational arithmetic.
inline std::vector<StirlingRow> stirling_ratio_check(int n_max) {
  if (n_max < 1) throw InputError("stirling check needs n_max >= 1");
  using boost::multiprecision::cpp_rational;
  std::vector<StirlingRow> out;
  cpp_rational r = 1;
  for (int n = 1; n <= n_max; ++n) {
    r *= cpp_rational(2 * n - 1, 2 * n);
    out.push_back({n, static_cast<double>(r), r * r * n <= 1});
  }
  return out;
}

}  // namespace silt
