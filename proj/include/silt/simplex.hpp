#pragma once

// Monte Carlo integration over the ordered simplex
//   Delta_k(a, b) = {a <= t_1 <= ... <= t_k <= b}
// and the closed-form integral of prod (t_{i+1} - t_i)^{-1/2} over it.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

#include "silt/error.hpp"
#include "silt/monte_carlo.hpp"
#include "silt/quadrature.hpp"
#include "silt/special.hpp"

namespace silt {

struct SimplexTuple {
  std::vector<double> times;
  int k() const { return static_cast<int>(times.size()); }
};

/// Fills `out` with k sorted uniforms on [a, b].
inline void sample_simplex_into(std::span<double> out, double a, double b, Engine& rng) {
  for (double& t : out) t = a + (b - a) * uniform01(rng);
  std::sort(out.begin(), out.end());
}

inline SimplexTuple sample_simplex(int k, double a, double b, Engine& rng) {
  if (k < 1) throw InputError("simplex order must be >= 1");
  if (!(a < b)) throw InputError("simplex needs a < b");
  SimplexTuple t{std::vector<double>(static_cast<std::size_t>(k))};
  sample_simplex_into(t.times, a, b, rng);
  return t;
}

inline double simplex_volume(int k, double a, double b) { return std::pow(b - a, k) / std::tgamma(k + 1.0); }

/// Estimate of \int_{Delta_k(a,b)} f from n uniform ordered samples.
/// f receives the sorted times as std::span<const double>. Non-finite values
/// are rejected and counted; the estimate carries the rejection fraction.
template <class F>
MCEstimate mc_simplex_integrate(F&& f, int k, double a, double b, std::size_t n, std::uint64_t seed,
                                const ShardPlan& plan = {}) {
  if (k < 1) throw InputError("simplex order must be >= 1");
  if (!(a < b)) throw InputError("simplex needs a < b");
  if (n < 2) throw InputError("Monte Carlo needs at least 2 samples");
  const Accumulator acc = run_sharded(n, plan, Accumulator{}, [&](std::size_t s, std::size_t, std::size_t count, Accumulator& part) {
    Engine rng = make_stream(seed, s);
    std::vector<double> t(static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < count; ++i) {
      sample_simplex_into(t, a, b, rng);
      part.add(f(std::span<const double>(t)));
    }
  });
  return to_estimate(acc, seed, simplex_volume(k, a, b));
}

/// Same integral with the first uniform coordinate stratified into `strata`
/// equal bins (valid because sorting makes the integrand symmetric in the
/// underlying uniforms). n is split evenly over strata.
template <class F>
MCEstimate mc_simplex_integrate_stratified(F&& f, int k, double a, double b, std::size_t n, std::size_t strata,
                                           std::uint64_t seed, const ShardPlan& plan = {}) {
  if (k < 1) throw InputError("simplex order must be >= 1");
  if (!(a < b)) throw InputError("simplex needs a < b");
  if (strata < 1 || n < 2 * strata) throw InputError("stratified Monte Carlo needs at least 2 samples per stratum");
  const std::size_t per = n / strata;
  struct Strata {
    std::vector<Accumulator> parts;
    void merge(const Strata& o) {
      for (std::size_t i = 0; i < parts.size(); ++i) parts[i].merge(o.parts[i]);
    }
  };
  const Strata acc = run_sharded(strata * per, plan, Strata{std::vector<Accumulator>(strata)},
                                 [&](std::size_t s, std::size_t first, std::size_t count, Strata& part) {
                                   Engine rng = make_stream(seed, s);
                                   std::vector<double> t(static_cast<std::size_t>(k));
                                   for (std::size_t i = first; i < first + count; ++i) {
                                     const std::size_t bin = i / per;
                                     t[0] = (static_cast<double>(bin) + uniform01(rng)) / static_cast<double>(strata);
                                     for (std::size_t j = 1; j < t.size(); ++j) t[j] = uniform01(rng);
                                     for (double& x : t) x = a + (b - a) * x;
                                     std::sort(t.begin(), t.end());
                                     part.parts[bin].add(f(std::span<const double>(t)));
                                   }
                                 });
  double mean = 0.0, var = 0.0;
  std::size_t used = 0, rejected = 0;
  const double S = static_cast<double>(strata);
  for (const auto& p : acc.parts) {
    mean += p.mean() / S;
    var += p.variance() / (static_cast<double>(std::max<std::size_t>(p.count(), 1)) * S * S);
    used += p.count();
    rejected += p.rejected();
  }
  return MCEstimate{mean, std::sqrt(var), used, rejected, seed}.scaled(simplex_volume(k, a, b));
}

/// \int_{Delta_k(a,b)} prod_{i<k} (t_{i+1} - t_i)^{-1/2} dt
///   = pi^{(k-1)/2} (b-a)^{(k+1)/2} / Gamma((k+3)/2).
inline double dyson_closed_form(int k, double a, double b) {
  if (k < 1) throw InputError("simplex order must be >= 1");
  if (!(a <= b)) throw InputError("dyson integral needs a <= b");
  return std::pow(std::numbers::pi, 0.5 * (k - 1)) * std::pow(b - a, 0.5 * (k + 1)) / gamma_fn(0.5 * (k + 3));
}

/// Integrand of the Dyson integral; infinite on the diagonal.
inline double inverse_sqrt_gaps(std::span<const double> t) {
  double p = 1.0;
  for (std::size_t i = 0; i + 1 < t.size(); ++i) p *= t[i + 1] - t[i];
  return 1.0 / std::sqrt(p);
}

/// H_k(t) = \int_{Delta_k(a,t)} dt / sqrt((t - t_k) prod (t_{i+1} - t_i))
///        = (t-a)^{k/2} pi^{k/2} / Gamma((k+2)/2).
inline double h_closed(int k, double t, double a) {
  return std::pow(t - a, 0.5 * k) * std::pow(std::numbers::pi, 0.5 * k) / gamma_fn(0.5 * (k + 2));
}

struct RecursionCheck {
  double closed = 0.0;
  double recursed = 0.0;
};

/// Compares H_k in closed form with \int_a^t H_{k-1}(u) / sqrt(t-u) du
/// evaluated by adaptive quadrature (after u = t - v^2 removes the endpoint singularity).
inline RecursionCheck h_recursion_check(int k, double t, double a) {
  if (k < 2) throw InputError("recursion check needs k >= 2");
  if (!(t > a)) throw InputError("recursion check needs t > a");
  const double top = std::sqrt(t - a);
  const auto r = quad::integrate([&](double v) { return 2.0 * h_closed(k - 1, std::max(a, t - v * v), a); }, 0.0, top,
                                 {1e-13, 1e-12, 4000});
  return {h_closed(k, t, a), r.value};
}

}  // namespace silt
