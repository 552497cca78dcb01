#pragma once

// Randomized sweeps of the deterministic Gram and transform identities.
// Shared by the gram-checks / clark-delta experiments and the test suite.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "silt/clark.hpp"
#include "silt/function_space.hpp"
#include "silt/gram.hpp"
#include "silt/monte_carlo.hpp"
#include "silt/operators.hpp"

namespace silt {

struct SweepReport {
  std::size_t cases = 0;
  std::size_t failures = 0;
  /// Largest violation, in the units of each check's tolerance test (<= 0 when all pass).
  double worst = -INFINITY;

  bool passed() const { return cases > 0 && failures == 0; }
  void record(double violation) {
    ++cases;
    worst = std::max(worst, violation);
    if (violation > 0.0) ++failures;
  }
};

/// Step function with 1..max_cells cells, random breakpoints and values drawn by `value`.
template <class V>
StepFunction random_step_function(Engine& rng, std::size_t max_cells, V&& value) {
  std::uniform_int_distribution<std::size_t> cells(1, max_cells);
  const std::size_t c = cells(rng);
  std::vector<double> cuts;
  while (cuts.size() + 1 < c) {
    const double u = uniform01(rng);
    if (u > 0.0 && std::find(cuts.begin(), cuts.end(), u) == cuts.end()) cuts.push_back(u);
  }
  std::sort(cuts.begin(), cuts.end());
  std::vector<double> breaks{0.0};
  breaks.insert(breaks.end(), cuts.begin(), cuts.end());
  breaks.push_back(1.0);
  std::vector<double> values(c);
  for (double& v : values) v = value(rng);
  return StepFunction(std::move(breaks), std::move(values));
}

inline StepFunction random_step_function(Engine& rng, std::size_t max_cells = 6) {
  return random_step_function(rng, max_cells, [](Engine& r) { return std::normal_distribution<double>(0.0, 1.0)(r); });
}

inline Interval random_interval(Engine& rng) {
  double a = uniform01(rng), b = uniform01(rng);
  if (a > b) std::swap(a, b);
  return Interval(a, b);
}

/// Cavalieri identity G((I-P)g) = G(g, e) on random bases (dimension 0..3) and families (1..4).
inline SweepReport cavalieri_sweep(std::size_t cases, std::uint64_t seed) {
  SweepReport rep;
  Engine rng = make_stream(seed, 1);
  std::uniform_int_distribution<int> basis_dim(0, 3), fam(1, 4);
  for (std::size_t c = 0; c < cases; ++c) {
    std::vector<Function> basis;
    const int m = basis_dim(rng);
    if (m > 0) {
      std::vector<Function> raw;
      for (int i = 0; i < m; ++i) raw.emplace_back(random_step_function(rng));
      basis = orthonormalize(raw);
    }
    std::vector<Function> gs;
    const int g = fam(rng);
    for (int i = 0; i < g; ++i) gs.emplace_back(random_step_function(rng));
    const TwoSides ts = cavalieri_both_sides(basis, gs);
    rep.record(std::abs(ts.lhs - ts.rhs) - 1e-10 * std::max(1.0, std::abs(ts.rhs)));
  }
  return rep;
}

/// Indicator lower bound det G(1_D) >= prod |D_k \ union_{j<k} D_j| on random interval families (n <= 5).
inline SweepReport indicator_bound_sweep(std::size_t cases, std::uint64_t seed) {
  SweepReport rep;
  Engine rng = make_stream(seed, 2);
  std::uniform_int_distribution<int> size(1, 5);
  for (std::size_t c = 0; c < cases; ++c) {
    std::vector<Interval> sets;
    const int n = size(rng);
    for (int i = 0; i < n; ++i) sets.push_back(random_interval(rng));
    const DetBound db = indicator_gram_lower_bound(sets);
    rep.record(db.bound - 1e-12 - db.det);
  }
  return rep;
}

/// Invertible-operator bound for multiplication by a random step phi with
/// 0.5 <= |phi| <= 2: m^{2n} G(f) <= G(phi f) <= M^{2n} G(f), n <= 4.
inline SweepReport multiplication_bound_sweep(std::size_t cases, std::uint64_t seed) {
  SweepReport rep;
  Engine rng = make_stream(seed, 3);
  std::uniform_int_distribution<int> size(1, 4);
  std::uniform_real_distribution<double> mag(0.5, 2.0);
  std::bernoulli_distribution sign(0.5);
  for (std::size_t c = 0; c < cases; ++c) {
    const StepFunction phi = random_step_function(rng, 6, [&](Engine& r) { return (sign(r) ? -1.0 : 1.0) * mag(r); });
    const OperatorSpec A = make_multiplication(Function(phi));
    const OperatorBounds b = bounds(A);
    std::vector<Function> fs;
    const int n = size(rng);
    for (int i = 0; i < n; ++i) fs.emplace_back(random_step_function(rng));
    const DetBound lower = invertible_operator_bound(A, fs);
    const double base = gram_det(fs);
    const double upper = std::pow(b.M, 2.0 * n) * base;
    const double tol = 1e-12 * std::max(1.0, upper);
    rep.record(std::max(lower.bound - lower.det, lower.det - upper) - tol);
  }
  return rep;
}

/// Newton-Leibniz identity for p_{t-s}(int_s^t h) on random step h and 0 <= s < t <= 1.
inline SweepReport clark_delta_sweep(std::size_t cases, std::uint64_t seed, double tol = 1e-6) {
  SweepReport rep;
  Engine rng = make_stream(seed, 4);
  for (std::size_t c = 0; c < cases; ++c) {
    const Function h = random_step_function(rng);
    Interval st = random_interval(rng);
    while (st.length() < 1e-3) st = random_interval(rng);
    const TwoSides ts = clark_delta_fw_check(h, st.lo, st.hi);
    rep.record(std::abs(ts.lhs - ts.rhs) - tol);
  }
  return rep;
}

}  // namespace silt
