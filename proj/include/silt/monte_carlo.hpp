#pragma once

// Reproducible sharded Monte Carlo.
//
// Every random draw comes from a stream keyed by (master seed, stream index).
// Work is split into a fixed number of shards; shard s owns stream s (or, for
// path experiments, one stream per path). Shard results are merged in shard
// order, so the output depends on (seed, shard count) only, never on the number
// of worker threads.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <thread>
#include <vector>

namespace silt {

using Engine = std::mt19937_64;

inline Engine make_stream(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                    0x5117u};
  return Engine(seq);
}

inline double uniform01(Engine& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

/// Running mean/variance (Welford) with rejection bookkeeping and a
/// pairwise merge (Chan et al.).
class Accumulator {
 public:
  void add(double x) {
    if (!std::isfinite(x)) {
      ++rejected_;
      return;
    }
    ++n_;
    const double d = x - mean_;
    mean_ += d / static_cast<double>(n_);
    m2_ += d * (x - mean_);
  }

  void reject() { ++rejected_; }

  void merge(const Accumulator& o) {
    rejected_ += o.rejected_;
    if (o.n_ == 0) return;
    if (n_ == 0) {
      n_ = o.n_;
      mean_ = o.mean_;
      m2_ = o.m2_;
      return;
    }
    const double na = static_cast<double>(n_), nb = static_cast<double>(o.n_);
    const double d = o.mean_ - mean_;
    const double n = na + nb;
    mean_ += d * nb / n;
    m2_ += o.m2_ + d * d * na * nb / n;
    n_ += o.n_;
  }

  std::size_t count() const { return n_; }
  std::size_t rejected() const { return rejected_; }
  double mean() const { return mean_; }
  double variance() const { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
  double std_error() const { return n_ > 1 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0; }

 private:
  std::size_t n_ = 0;
  std::size_t rejected_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

struct MCEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t n_samples = 0;
  std::size_t n_rejected = 0;
  std::uint64_t seed = 0;

  double rejection_fraction() const {
    const auto total = n_samples + n_rejected;
    return total ? static_cast<double>(n_rejected) / static_cast<double>(total) : 0.0;
  }
  bool integrability_warning() const { return rejection_fraction() > 0.01; }

  /// Scales mean and standard error (e.g. by a simplex volume).
  MCEstimate scaled(double c) const {
    MCEstimate r = *this;
    r.mean *= c;
    r.std_error *= std::abs(c);
    return r;
  }
};

inline MCEstimate to_estimate(const Accumulator& acc, std::uint64_t seed, double scale = 1.0) {
  return MCEstimate{acc.mean(), acc.std_error(), acc.count(), acc.rejected(), seed}.scaled(scale);
}

/// |a - b| measured in combined standard errors.
inline double z_score(const MCEstimate& a, const MCEstimate& b) {
  const double s = std::hypot(a.std_error, b.std_error);
  return s > 0.0 ? std::abs(a.mean - b.mean) / s : (a.mean == b.mean ? 0.0 : INFINITY);
}

struct ShardPlan {
  std::size_t shards = 8;
  unsigned threads = 0;  // 0: hardware concurrency

  unsigned worker_count() const {
    const unsigned hw = threads ? threads : std::max(1u, std::thread::hardware_concurrency());
    return static_cast<unsigned>(std::min<std::size_t>(hw, std::max<std::size_t>(shards, 1)));
  }
};

/// Runs `body(shard_index, first_item, item_count, acc)` over `n_items` split
/// into plan.shards contiguous blocks and merges the per-shard accumulators in
/// shard order. `Acc` needs a `merge(const Acc&)`.
template <class Acc, class Body>
Acc run_sharded(std::size_t n_items, const ShardPlan& plan, const Acc& prototype, Body&& body) {
  const std::size_t shards = std::max<std::size_t>(1, std::min(plan.shards, std::max<std::size_t>(n_items, 1)));
  std::vector<Acc> parts(shards, prototype);
  auto run_one = [&](std::size_t s) {
    const std::size_t base = n_items / shards, extra = n_items % shards;
    const std::size_t first = s * base + std::min(s, extra);
    const std::size_t count = base + (s < extra ? 1 : 0);
    body(s, first, count, parts[s]);
  };
  const unsigned workers = plan.worker_count();
  if (workers <= 1) {
    for (std::size_t s = 0; s < shards; ++s) run_one(s);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        for (std::size_t s = w; s < shards; s += workers) run_one(s);
      });
    for (auto& t : pool) t.join();
  }
  Acc out = prototype;
  for (const auto& p : parts) out.merge(p);
  return out;
}

/// A fixed-size bundle of accumulators fed from the same samples.
class MultiAccumulator {
 public:
  explicit MultiAccumulator(std::size_t dim = 0) : parts_(dim) {}
  void add(std::span<const double> xs) {
    for (std::size_t i = 0; i < parts_.size(); ++i) parts_[i].add(xs[i]);
  }
  void merge(const MultiAccumulator& o) {
    for (std::size_t i = 0; i < parts_.size(); ++i) parts_[i].merge(o.parts_[i]);
  }
  const Accumulator& operator[](std::size_t i) const { return parts_[i]; }
  std::size_t size() const { return parts_.size(); }

 private:
  std::vector<Accumulator> parts_;
};

}  // namespace silt
