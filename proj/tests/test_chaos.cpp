#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "silt/chaos.hpp"

using namespace silt;

namespace {

constexpr double kTwoPiD = 2.0 * std::numbers::pi;

double combined_se(const MCEstimate& a, const MCEstimate& b) { return std::hypot(a.std_error, b.std_error); }

}  // namespace

TEST(FwTransformQuad, ZeroDirectionIsMean) {
  const Function h0 = StepFunction::constant(0.0);
  for (int k : {2, 3}) {
    const MCEstimate e = fw_transform_quad(Identity{}, k, h0, 200000, 101);
    EXPECT_LT(std::abs(e.mean - mean_T_wiener(k)), 4 * e.std_error) << "k=" << k;
  }
  const MCEstimate b = fw_transform_quad(parse_operator("bridge"), 2, h0, 200000, 102);
  const MCEstimate m = mean_T_eps(parse_operator("bridge"), 2, 0.0, 200000, 103);
  EXPECT_LT(std::abs(b.mean - m.mean), 4 * combined_se(b, m));
}

TEST(FwTransformQuad, WienerConstantDirectionMatchesIteratedIntegral) {
  // ||P h||^2 = t_2 - t_1 for h = 1
  const double o =
      oracle::integrate_triangle([](double, double d) { return std::exp(-0.5 * d) / std::sqrt(kTwoPiD * d); }, 0.0, 1.0);
  const MCEstimate e = fw_transform_quad(Identity{}, 2, StepFunction::constant(1.0), 400000, 104);
  EXPECT_LT(std::abs(e.mean - o), 3 * e.std_error);
}

TEST(FwTransformQuad, BoundedByMeanOnSharedSamples) {
  const OperatorSpec ops[] = {Identity{}, parse_operator("bridge"), parse_operator("mult:affine:1,1", 64)};
  const Function hs[] = {StepFunction::constant(1.0), GridFunction::sample(64, [](double r) { return 3 * std::sin(7 * r); }),
                         indicator(Interval(0.2, 0.5))};
  for (const auto& A : ops) {
    const double mean = fw_transform_quad(A, 2, StepFunction::constant(0.0), 20000, 105).mean;
    for (const auto& h : hs) EXPECT_LE(fw_transform_quad(A, 2, h, 20000, 105).mean, mean) << to_string(A);
  }
}

TEST(FwTransformMc, ZeroDirectionIsPathMean) {
  const EpsSchedule sched({0.1, 0.05});
  const GridFunction h0 = GridFunction::sample(64, [](double) { return 0.0; });
  const PathTransformReport t = fw_transform_mc(Identity{}, 2, h0, sched, 64, 500, 106);
  const PathMeanReport m = path_mean_T_eps(Identity{}, 2, sched, 64, 500, 106);
  for (std::size_t i = 0; i < 2; ++i) EXPECT_DOUBLE_EQ(t.per_eps[i].mean, m.per_eps[i].mean);
  EXPECT_DOUBLE_EQ(t.exponential_mean.mean, 1.0);
}

TEST(FwTransformMc, ExponentialFactorHasUnitMean) {
  const GridFunction h = GridFunction::sample(64, [](double r) { return 1.0 + r; });
  const PathTransformReport t = fw_transform_mc(parse_operator("bridge"), 2, h, EpsSchedule({0.1}), 64, 20000, 107);
  EXPECT_LT(std::abs(t.exponential_mean.mean - 1.0), 4 * t.exponential_mean.std_error);
}

TEST(FwTransformMc, AgreesWithQuadratureAfterExtrapolation) {
  const std::size_t n = 256;
  const GridFunction h = GridFunction::sample(n, [](double r) { return std::sin(2 * std::numbers::pi * r); });
  const EpsSchedule sched({0.1, 0.05, 0.02});
  const PathTransformReport mc = fw_transform_mc(Identity{}, 2, h, sched, n, 4000, 108);
  const MCEstimate q = fw_transform_quad(Identity{}, 2, h, 400000, 109);
  EXPECT_LT(std::abs(mc.extrapolated.mean - q.mean), 3 * combined_se(mc.extrapolated, q));
}

TEST(FwTransformMc, RejectsResolutionMismatch) {
  const GridFunction h = GridFunction::sample(32, [](double) { return 1.0; });
  EXPECT_THROW(fw_transform_mc(Identity{}, 2, h, EpsSchedule({0.1}), 64, 10, 1), ResolutionError);
}

TEST(KernelB2n, OrderZeroIsMeanIntegrand) {
  const MCEstimate b0 = kernel_b2n(StepFunction::constant(1.0), 2, 0, {}, 200000, 110);
  EXPECT_LT(std::abs(b0.mean - 4.0 / 3.0), 4 * b0.std_error);
  const MCEstimate b3 = kernel_b2n(StepFunction::constant(1.0), 3, 0, {}, 200000, 111);
  EXPECT_LT(std::abs(b3.mean / kTwoPiD - mean_T_wiener(3)), 4 * b3.std_error / kTwoPiD);
}

TEST(KernelB2n, UnitMultiplierOrderOneMatchesQuadrature) {
  // b_2(s) = \int_0^{s1} \int_{s2}^1 (t2 - t1)^{-3/2} dt2 dt1
  Engine rng = make_stream(112, 0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int c = 0; c < 10; ++c) {
    const double s1 = 0.05 + 0.4 * u(rng), s2 = s1 + 0.1 + (0.9 - s1) * u(rng);
    const double o = oracle::integrate_smooth(
        [&](double t1) {
          return oracle::integrate_smooth([&](double t2) { return std::pow(t2 - t1, -1.5); }, s2, 1.0);
        },
        0.0, s1);
    const double s[2] = {s1, s2};
    const MCEstimate b = kernel_b2n(StepFunction::constant(1.0), 2, 1, s, 200000, 113 + c);
    EXPECT_LT(std::abs(b.mean - o), 4 * b.std_error) << "s=(" << s1 << "," << s2 << ")";
  }
}

TEST(KernelB2n, ConstantMultiplierScalesExactly) {
  const double s[4] = {0.1, 0.3, 0.5, 0.6};
  const double c = 1.7;
  for (int n : {0, 1, 2}) {
    const std::span<const double> sp(s, static_cast<std::size_t>(2 * n));
    const MCEstimate one = kernel_b2n(StepFunction::constant(1.0), 3, n, sp, 20000, 114);
    const MCEstimate sc = kernel_b2n(StepFunction::constant(c), 3, n, sp, 20000, 114);
    EXPECT_NEAR(sc.mean, one.mean * std::pow(c, -2 - 2 * n), 1e-12 * one.mean) << "n=" << n;
  }
}

TEST(KernelB2n, UnitMassIntegrandIsWienerKernel) {
  // phi = 1: prod Delta_i^{-1/2} prod_j sum_i 1{pair j in cell i} / Delta_i
  Engine rng = make_stream(115, 0);
  const PrefixIntegral unit(StepFunction::constant(1.0));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int c = 0; c < 100; ++c) {
    std::vector<double> t(3), s(4);
    sample_simplex_into(t, 0.0, 1.0, rng);
    for (double& x : s) x = u(rng);
    const double d0 = t[1] - t[0], d1 = t[2] - t[1];
    double expected = 1.0 / std::sqrt(d0 * d1);
    for (int j = 0; j < 2; ++j) {
      const double lo = std::min(s[2 * j], s[2 * j + 1]), hi = std::max(s[2 * j], s[2 * j + 1]);
      expected *= (t[0] <= lo && hi <= t[1] ? 1 / d0 : 0.0) + (t[1] <= lo && hi <= t[2] ? 1 / d1 : 0.0);
    }
    EXPECT_NEAR(kernel_b2n_integrand(unit, t, s), expected, 1e-12 * std::max(1.0, expected));
  }
}

TEST(KernelB2n, NonNegative) {
  Engine rng = make_stream(116, 0);
  const PrefixIntegral sq(GridFunction::sample(32, [](double r) { return (1 + r) * (1 + r); }));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int c = 0; c < 500; ++c) {
    std::vector<double> t(4), s(4);
    sample_simplex_into(t, 0.0, 1.0, rng);
    for (double& x : s) x = u(rng);
    EXPECT_GE(kernel_b2n_integrand(sq, t, s), 0.0);
  }
}

TEST(KernelB2n, RejectsBadInput) {
  const double s[2] = {0.2, 1.5};
  EXPECT_THROW(kernel_b2n(StepFunction::constant(1.0), 2, 1, s, 10, 1), InputError);
  EXPECT_THROW(kernel_b2n(StepFunction::constant(1.0), 2, 2, s, 10, 1), InputError);
  EXPECT_THROW(kernel_b2n(StepFunction::constant(0.0), 2, 0, {}, 10, 1), InputError);
}

TEST(OverlapKernel, Examples) {
  const std::vector<double> a{0.0, 1.0}, b{0.0, 0.5};
  EXPECT_DOUBLE_EQ(overlap_kernel(a, b), 0.5);
  const std::vector<double> t{0.1, 0.3, 0.8};
  EXPECT_NEAR(overlap_kernel(t, t), 2.0, 1e-15);
  const std::vector<double> t4{0.0, 0.2, 0.5, 0.9};
  EXPECT_NEAR(overlap_kernel(t4, t4), 3.0, 1e-15);
  const std::vector<double> x{0.0, 0.3}, y{0.5, 0.9};
  EXPECT_EQ(overlap_kernel(x, y), 0.0);
  EXPECT_THROW(overlap_kernel(x, t), InputError);
}

TEST(OverlapKernel, RangeOnRandomTuples) {
  Engine rng = make_stream(117, 0);
  for (int c = 0; c < 1000; ++c) {
    const int k = 2 + c % 4;
    std::vector<double> t(static_cast<std::size_t>(k)), tp(static_cast<std::size_t>(k));
    sample_simplex_into(t, 0.0, 1.0, rng);
    sample_simplex_into(tp, 0.0, 1.0, rng);
    const double v = overlap_kernel(t, tp);
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, k - 1 + 1e-12);
    EXPECT_NEAR(v, overlap_kernel(tp, t), 1e-13);
  }
}

TEST(SeriesCoefficient, Values) {
  EXPECT_NEAR(series_coefficient(1, 2), 1.0 / (4.0 * std::numbers::pi), 1e-16);
  EXPECT_NEAR(series_coefficient(0, 3), 1.0 / (kTwoPiD * kTwoPiD), 1e-16);
  // (2n)! / (n!^2 4^n) at n = 3: 720 / (36 * 64)
  EXPECT_NEAR(series_coefficient(3, 2), 720.0 / (36.0 * 64.0) / kTwoPiD, 1e-16);
}

TEST(SecondMomentSeries, TermsPositiveAndCumulativeNondecreasing) {
  const ChaosSeriesReport r = second_moment_series(2, 50, 200000, 118);
  ASSERT_EQ(r.terms.size(), 51u);
  EXPECT_NEAR(r.terms[0].value, mean_T_wiener(2) * mean_T_wiener(2), 1e-15);
  for (std::size_t n = 1; n < r.terms.size(); ++n) {
    EXPECT_GT(r.terms[n].value, 0.0);
    EXPECT_GE(r.terms[n].cumulative, r.terms[n - 1].cumulative);
  }
}

TEST(SecondMomentSeries, PartialSumNearDirectMoment) {
  const ChaosSeriesReport r = second_moment_series(2, 50, 200000, 119);
  const double partial = r.terms.back().cumulative;
  EXPECT_LT(std::abs(partial - r.direct.mean), 0.01 * r.direct.mean);
  const double zero[2] = {0.0, 0.0};
  const MCEstimate d = moment_smoothed(Identity{}, 2, 1, zero, 200000, 120);
  EXPECT_LT(std::abs(partial - d.mean), 0.01 * d.mean + 4 * d.std_error);
}

TEST(SecondMomentSeries, WeightedSumsSettle) {
  const ChaosSeriesReport r = second_moment_series(2, 50, 200000, 121);
  // sums of n * term_n over blocks of doubling length shrink
  auto block = [&](int a, int b) { return r.terms[b].weighted_partial - r.terms[a - 1].weighted_partial; };
  const double blocks[] = {block(4, 6), block(7, 12), block(13, 25), block(26, 50)};
  for (int i = 1; i < 4; ++i) {
    EXPECT_GT(blocks[i], 0.0);
    EXPECT_LT(blocks[i], blocks[i - 1]) << "block " << i;
  }
}

TEST(SecondMomentSeries, DeterministicAcrossThreads) {
  const ChaosSeriesReport a = second_moment_series(2, 10, 20000, 122, ShardPlan{4, 1});
  const ChaosSeriesReport b = second_moment_series(2, 10, 20000, 122, ShardPlan{4, 2});
  for (std::size_t n = 0; n < a.terms.size(); ++n) EXPECT_EQ(a.terms[n].value, b.terms[n].value);
}

TEST(WriteSeriesCsv, HeaderAndRows) {
  const ChaosSeriesReport r = second_moment_series(2, 3, 1000, 123);
  std::ostringstream os;
  write_series_csv(os, r);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "n,term,stderr,cumsum,n52_term,seed");
  int rows = 0;
  while (std::getline(is, line)) ++rows;
  EXPECT_EQ(rows, 4);
}

TEST(StirlingRatio, Examples) {
  const auto rows = stirling_ratio_check(4);
  EXPECT_DOUBLE_EQ(rows[0].ratio, 0.5);
  EXPECT_DOUBLE_EQ(rows[3].ratio, 40320.0 / 147456.0);
  EXPECT_TRUE(rows[0].holds);
  EXPECT_TRUE(rows[3].holds);
}

TEST(StirlingRatio, HoldsAndDecreasesUpTo200) {
  const auto rows = stirling_ratio_check(200);
  ASSERT_EQ(rows.size(), 200u);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_TRUE(rows[i].holds) << "n=" << rows[i].n;
    EXPECT_LE(rows[i].ratio, 1.0 / std::sqrt(static_cast<double>(rows[i].n)));
    if (i > 0) {
      EXPECT_LT(rows[i].ratio, rows[i - 1].ratio);
    }
  }
  EXPECT_THROW(stirling_ratio_check(0), InputError);
}
