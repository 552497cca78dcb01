#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "oracles.hpp"
#include "silt/local_time.hpp"
#include "silt/simplex.hpp"

using namespace silt;

namespace {

constexpr double kTwoPiD = 2.0 * std::numbers::pi;

double combined_se(const MCEstimate& a, const MCEstimate& b) { return std::hypot(a.std_error, b.std_error); }

}  // namespace

TEST(EstimateTEps, FlatPathOrderTwo) {
  const std::vector<double> x(65, 0.0);
  for (double eps : {0.5, 0.01, 1e-4})
    EXPECT_NEAR(estimate_T_eps(x, 2, eps), 0.5 / std::sqrt(kTwoPiD * eps), 1e-12 / std::sqrt(eps));
}

TEST(EstimateTEps, FlatPathOrderThree) {
  // product trapezoid rule of a constant over [0,1]^3, divided by 3!
  const std::vector<double> x(33, 0.0);
  const double eps = 0.1;
  EXPECT_NEAR(estimate_T_eps(x, 3, eps), 1.0 / (6.0 * kTwoPiD * eps), 1e-12);
}

TEST(EstimateTEps, ManyEpsMatchesSingle) {
  Engine rng = make_stream(81, 0);
  const PathSampler sampler(Identity{}, PathGrid(64));
  const JointSample s = sampler.sample(rng);
  const std::vector<double> eps{0.2, 0.05, 0.01};
  for (int k : {2, 3}) {
    const auto all = estimate_T_eps(s.x, k, eps);
    for (std::size_t i = 0; i < eps.size(); ++i) EXPECT_NEAR(all[i], estimate_T_eps(s.x, k, eps[i]), 1e-12 * all[i]);
  }
}

TEST(EstimateTEps, LargeEpsVanishes) {
  const JointSample s = PathSampler(Identity{}, PathGrid(32)).sample(82, 0);
  EXPECT_LT(estimate_T_eps(s, 2, 1e6), 1e-3);
  EXPECT_GT(estimate_T_eps(s, 2, 1e6), 0.0);
}

TEST(EstimateTEps, RejectsBadInput) {
  const std::vector<double> x(3, 0.0);
  EXPECT_THROW(estimate_T_eps(x, 3, 0.1), InputError);
  EXPECT_THROW(estimate_T_eps(x, 2, 0.0), InputError);
  EXPECT_THROW(estimate_T_eps(x, 1, 0.1), InputError);
}

TEST(EstimateTEps, MonotoneInEpsOnEachPath) {
  const PathSampler sampler(parse_operator("bridge"), PathGrid(64));
  for (std::uint64_t p = 0; p < 20; ++p) {
    const auto t = estimate_T_eps(sampler.sample(83, p).x, 2, std::vector<double>{0.3, 0.1, 0.03, 0.01});
    for (std::size_t i = 1; i < t.size(); ++i) EXPECT_GT(t[i], t[i - 1]);
  }
}

TEST(SimplexSum, ConstantKernelGivesVolume) {
  const std::size_t n = 10;
  const std::vector<double> kern((n + 1) * (n + 1), 1.0);
  const auto w = detail::trapezoid_weights(n);
  EXPECT_NEAR(detail::simplex_sum(kern, w, 2), 0.5, 1e-14);
  EXPECT_NEAR(detail::simplex_sum(kern, w, 3), 1.0 / 6.0, 1e-14);
  EXPECT_NEAR(detail::simplex_sum(kern, w, 4), 1.0 / 24.0, 1e-14);
}

TEST(PathMean, WienerOrderTwoNearSmoothedValue) {
  const double eps = 0.01;
  const EpsSchedule sched({eps});
  const PathMeanReport r = path_mean_T_eps(Identity{}, 2, sched, 256, 4000, 84);
  const double exact = mean_T_wiener_smoothed(eps);
  EXPECT_NEAR(r.per_eps[0].mean, exact, 0.05 * exact);
}

TEST(SmoothedIntegrand, DisjointIntervals) {
  const double t[4] = {0.1, 0.3, 0.5, 0.9};
  const double d1 = 0.2, d2 = 0.4;
  for (double eps : {0.5, 0.05, 0.001}) {
    const double e[2] = {eps, eps};
    const double expected = 1.0 / (kTwoPiD * std::sqrt(eps * eps + eps * (d1 + d2) + d1 * d2));
    EXPECT_NEAR(smoothed_moment_integrand(Identity{}, t, 2, e), expected, 1e-13 * expected);
  }
}

TEST(SmoothedIntegrand, SingleFamilyIsGaussianDensityAtZero) {
  const double t[2] = {0.2, 0.7};
  const double e = 0.1;
  EXPECT_NEAR(smoothed_moment_integrand(Identity{}, t, 2, std::span<const double>(&e, 1)),
              oracle::normal_pdf(0.0, 0.6), 1e-14);
}

TEST(SmoothedIntegrand, CoincidentFamiliesAreInfiniteWithoutSmoothing) {
  const double t[4] = {0.2, 0.7, 0.2, 0.7};
  const double e[2] = {0.0, 0.0};
  EXPECT_TRUE(std::isinf(smoothed_moment_integrand(Identity{}, t, 2, e)));
}

TEST(MixedEpsDisplay, AgreesWithDeterminantForm) {
  // The printed form attaches e1 to B11; det(diag(e1, e2) + B) attaches e1 to B22.
  // They agree with the smoothing parameters exchanged, and both give the same
  // integral over the symmetric domain.
  Engine rng = make_stream(85, 0);
  const OperatorSpec ops[] = {Identity{}, parse_operator("bridge"), parse_operator("mult:affine:1,1", 64)};
  for (int c = 0; c < 100; ++c) {
    std::vector<double> t(4);
    sample_simplex_into(std::span<double>(t.data(), 2), 0.0, 1.0, rng);
    sample_simplex_into(std::span<double>(t.data() + 2, 2), 0.0, 1.0, rng);
    const OperatorSpec& A = ops[c % 3];
    const Eigen::Matrix2d B = family_gram(A, t, 2, 2);
    const double e1 = 0.01 + 0.3 * (c % 7) / 7.0, e2 = 0.02 + 0.1 * (c % 5) / 5.0;
    const double swapped[2] = {e2, e1};
    const double det_form = smoothed_moment_integrand(Eigen::MatrixXd(B), 2, swapped);
    EXPECT_NEAR(mixed_eps_display(e1, e2, B), det_form, 1e-12 * det_form);
  }
}

TEST(MixedEpsDisplay, SameIntegralEitherAssignment) {
  const double e12[2] = {0.1, 0.02}, e21[2] = {0.02, 0.1};
  const MCEstimate a = moment_smoothed(Identity{}, 2, 1, e12, 100000, 86);
  const MCEstimate b = moment_smoothed(Identity{}, 2, 1, e21, 100000, 86);
  EXPECT_LT(std::abs(a.mean - b.mean), 4 * combined_se(a, b));
}

TEST(MeanTWiener, KnownValues) {
  EXPECT_NEAR(mean_T_wiener(2), 0.531923, 1e-6);
  EXPECT_NEAR(mean_T_wiener(3), 0.25, 1e-15);
  EXPECT_NEAR(mean_T_wiener(2), 1.0 / (std::sqrt(2.0) * boost::math::tgamma(2.5)), 1e-15);
  EXPECT_THROW(mean_T_wiener(1), InputError);
}

TEST(MeanTWiener, ConsistentWithDysonIntegral) {
  for (int k = 2; k <= 6; ++k) {
    const double via_dyson = std::pow(kTwoPiD, -0.5 * (k - 1)) * dyson_closed_form(k, 0.0, 1.0);
    EXPECT_NEAR(mean_T_wiener(k), via_dyson, 1e-13) << "k=" << k;
  }
}

TEST(MeanTWiener, SmoothedClosedFormMatchesQuadrature) {
  for (double eps : {0.0, 1e-3, 0.01, 0.3}) {
    const double o =
        oracle::integrate([&](double d) { return (1 - d) / std::sqrt(eps + d); }, 0.0, 1.0) / std::sqrt(kTwoPiD);
    EXPECT_NEAR(mean_T_wiener_smoothed(eps), o, 1e-10);
  }
  EXPECT_NEAR(mean_T_wiener_smoothed(0.0), mean_T_wiener(2), 1e-14);
}

TEST(MeanTEps, WienerMonteCarloMatchesClosedForm) {
  for (int k = 2; k <= 4; ++k) {
    const MCEstimate e = mean_T_eps(Identity{}, k, 0.0, 200000, 87 + k);
    EXPECT_LT(std::abs(e.mean - mean_T_wiener(k)), 4 * e.std_error) << "k=" << k;
  }
}

TEST(MeanTEps, DecreasingInEpsForFixedSeed) {
  double prev = INFINITY;
  for (double eps : {0.0, 0.01, 0.05, 0.2}) {
    const double m = mean_T_eps(parse_operator("bridge"), 2, eps, 50000, 91).mean;
    EXPECT_LT(m, prev);
    prev = m;
  }
}

TEST(MeanTMult, ConstantMultiplierScales) {
  for (double c : {1.0, 2.0, 0.5}) {
    const MCEstimate e = mean_T_mult(StepFunction::constant(c), 2, 200000, 92);
    const double expected = mean_T_wiener(2) / c;
    EXPECT_LT(std::abs(e.mean - expected), 4 * e.std_error) << "c=" << c;
  }
  const MCEstimate e3 = mean_T_mult(StepFunction::constant(2.0), 3, 200000, 93);
  EXPECT_LT(std::abs(e3.mean - mean_T_wiener(3) / 4.0), 4 * e3.std_error);
}

TEST(MeanTMult, AffineMultiplierMatchesIteratedIntegral) {
  // E T_2 = (2 pi)^{-1/2} \int_{s<t} (\int_s^t (1+r)^2 dr)^{-1/2}
  const double o = oracle::integrate_triangle(
                       [](double x, double d) {
                         const double u = 1 + x;
                         return 1.0 / std::sqrt(d * (3 * u * u + 3 * u * d + d * d) / 3.0);
                       },
                       0.0, 1.0) /
                   std::sqrt(kTwoPiD);
  const Function phi = GridFunction::sample(4096, [](double r) { return 1 + r; });
  const MCEstimate e = mean_T_mult(phi, 2, 400000, 94);
  EXPECT_LT(std::abs(e.mean - o), 4 * e.std_error + 1e-5);
}

TEST(PathMean, AgreesWithQuadratureAcrossVariants) {
  // Path estimates carry an O(1/n) trapezoid bias on top of MC error.
  const double eps = 0.05;
  const OperatorSpec ops[] = {Identity{}, parse_operator("bridge"), parse_operator("mult:affine:1,1", 128)};
  std::uint64_t seed = 95;
  for (const auto& A : ops) {
    const PathMeanReport r = path_mean_T_eps(A, 2, EpsSchedule({eps}), 128, 4000, seed++);
    const MCEstimate q = mean_T_eps(A, 2, eps, 200000, seed++);
    EXPECT_LT(std::abs(r.per_eps[0].mean - q.mean), 4 * combined_se(r.per_eps[0], q) + 0.01 * q.mean) << to_string(A);
  }
}

TEST(PathMean, DeterministicAcrossThreads) {
  const EpsSchedule sched({0.1, 0.05});
  const PathMeanReport a = path_mean_T_eps(Identity{}, 2, sched, 64, 400, 96, ShardPlan{4, 1});
  const PathMeanReport b = path_mean_T_eps(Identity{}, 2, sched, 64, 400, 96, ShardPlan{4, 3});
  EXPECT_EQ(a.extrapolated.mean, b.extrapolated.mean);
  EXPECT_EQ(a.per_eps[1].std_error, b.per_eps[1].std_error);
}

TEST(CauchyDifference, DecreasesAlongSchedule) {
  const double sched[] = {0.08, 0.04, 0.02, 0.01};
  double prev = INFINITY;
  for (int i = 0; i + 1 < 4; ++i) {
    const MCEstimate d = cauchy_sq_difference(Identity{}, 2, sched[i], sched[i + 1], 200000, 97);
    EXPECT_GT(d.mean, 0.0);
    EXPECT_LT(d.mean, prev);
    prev = d.mean;
  }
}

TEST(CauchyDifference, ZeroForEqualEps) {
  const MCEstimate d = cauchy_sq_difference(Identity{}, 2, 0.05, 0.05, 1000, 98);
  EXPECT_NEAR(d.mean, 0.0, 1e-12);
}

TEST(MomentSmoothed, RejectsMismatchedEps) {
  const double e[3] = {0.1, 0.1, 0.1};
  EXPECT_THROW(moment_smoothed(Identity{}, 2, 1, e, 10, 1), InputError);
  EXPECT_THROW(moment_smoothed(Identity{}, 2, 0, std::span<const double>(e, 0), 10, 1), InputError);
}

TEST(EpsSchedule, Validation) {
  EXPECT_THROW(EpsSchedule(std::vector<double>{}), InputError);
  EXPECT_THROW(EpsSchedule({0.1, -0.01}), InputError);
  EXPECT_THROW(EpsSchedule({0.01, 0.1}), InputError);
  EXPECT_THROW(EpsSchedule({0.1, 0.1}), InputError);
  EXPECT_EQ(EpsSchedule({0.1, 0.05}).size(), 2u);
}

TEST(ExtrapolationWeights, ExactOnModel) {
  const std::vector<double> eps{0.1, 0.05, 0.02};
  const auto w = extrapolation_weights(eps);
  double sum = 0.0, val = 0.0;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    sum += w[i];
    val += w[i] * (1.5 - 2.0 * std::sqrt(eps[i]) + 0.7 * eps[i]);
  }
  EXPECT_NEAR(sum, 1.0, 1e-12);
  EXPECT_NEAR(val, 1.5, 1e-12);
}

TEST(ExtrapolationWeights, TwoPointsAffineInSqrtEps) {
  const std::vector<double> eps{0.04, 0.01};
  const auto w = extrapolation_weights(eps);
  // f = a + b sqrt(eps): f(0) = 2 f(0.01) - f(0.04)
  EXPECT_NEAR(w[0], -1.0, 1e-12);
  EXPECT_NEAR(w[1], 2.0, 1e-12);
  EXPECT_EQ(extrapolation_weights(std::vector<double>{0.3}), std::vector<double>{1.0});
  EXPECT_THROW(extrapolation_weights(std::vector<double>{}), InputError);
}
