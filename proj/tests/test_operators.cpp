#include <gtest/gtest.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <vector>

#include "silt/checks.hpp"
#include "silt/gram.hpp"
#include "silt/operators.hpp"

using namespace silt;

namespace {

Function ind(double a, double b) { return indicator(Interval(a, b)); }

double l2_distance(const Function& a, const Function& b) { return norm(axpy(-1.0, b, a)); }

}  // namespace

TEST(Apply, IdentityReturnsInput) {
  const Function f = ind(0, 0.4);
  EXPECT_EQ(l2_distance(silt::apply(Identity{}, f), f), 0.0);
}

TEST(Apply, BridgeSubtractsMean) {
  const OperatorSpec A = bridge({});
  for (double t : {0.2, 0.5, 0.9}) {
    const Function expected = axpy(-t, ind(0, 1), ind(0, t));
    EXPECT_LT(l2_distance(silt::apply(A, ind(0, t)), expected), 1e-14);
  }
}

TEST(Apply, ConstantMultiplication) {
  const OperatorSpec A = parse_operator("mult:const:3");
  EXPECT_LT(l2_distance(silt::apply(A, ind(0, 0.6)), scaled(ind(0, 0.6), 3.0)), 1e-14);
}

TEST(ApplyAdjoint, SelfAdjointVariants) {
  const Function h = GridFunction::sample(64, [](double r) { return std::cos(3 * r); });
  EXPECT_EQ(l2_distance(apply_adjoint(Identity{}, h), h), 0.0);
  const Function phi = GridFunction::sample(64, [](double r) { return 1 + r; });
  const OperatorSpec M = make_multiplication(phi);
  EXPECT_LT(l2_distance(apply_adjoint(M, h), multiply(phi, h)), 1e-14);
}

TEST(ApplyAdjoint, ProjectionKillsItsSpan) {
  const Function e = scaled(ind(0.2, 0.6), 1.0 / std::sqrt(0.4));
  const OperatorSpec A = make_projection_complement({e});
  EXPECT_LT(norm(apply_adjoint(A, e)), 1e-14);
}

TEST(ApplyAdjoint, AdjointIdentityOnRandomPairs) {
  Engine rng = make_stream(21, 0);
  const OperatorSpec ops[] = {Identity{}, parse_operator("projcomp:0.3,0.8"), parse_operator("mult:affine:1,2", 32)};
  for (const auto& A : ops)
    for (int c = 0; c < 20; ++c) {
      const Function f = random_step_function(rng), g = random_step_function(rng);
      EXPECT_NEAR(inner_product(silt::apply(A, f), g), inner_product(f, apply_adjoint(A, g)), 1e-12);
    }
}

TEST(IncrementGram, IdentityDisjointHalves) {
  const std::vector<Interval> ivs{{0, 0.5}, {0.5, 1}};
  const Eigen::MatrixXd B = increment_gram(Identity{}, ivs).entries();
  EXPECT_NEAR(B(0, 0), 0.5, 1e-15);
  EXPECT_NEAR(B(1, 1), 0.5, 1e-15);
  EXPECT_NEAR(B(0, 1), 0.0, 1e-15);
}

TEST(IncrementGram, BridgeSingleInterval) {
  for (double t : {0.1, 0.5, 0.7}) {
    const std::vector<Interval> ivs{{0, t}};
    EXPECT_NEAR(increment_gram(bridge({}), ivs)(0, 0), t - t * t, 1e-15);
  }
}

TEST(IncrementGram, ConstantMultiplication) {
  const std::vector<Interval> ivs{{0.2, 0.65}};
  EXPECT_NEAR(increment_gram(parse_operator("mult:const:-1.5"), ivs)(0, 0), 2.25 * 0.45, 1e-15);
}

TEST(IncrementGram, MatchesGramOfAppliedIndicators) {
  Engine rng = make_stream(22, 0);
  const OperatorSpec ops[] = {Identity{}, parse_operator("projcomp:0.25,0.5"), parse_operator("mult:affine:0.5,1", 50),
                              parse_operator("bridge")};
  for (const auto& A : ops)
    for (int c = 0; c < 20; ++c) {
      std::vector<Interval> ivs;
      std::vector<Function> afs;
      for (int i = 0; i < 4; ++i) {
        ivs.push_back(random_interval(rng));
        afs.push_back(silt::apply(A, indicator(ivs.back())));
      }
      const Eigen::MatrixXd B = increment_gram_entries(A, ivs);
      for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) EXPECT_NEAR(B(i, j), inner_product(afs[i], afs[j]), 1e-12) << to_string(A);
    }
}

TEST(IncrementGram, PermutationInvariance) {
  Engine rng = make_stream(23, 0);
  const OperatorSpec A = parse_operator("projcomp:0.4");
  std::vector<Interval> ivs;
  for (int i = 0; i < 5; ++i) ivs.push_back(random_interval(rng));
  std::vector<int> perm{3, 0, 4, 1, 2};
  std::vector<Interval> shuffled;
  for (int p : perm) shuffled.push_back(ivs[static_cast<std::size_t>(p)]);
  const Eigen::MatrixXd B = increment_gram_entries(A, ivs), C = increment_gram_entries(A, shuffled);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) EXPECT_NEAR(C(i, j), B(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]), 1e-15);
  EXPECT_NEAR(increment_gram(A, ivs).det(), increment_gram(A, shuffled).det(), 1e-15);
}

TEST(IncrementGram, ProjectionDeterminantIsCavalieriValue) {
  Engine rng = make_stream(24, 0);
  for (int c = 0; c < 30; ++c) {
    const std::vector<double> part = c % 2 ? std::vector<double>{0.3} : std::vector<double>{0.2, 0.55, 0.9};
    const ProjectionComplement P = bridge(part);
    std::vector<Interval> ivs;
    std::vector<Function> gs;
    for (int i = 0; i < 3; ++i) {
      ivs.push_back(random_interval(rng));
      gs.emplace_back(indicator(ivs.back()));
    }
    const TwoSides ts = cavalieri_both_sides(P.basis, gs);
    EXPECT_NEAR(increment_gram(OperatorSpec(P), ivs).det(), ts.rhs, 1e-10);
  }
}

TEST(IncrementGram, MultiplicationDeterminantBounds) {
  Engine rng = make_stream(25, 0);
  const OperatorSpec A = parse_operator("mult:affine:0.5,1.5", 128);  // 0.5 < phi < 2
  const OperatorBounds b = bounds(A);
  for (int c = 0; c < 50; ++c) {
    const int n = 1 + c % 4;
    std::vector<Interval> ivs;
    std::vector<Function> fs;
    for (int i = 0; i < n; ++i) {
      ivs.push_back(random_interval(rng));
      fs.emplace_back(indicator(ivs.back()));
    }
    const double det = increment_gram(A, ivs).det(), base = gram_det(fs);
    EXPECT_GE(det, std::pow(b.m, 2 * n) * base - 1e-14);
    EXPECT_LE(det, std::pow(b.M, 2 * n) * base + 1e-14);
  }
}

TEST(MakeMultiplication, ChecksBounds) {
  const Function phi = GridFunction::sample(16, [](double r) { return 1 + r; });
  EXPECT_NO_THROW(make_multiplication(phi, 1.0, 2.0));
  EXPECT_THROW(make_multiplication(phi, 1.2, 2.0), InputError);
  EXPECT_THROW(make_multiplication(phi, 1.0, 1.5), InputError);
  EXPECT_THROW(make_multiplication(Function(StepFunction::constant(0.0))), InputError);
}

TEST(MakeProjectionComplement, RequiresOrthonormalBasis) {
  EXPECT_THROW(make_projection_complement({ind(0, 0.5)}), InputError);
  EXPECT_THROW(make_projection_complement({ind(0, 1), ind(0, 1)}), InputError);
  EXPECT_NO_THROW(make_projection_complement({ind(0, 1)}));
}

TEST(ParseOperator, CanonicalForms) {
  EXPECT_TRUE(std::holds_alternative<Identity>(parse_operator("identity")));
  const OperatorSpec m = parse_operator("mult:const:2");
  ASSERT_TRUE(std::holds_alternative<Multiplication>(m));
  EXPECT_DOUBLE_EQ(bounds(m).m, 2.0);
  EXPECT_DOUBLE_EQ(bounds(m).M, 2.0);
  EXPECT_DOUBLE_EQ(bounds(m).inv_norm, 0.5);
  const OperatorSpec p = parse_operator("projcomp:0.25,0.5");
  ASSERT_TRUE(std::holds_alternative<ProjectionComplement>(p));
  EXPECT_EQ(std::get<ProjectionComplement>(p).basis.size(), 3u);
  EXPECT_EQ(to_string(p), "projcomp:0.25,0.5");
  EXPECT_EQ(std::get<ProjectionComplement>(parse_operator("bridge")).basis.size(), 1u);
  EXPECT_EQ(to_string(parse_operator("mult:affine:1,1", 8)), "mult:affine:1,1");
}

TEST(ParseOperator, MultiplierFile) {
  const std::string path = testing::TempDir() + "silt_phi.txt";
  {
    std::ofstream f(path);
    f << "1\n2\n1.5\n0.5\n";
  }
  const OperatorSpec A = parse_operator("mult:" + path);
  EXPECT_DOUBLE_EQ(bounds(A).m, 0.5);
  EXPECT_DOUBLE_EQ(bounds(A).M, 2.0);
  std::remove(path.c_str());
}

TEST(ParseOperator, Rejects) {
  EXPECT_THROW(parse_operator("rotation"), InputError);
  EXPECT_THROW(parse_operator("mult:const:0"), InputError);
  EXPECT_THROW(parse_operator("mult:const:x"), InputError);
  EXPECT_THROW(parse_operator("mult:affine:1"), InputError);
  EXPECT_THROW(parse_operator("mult:affine:0,0", 16), InputError);
  EXPECT_THROW(parse_operator("projcomp:0.6,0.4"), InputError);
  EXPECT_THROW(parse_operator("mult:/nonexistent/phi.txt"), InputError);
}
