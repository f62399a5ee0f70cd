#include "bip/curvature.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "bip/generators.hpp"
#include "bip/measure.hpp"

namespace bip {
namespace {

TEST(Sigma, FlatCurvatureGivesLinearWeight) {
  for (double N : {1.0, 2.5, 7.0, -1.0, -3.5}) {
    for (double t : {0.0, 0.25, 0.5, 1.0}) {
      ExtendedReal s = sigma(0.0, N, t, 1.7);
      ASSERT_FALSE(s.infinite);
      EXPECT_DOUBLE_EQ(s.value, t);
    }
  }
}

TEST(Sigma, SineBranchMatchesClosedForm) {
  ExtendedReal s = sigma(1.0, 1.0, 0.5, M_PI / 2.0);
  ASSERT_FALSE(s.infinite);
  EXPECT_NEAR(s.value, std::sin(M_PI / 4.0) / std::sin(M_PI / 2.0), 1e-12);
  EXPECT_NEAR(s.value, 0.7071068, 1e-7);
}

TEST(Sigma, DivergesAtConjugatePoint) {
  EXPECT_TRUE(sigma(1.0, 1.0, 0.5, M_PI).infinite);
  EXPECT_TRUE(sigma(2.0, 1.0, 0.5, M_PI).infinite);
  // Just below the pole the value is finite and large.
  ExtendedReal s = sigma(1.0, 1.0, 0.5, M_PI * (1.0 - 1e-6));
  ASSERT_FALSE(s.infinite);
  EXPECT_GT(s.value, 1e4);
}

TEST(Sigma, HyperbolicBranch) {
  ExtendedReal s = sigma(-4.0, 1.0, 0.5, 1.0);
  ASSERT_FALSE(s.infinite);
  EXPECT_NEAR(s.value, std::sinh(1.0) / std::sinh(2.0), 1e-12);
}

TEST(Sigma, NegativeDimensionBranches) {
  // K<0 with N<0 lands in the sine branch.
  ExtendedReal sin_case = sigma(-1.0, -1.0, 0.5, 1.0);
  ASSERT_FALSE(sin_case.infinite);
  EXPECT_NEAR(sin_case.value, std::sin(0.5) / std::sin(1.0), 1e-12);
  // K>0 with N<0 lands in the hyperbolic branch.
  ExtendedReal sinh_case = sigma(1.0, -1.0, 0.5, 1.0);
  ASSERT_FALSE(sinh_case.infinite);
  EXPECT_NEAR(sinh_case.value, std::sinh(0.5) / std::sinh(1.0), 1e-12);
  // Deeply negative K*theta^2 crosses the negative-dimension pole.
  EXPECT_TRUE(sigma(-10.0, -1.0, 0.5, 1.0).infinite);
  EXPECT_TRUE(sigma(-M_PI * M_PI, -1.0, 0.5, 1.0).infinite);
}

TEST(Sigma, ContinuityInCurvatureAtZero) {
  const double eps = 1e-6;
  for (double N : {1.0, 3.0, -2.0}) {
    for (double t : {0.25, 0.5, 0.9}) {
      for (double theta : {0.3, 1.0, 2.0}) {
        ExtendedReal plus = sigma(eps, N, t, theta);
        ExtendedReal minus = sigma(-eps, N, t, theta);
        ASSERT_FALSE(plus.infinite);
        ASSERT_FALSE(minus.infinite);
        EXPECT_NEAR(plus.value, t, 1e-4);
        EXPECT_NEAR(minus.value, t, 1e-4);
      }
    }
  }
}

TEST(Sigma, EndpointNormalization) {
  for (double K : {-3.0, -0.5, 0.0, 0.5, 3.0}) {
    for (double N : {1.0, 2.0, -1.5}) {
      for (double theta : {0.0, 0.7, 1.9}) {
        ExtendedReal at0 = sigma(K, N, 0.0, theta);
        ExtendedReal at1 = sigma(K, N, 1.0, theta);
        if (at0.infinite || at1.infinite) continue;
        EXPECT_NEAR(at0.value, 0.0, 1e-15);
        EXPECT_NEAR(at1.value, 1.0, 1e-15);
      }
    }
  }
}

TEST(Sigma, RejectsBadArguments) {
  EXPECT_THROW(sigma(0.0, 0.0, 0.5, 1.0), std::invalid_argument);
  EXPECT_THROW(sigma(0.0, 1.0, -0.1, 1.0), std::invalid_argument);
  EXPECT_THROW(sigma(0.0, 1.0, 1.1, 1.0), std::invalid_argument);
  EXPECT_THROW(sigma(0.0, 1.0, 0.5, -1.0), std::invalid_argument);
}

TEST(Tau, DimensionOneSpecialCase) {
  for (double t : {0.0, 0.3, 1.0}) {
    ExtendedReal flat = tau(-1.0, 1.0, t, 2.0);
    ASSERT_FALSE(flat.infinite);
    EXPECT_DOUBLE_EQ(flat.value, t);
  }
  EXPECT_TRUE(tau(1.0, 1.0, 0.5, 2.0).infinite);
  EXPECT_FALSE(tau(0.0, 1.0, 0.5, 2.0).infinite);
}

TEST(Tau, FlatCompositionArithmetic) {
  ExtendedReal v = tau(0.0, 2.0, 0.25, 3.0);
  ASSERT_FALSE(v.infinite);
  EXPECT_NEAR(v.value, 0.25, 1e-15);
}

TEST(Tau, CompositionIdentity) {
  for (double K : {-2.0, 0.0, 0.4}) {
    for (double N : {1.5, 2.0, 5.0}) {
      for (double t : {0.1, 0.5, 0.9}) {
        for (double theta : {0.2, 1.0}) {
          ExtendedReal s = sigma(K, N - 1.0, t, theta);
          ExtendedReal tv = tau(K, N, t, theta);
          if (s.infinite) {
            EXPECT_TRUE(tv.infinite);
            continue;
          }
          ASSERT_FALSE(tv.infinite);
          EXPECT_DOUBLE_EQ(tv.value, std::pow(t, 1.0 / N) * std::pow(s.value, 1.0 - 1.0 / N));
        }
      }
    }
  }
}

TEST(Tau, NegativeDimensionComposition) {
  // Flat case collapses to t for every admissible N.
  for (double t : {0.0, 0.25, 1.0}) {
    ExtendedReal v = tau(0.0, -1.0, t, 1.0);
    ASSERT_FALSE(v.infinite);
    EXPECT_NEAR(v.value, t, 1e-15);
  }
  // t = 0 is pinned to 0 by continuity even where the raw powers diverge.
  ExtendedReal at0 = tau(-1.0, -2.0, 0.0, 1.0);
  ASSERT_FALSE(at0.infinite);
  EXPECT_EQ(at0.value, 0.0);
  // Infinite sigma branch propagates.
  EXPECT_TRUE(tau(-10.0, -0.5, 0.5, 2.0).infinite);
}

TEST(Tau, RejectsDimensionGap) {
  EXPECT_THROW(tau(0.0, 0.5, 0.5, 1.0), std::invalid_argument);
  EXPECT_THROW(tau(0.0, 0.0, 0.5, 1.0), std::invalid_argument);
}

TEST(ShannonEntropy, KnownValues) {
  FiniteMetricMeasureSpace line = make_line(4);
  EXPECT_NEAR(shannon_entropy(line, make_prob_measure({0.25, 0.25, 0.25, 0.25})), -std::log(4.0), 1e-12);
  EXPECT_NEAR(shannon_entropy(line, dirac(4, 2)), 0.0, 1e-15);
  const double expected = 0.75 * std::log(0.75) + 0.25 * std::log(0.25);
  EXPECT_NEAR(shannon_entropy(line, make_prob_measure({0.75, 0.25, 0.0, 0.0})), expected, 1e-12);
}

TEST(ShannonEntropy, WeightsEnterThroughDensity) {
  FiniteMetricMeasureSpace s = make_line(2, 1.0, {2.0, 2.0});
  // rho = 1/4 on both atoms: Ent = 2 * (1/4 log 1/4) * 2 = log(1/4).
  EXPECT_NEAR(shannon_entropy(s, make_prob_measure({0.5, 0.5})), std::log(0.25), 1e-12);
}

TEST(RenyiEntropy, KnownValues) {
  FiniteMetricMeasureSpace line = make_line(5);
  ProbMeasure unif = make_prob_measure(std::vector<double>(5, 0.2));
  for (double N : {1.0, 2.0, 4.0}) EXPECT_NEAR(renyi_entropy(line, unif, N), -std::pow(5.0, 1.0 / N), 1e-12);
  EXPECT_NEAR(renyi_entropy(line, dirac(5, 0), 3.0), -1.0, 1e-15);
  EXPECT_NEAR(renyi_entropy(line, dirac(5, 0), -3.0), 1.0, 1e-15);

  FiniteMetricMeasureSpace two = make_line(2);
  EXPECT_NEAR(renyi_entropy(two, make_prob_measure({0.5, 0.5}), -1.0), 0.5, 1e-15);
}

TEST(RenyiEntropy, JensenLowerBoundNegativeDimension) {
  FiniteMetricMeasureSpace s = make_line(6, 1.0, {1.0, 0.5, 2.0, 1.0, 0.25, 3.0});
  std::mt19937_64 rng = make_rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<double> m(6, 0.0);
    double total = 0.0;
    for (int i = 0; i < 6; ++i) {
      if (u(rng) < 0.4) continue;
      m[i] = u(rng) + 1e-3;
      total += m[i];
    }
    if (total == 0.0) {
      m[0] = 1.0;
      total = 1.0;
    }
    for (double& x : m) x /= total;
    ProbMeasure mu{m};
    for (double N : {-0.5, -1.0, -4.0}) {
      const double lhs = renyi_entropy(s, mu, N);
      const double rhs = std::pow(support_mass(s, mu), 1.0 / N);
      EXPECT_GE(lhs, rhs - 1e-12);
    }
  }
}

TEST(ShannonEntropy, JensenLowerBound) {
  FiniteMetricMeasureSpace s = make_line(6, 1.0, {1.0, 0.5, 2.0, 1.0, 0.25, 3.0});
  std::mt19937_64 rng = make_rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<double> m(6, 0.0);
    double total = 0.0;
    for (int i = 0; i < 6; ++i) {
      if (u(rng) < 0.3) continue;
      m[i] = u(rng) + 1e-3;
      total += m[i];
    }
    if (total == 0.0) {
      m[3] = 1.0;
      total = 1.0;
    }
    for (double& x : m) x /= total;
    ProbMeasure mu{m};
    EXPECT_GE(shannon_entropy(s, mu), std::log(1.0 / support_mass(s, mu)) - 1e-12);
  }
}

TEST(Profile, ClosedForms) {
  EXPECT_DOUBLE_EQ(profile(ProfileKind::cd_infty, 0.0, 0.0, 3.7), 1.0);
  EXPECT_NEAR(profile(ProfileKind::cd_infty, -1.0, 0.0, 1.0), std::exp(1.0 / 12.0), 1e-14);
  EXPECT_NEAR(profile(ProfileKind::mcp, 0.0, 1.0, 9.0), 2.0, 1e-14);
  EXPECT_NEAR(profile(ProfileKind::mcp, -1.0, 2.0, 1.0), 4.0 * std::exp(1.0), 1e-12);
  // Positive curvature contributes nothing through K^-.
  EXPECT_DOUBLE_EQ(profile(ProfileKind::cd_infty, 5.0, 0.0, 2.0), 1.0);
}

TEST(Profile, NegativeDimensionDomain) {
  EXPECT_DOUBLE_EQ(profile(ProfileKind::cd_negative, 1.0, -1.0, 10.0), 1.0);
  const double dmax = M_PI * std::sqrt(2.0);  // K=-1, N=-1
  EXPECT_GT(profile(ProfileKind::cd_negative, -1.0, -1.0, 0.9 * dmax), 1.0);
  EXPECT_THROW(profile(ProfileKind::cd_negative, -1.0, -1.0, dmax), std::domain_error);
  // Monotone in D on its domain.
  double prev = 1.0;
  for (double D : {0.5, 1.0, 2.0, 4.0}) {
    double v = profile(ProfileKind::cd_negative, -1.0, -1.0, D);
    EXPECT_GE(v, prev - 1e-15);
    prev = v;
  }
}

TEST(Profile, RejectsBadKindParameters) {
  EXPECT_THROW(profile(ProfileKind::mcp, 0.0, 0.5, 1.0), std::invalid_argument);
  EXPECT_THROW(profile(ProfileKind::cd_negative, 0.0, 2.0, 1.0), std::invalid_argument);
  EXPECT_THROW(profile(ProfileKind::sampled, 0.0, 0.0, 1.0), std::invalid_argument);
}

TEST(SpreadingBound, FlatAndCurvedCases) {
  EXPECT_DOUBLE_EQ(spreading_bound(1.0, 1.0, 5.0, 0.0), 1.0);
  EXPECT_NEAR(spreading_bound(1.0, 1.0, 1.0, -2.0), std::exp(-0.25), 1e-14);
  EXPECT_NEAR(spreading_bound(2.0, 0.5, 1.0, -2.0), std::exp(-0.25) / 2.0, 1e-14);
  // Positive curvature only tightens through K^-, which vanishes.
  EXPECT_DOUBLE_EQ(spreading_bound(1.0, 1.0, 2.0, 7.0), 1.0);
}

TEST(SpreadingBound, NegativeDimensionVariants) {
  // K >= 0 branch.
  EXPECT_NEAR(spreading_bound(1.0, 1.0, 1.0, 1.0, -1.0), std::exp(-0.5 * std::sqrt(2.0)), 1e-14);
  EXPECT_NEAR(spreading_bound(3.0, 1.0, 2.0, 0.0, -2.0), 1.0 / 3.0, 1e-14);
  // K < 0 branch with its sine-pole domain.
  const double v = spreading_bound(1.0, 1.0, 1.0, -1.0, -1.0);
  const double x = 0.5 * std::sqrt(0.5);
  EXPECT_NEAR(v, std::pow(std::cos(x), 2.0), 1e-14);
  EXPECT_THROW(spreading_bound(1.0, 1.0, 10.0, -1.0, -1.0), std::domain_error);
  EXPECT_THROW(spreading_bound(1.0, 1.0, 1.0, 0.0, 2.0), std::invalid_argument);
  EXPECT_THROW(spreading_bound(0.0, 1.0, 1.0, 0.0), std::invalid_argument);
}

TEST(CurvatureParams, Validation) {
  CurvatureParams p;
  p.K = -1.0;
  p.N = 2.0;
  p.q = 2.0;
  p.t = 0.5;
  p.theta = 1.0;
  EXPECT_NO_THROW(p.validate());
  EXPECT_DOUBLE_EQ(p.k_minus(), 1.0);
  p.N = 0.0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p.N = 2.0;
  p.q = 1.0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p.q = 2.0;
  p.t = 1.5;
  EXPECT_THROW(p.validate(), std::invalid_argument);
}

}  // namespace
}  // namespace bip
