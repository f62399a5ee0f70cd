// Acceptance gate: one test per shipped guarantee. Each test prints a verdict
// line so the suite's output doubles as a release checklist.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "bip/curvature_checks.hpp"
#include "bip/generators.hpp"
#include "bip/interpolation.hpp"
#include "bip/json_io.hpp"
#include "bip/sobolev.hpp"

namespace {

using namespace bip;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void gate(int id, const char* label) {
  std::printf("[gate %02d] %-64s %s\n", id, label, ::testing::Test::HasFailure() ? "FAIL" : "pass");
}

ProbMeasure random_measure(std::mt19937_64& rng, int n, int max_support) {
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), rng);
  std::uniform_int_distribution<int> k_dist(1, max_support);
  std::uniform_real_distribution<double> m_dist(0.1, 1.0);
  const int k = k_dist(rng);
  std::vector<double> mass(n, 0.0);
  double total = 0.0;
  for (int j = 0; j < k; ++j) {
    mass[idx[j]] = m_dist(rng);
    total += mass[idx[j]];
  }
  for (double& m : mass) m /= total;
  return make_prob_measure(std::move(mass));
}

// The dyadic interpolation instances: uniform lines and a cycle, 33 to 129
// points, endpoint patches separated by multiples of 16 so depth-4 midpoints
// land on the grid.
struct BipInstance {
  std::string name;
  FiniteMetricMeasureSpace s;
  ProbMeasure a;
  ProbMeasure b;
};

const std::vector<BipInstance>& bip_instances() {
  static const std::vector<BipInstance>* v = [] {
    auto* out = new std::vector<BipInstance>();
    out->push_back({"line33", make_line(33), uniform_patch(33, 0, 4), uniform_patch(33, 16, 4)});
    out->push_back({"line65", make_line(65), uniform_patch(65, 0, 8), uniform_patch(65, 32, 8)});
    out->push_back({"line129", make_line(129), uniform_patch(129, 0, 8), uniform_patch(129, 48, 8)});
    out->push_back({"cycle64", make_cycle(64), uniform_patch(64, 0, 4), uniform_patch(64, 16, 4)});
    return out;
  }();
  return *v;
}

const std::vector<DyadicGeodesic>& geodesics_at(double K) {
  auto build = [](double k_val) {
    auto* out = new std::vector<DyadicGeodesic>();
    for (const BipInstance& inst : bip_instances())
      out->push_back(
          dyadic_geodesic(inst.s, 2.0, inst.a, inst.b, k_val, 4, std::numeric_limits<double>::infinity()));
    return out;
  };
  static const std::vector<DyadicGeodesic>* flat = build(0.0);
  static const std::vector<DyadicGeodesic>* negative = build(-1.0);
  return K < 0.0 ? *negative : *flat;
}

TEST(Gate01, TransportMatchesExhaustiveSearchOnSmallSupports) {
  const auto t0 = Clock::now();
  std::mt19937_64 rng = make_rng(env_seed() + 1);
  std::uniform_int_distribution<int> n_dist(4, 8);
  std::uniform_real_distribution<double> coord(0.0, 1.0), w_dist(0.5, 2.0);
  const double qs[] = {1.5, 2.0, 3.0};
  for (int inst = 0; inst < 500; ++inst) {
    const int n = n_dist(rng);
    std::vector<double> x(n), y(n), w(n);
    for (int i = 0; i < n; ++i) {
      x[i] = coord(rng);
      y[i] = coord(rng);
      w[i] = w_dist(rng);
    }
    Matrix d(n, n, 0.0);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) d(i, j) = std::hypot(x[i] - x[j], y[i] - y[j]);
    const FiniteMetricMeasureSpace s = make_space_from_dist(std::move(d), w);
    const ProbMeasure a = random_measure(rng, n, 4);
    const ProbMeasure b = random_measure(rng, n, 4);
    const double q = qs[inst % 3];
    EXPECT_NEAR(wasserstein(s, q, a, b).wq, brute_force_wasserstein(s, q, a, b).wq, 1e-9) << "instance " << inst;
  }
  EXPECT_LT(seconds_since(t0), 10.0);
  gate(1, "transport cost equals exhaustive search on supports of size <= 4");
}

TEST(Gate02, GeodesicPlanEnergyMatchesTransportCost) {
  const FiniteMetricMeasureSpace line = make_line(64);
  const FiniteMetricMeasureSpace cyc = make_cycle(64);
  std::mt19937_64 rng = make_rng(env_seed() + 2);
  const double qs[] = {1.5, 2.0, 3.0};
  for (int rep = 0; rep < 50; ++rep) {
    const FiniteMetricMeasureSpace& s = (rep % 2 == 0) ? line : cyc;
    const double q = qs[rep % 3];
    ProbMeasure a, b;
    const bool exact_grid = rep >= 25;
    if (exact_grid) {
      // Translates by 16 split evenly into the 16-step grid.
      const int width = 1 + rep % 4;
      if (rep % 2 == 0) {
        std::uniform_int_distribution<int> start(0, 64 - 16 - width);
        const int a0 = start(rng);
        a = uniform_patch(64, a0, width);
        b = uniform_patch(64, a0 + 16, width);
      } else {
        std::uniform_int_distribution<int> start(0, 63);
        const int a0 = start(rng);
        a = uniform_patch_cyclic(64, a0, width);
        b = uniform_patch_cyclic(64, (a0 + 16) % 64, width);
      }
    } else {
      a = random_measure(rng, 64, 5);
      b = random_measure(rng, 64, 5);
    }
    const OptGeoResult og = optgeo_plan(s, q, a, b, 16);
    const double ke = plan_kinetic_energy(s, og.plan);
    EXPECT_LE(std::fabs(ke - og.wq_pow), og.slack + 1e-12) << "rep " << rep;
    if (exact_grid) EXPECT_LE(og.slack, 1e-9) << "rep " << rep;
  }
  gate(2, "16-step geodesic plan energy equals the transport cost");
}

TEST(Gate03, PolygonalApproximationNeverRaisesEnergy) {
  std::mt19937_64 rng = make_rng(env_seed() + 3);
  std::uniform_real_distribution<double> p_dist(0.1, 1.0);
  const double qs[] = {1.5, 2.0, 3.0};
  for (int rep = 0; rep < 100; ++rep) {
    const int n = 5 + rep % 5;
    const FiniteMetricMeasureSpace s = (rep % 2 == 0) ? make_line(n) : make_cycle(n + 1);
    std::uniform_int_distribution<int> node(0, s.n - 1);
    TestPlan plan;
    plan.T = 4;
    plan.q = qs[rep % 3];
    double total = 0.0;
    const int curves = 2 + rep % 3;
    for (int c = 0; c < curves; ++c) {
      DiscreteCurve curve;
      for (int j = 0; j <= plan.T; ++j) curve.nodes.push_back(node(rng));
      plan.curves.push_back(std::move(curve));
      plan.probs.push_back(p_dist(rng));
      total += plan.probs.back();
    }
    for (double& p : plan.probs) p /= total;
    const Interpolator interp = energy_minimizing_interpolator(s, plan.q);
    const double base_energy = plan_kinetic_energy(s, plan);
    for (int nc : {1, 2, 4})
      for (int m : {1, 2, 4}) {
        const TestPlan out = polygonal_approximation(s, plan, nc, m, interp);
        EXPECT_LE(plan_kinetic_energy(s, out), base_energy + 1e-9) << "rep " << rep << " n=" << nc << " m=" << m;
        for (int blk = 0; blk <= m; ++blk) {
          const int j = blk * (plan.T / m);
          const ProbMeasure want = plan_marginal(plan, j, s.n);
          const ProbMeasure got = plan_marginal(out, j, s.n);
          for (int i = 0; i < s.n; ++i) EXPECT_NEAR(got.mass[i], want.mass[i], 1e-10);
        }
      }
  }
  gate(3, "block-interpolated plans keep marginals and never raise energy");
}

TEST(Gate04, DyadicInterpolationKeepsFlatDensityBound) {
  for (std::size_t k = 0; k < bip_instances().size(); ++k) {
    const BipInstance& inst = bip_instances()[k];
    const auto t0 = Clock::now();
    const DyadicGeodesic geo =
        dyadic_geodesic(inst.s, 2.0, inst.a, inst.b, 0.0, 4, std::numeric_limits<double>::infinity());
    const double elapsed = seconds_since(t0);
    EXPECT_TRUE(geo.feasible) << inst.name;
    EXPECT_LE(geo.max_sup, (1.0 + 1e-6) * geo.base_norm) << inst.name;
    EXPECT_LT(elapsed, 5.0) << inst.name;
  }
  gate(4, "depth-4 dyadic midpoints stay within the flat density bound");
}

TEST(Gate05, NegativeCurvatureMidpointsSpreadEnoughMass) {
  const auto& geos = geodesics_at(-1.0);
  for (std::size_t k = 0; k < bip_instances().size(); ++k) {
    const BipInstance& inst = bip_instances()[k];
    const DyadicGeodesic& geo = geos[k];
    const double norm0 = std::max(sup_density(inst.s, inst.a), sup_density(inst.s, inst.b));
    const double bound = std::exp(-geo.diam * geo.diam / 8.0) / norm0;
    for (int j = 1; j < geo.segments(); ++j) {
      double support_mass = 0.0;
      for (int i = 0; i < inst.s.n; ++i)
        if (geo.measures[j].mass[i] > 0.0) support_mass += inst.s.w(i);
      EXPECT_GE(support_mass, bound - 1e-8) << inst.name << " grid index " << j;
    }
  }
  gate(5, "every negative-curvature midpoint spreads over enough mass");
}

TEST(Gate06, CosineProductConvergesToSinc) {
  for (int k = 1; k <= 31; ++k) {
    const double theta = 0.1 * k;
    EXPECT_LT(std::fabs(cos_product(theta, 30) - std::sin(theta) / theta), 1e-9) << "theta " << theta;
  }
  gate(6, "iterated cosine product reproduces sin(theta)/theta");
}

TEST(Gate07, DistortionCoefficientBranches) {
  // N = 1: identity in t for nonpositive curvature, divergent otherwise.
  for (double K : {0.0, -1.0, -5.0})
    for (double t : {0.0, 0.25, 0.5, 1.0})
      for (double theta : {0.3, 1.0, 2.0}) {
        const ExtendedReal v = tau(K, 1.0, t, theta);
        ASSERT_FALSE(v.infinite);
        EXPECT_DOUBLE_EQ(v.value, t);
      }
  EXPECT_TRUE(tau(0.5, 1.0, 0.5, 1.0).infinite);
  // Divergence at and beyond the conjugate-point threshold.
  EXPECT_TRUE(sigma(1.0, 1.0, 0.5, M_PI).infinite);
  EXPECT_TRUE(sigma(10.0, 1.0, 0.5, 2.0).infinite);
  EXPECT_TRUE(sigma(-10.0, -1.0, 0.5, 2.0).infinite);
  EXPECT_TRUE(tau(4.0, 2.0, 0.5, M_PI).infinite);
  // Exact flat, spherical, and hyperbolic values.
  EXPECT_DOUBLE_EQ(sigma(0.0, 5.0, 0.3, 2.0).value, 0.3);
  EXPECT_NEAR(sigma(1.0, 1.0, 0.25, 1.0).value, std::sin(0.25) / std::sin(1.0), 1e-15);
  EXPECT_NEAR(sigma(-1.0, 1.0, 0.25, 1.0).value, std::sinh(0.25) / std::sinh(1.0), 1e-15);
  EXPECT_DOUBLE_EQ(tau(-1.0, -2.0, 0.0, 1.0).value, 0.0);
  EXPECT_FALSE(tau(-1.0, -2.0, 0.5, 1.0).infinite);
  // Continuity across K = 0 at eps = 1e-6.
  for (double N : {1.5, 3.0, 10.0, -2.0})
    for (double t : {0.1, 0.5, 0.9})
      for (double theta : {0.5, 1.0, 3.0})
        for (double K : {1e-6, -1e-6}) {
          const ExtendedReal v = sigma(K, N, t, theta);
          ASSERT_FALSE(v.infinite);
          EXPECT_LE(std::fabs(v.value - t), 1e-4);
        }
  gate(7, "distortion coefficients hit every closed-form branch");
}

TEST(Gate08, CurvatureCheckersSeparateFlatFromPositive) {
  const BipInstance& inst = bip_instances()[0];  // 33-point flat line
  const DyadicGeodesic& geo = geodesics_at(0.0)[0];
  const CdInftyReport flat = cd_infty_check(inst.s, 2.0, 0.0, inst.a, inst.b, geo);
  EXPECT_TRUE(flat.pass);
  EXPECT_GE(flat.worst_margin, -1e-6);
  const CdInftyReport positive = cd_infty_check(inst.s, 2.0, 10.0, inst.a, inst.b, geo);
  EXPECT_FALSE(positive.pass);
  EXPECT_GT(-positive.worst_margin, 0.1);

  // Contraction toward a point: the density factor starts at exactly one.
  const FiniteMetricMeasureSpace line = make_line(33);
  std::vector<double> mass(33, 0.0);
  mass[0] = 0.5;
  mass[16] = 0.5;
  const ProbMeasure mu0 = make_prob_measure(std::move(mass));
  const DyadicGeodesic to_point =
      dyadic_geodesic(line, 2.0, mu0, dirac(33, 32), 0.0, 4, std::numeric_limits<double>::infinity());
  const McpReport mcp = mcp_check(line, 2.0, 0.0, 3.0, mu0, 32, to_point);
  ASSERT_FALSE(mcp.times.empty());
  ASSERT_EQ(mcp.times[0], 0.0);
  EXPECT_EQ(mcp.density_factor[0], 1.0);
  gate(8, "entropy checkers accept flat and reject strictly positive K");
}

TEST(Gate09, MinimalGradientOfLinearFunctionIsUnit) {
  const FiniteMetricMeasureSpace s = make_line(9);
  RealFunction f;
  f.values = {0, 1, 2, 3, 4, 5, 6, 7, 8};
  const PlanFamily fam = build_geod_family(s, 2.0, 1, 72);
  ASSERT_EQ(fam.size(), 72);
  for (double p : {1.5, 2.0, 3.0}) {
    const auto t0 = Clock::now();
    const GradientCandidate g = minimal_weak_upper_gradient(s, f, p, fam);
    const double elapsed = seconds_since(t0);
    double worst = 0.0;
    for (int i = 0; i < s.n; ++i) worst = std::max(worst, std::fabs(g.values[i] - 1.0));
    EXPECT_LE(worst, 2e-3) << "p = " << p;
    EXPECT_LT(elapsed, 30.0) << "p = " << p;
  }
  gate(9, "minimal weak upper gradient of f(x)=x is the unit function");
}

TEST(Gate10, MasterPlanCertificateMatchesFamilyVerdict) {
  std::mt19937_64 rng = make_rng(env_seed() + 10);
  std::uniform_real_distribution<double> f_dist(0.0, 2.0), g_dist(0.0, 1.2);
  int passes = 0, failures = 0;
  for (int rep = 0; rep < 50; ++rep) {
    const int n = 5 + rep % 4;
    const FiniteMetricMeasureSpace s = (rep % 2 == 0) ? make_line(n) : make_cycle(n);
    const PlanFamily fam = build_geod_family(s, 2.0, 1, n * (n - 1));
    RealFunction f;
    for (int i = 0; i < n; ++i) f.values.push_back(f_dist(rng));
    GradientCandidate g;
    g.p = 2.0;
    if (rep % 3 == 0) {
      g = minimal_weak_upper_gradient(s, f, 2.0, fam);
      for (double& v : g.values) v *= 1.001;  // strictly feasible
    } else if (rep % 3 == 1) {
      g = minimal_weak_upper_gradient(s, f, 2.0, fam);
      for (double& v : g.values) v *= 0.9;  // strictly infeasible unless f is flat
    } else {
      for (int i = 0; i < n; ++i) g.values.push_back(g_dist(rng));
    }
    const MasterPlanResult master = build_master_plan(s, fam, 2.0);
    const MasterPlanCheckReport rep_out = master_plan_check(s, f, g, master.plan, fam);
    EXPECT_EQ(rep_out.per_curve_pass, rep_out.family_pass) << "rep " << rep;
    EXPECT_TRUE(rep_out.consistent) << "rep " << rep;
    (rep_out.family_pass ? passes : failures) += 1;
  }
  EXPECT_GT(passes, 0);
  EXPECT_GT(failures, 0);
  gate(10, "master-plan per-curve verdict equals the family-wide verdict");
}

TEST(Gate11, ClarksonInequalitiesHoldForRandomFields) {
  std::mt19937_64 rng = make_rng(env_seed() + 11);
  std::uniform_real_distribution<double> coord(-1.0, 1.0), w_dist(0.5, 2.0);
  std::vector<double> weights(16);
  for (double& w : weights) w = w_dist(rng);
  const FiniteMetricMeasureSpace s = make_line(16, 1.0, weights);
  for (double p : {1.5, 2.0, 3.0, 4.0}) {
    for (int rep = 0; rep < 250; ++rep) {
      std::vector<double> omega(s.n), eta(s.n), sum(s.n), diff(s.n);
      for (int i = 0; i < s.n; ++i) {
        const double ax = coord(rng), ay = coord(rng), bx = coord(rng), by = coord(rng);
        omega[i] = std::hypot(ax, ay);
        eta[i] = std::hypot(bx, by);
        sum[i] = std::hypot(ax + bx, ay + by);
        diff[i] = std::hypot(ax - bx, ay - by);
      }
      const ClarksonReport rep_out = clarkson_check(s, omega, eta, sum, diff, p);
      EXPECT_GE(rep_out.margin, -1e-9) << "p = " << p << " rep " << rep;
      EXPECT_TRUE(rep_out.pass);
    }
  }
  gate(11, "Clarkson convexity holds on 1000 random Euclidean field pairs");
}

TEST(Gate12, RefiningLineTransfersMeetTheDensityBoundExactly) {
  const FiniteMetricMeasureSpace ambient = make_line(65, 1.0 / 64.0);
  json all;
  all["indices"] = json::array();
  for (int i = 0; i < 65; ++i) all["indices"].push_back(i);
  const EmbeddedSpace limit = embedded_from_json(ambient, all);
  const ProbMeasure mu = make_prob_measure(std::vector<double>(65, 1.0 / 65.0));
  RealFunction ones;
  ones.values.assign(65, 1.0);

  double prev_wq = std::numeric_limits<double>::infinity();
  double final_wq = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= 6; ++k) {
    const int step = 64 >> k;
    json idx;
    idx["indices"] = json::array();
    for (int i = 0; i <= 64; i += std::max(step, 1)) idx["indices"].push_back(i);
    const EmbeddedSpace target = embedded_from_json(ambient, idx);
    const PmghTransferResult res = pmgh_transfer(target, limit, ambient, mu, ones, 2.0);
    EXPECT_NEAR(res.sup_density, res.density_bound, 1e-12) << "level " << k;
    EXPECT_LE(res.wq, prev_wq + 1e-12) << "level " << k;
    prev_wq = res.wq;
    final_wq = res.wq;
  }
  EXPECT_LT(final_wq, 1e-3);
  gate(12, "refining-line transfer meets the density bound, distances shrink");
}

TEST(Gate13, NegativeCurvatureDensityRatiosStayUnderTheUpperConstant) {
  const auto& geos = geodesics_at(-1.0);
  for (std::size_t k = 0; k < bip_instances().size(); ++k) {
    const BipInstance& inst = bip_instances()[k];
    const DyadicGeodesic& geo = geos[k];
    const double D = geo.diam;
    const double lower_constant = std::exp(D * D / 12.0);
    const double upper_constant = std::exp(D * D / 6.0);
    const double achieved = geo.max_sup / geo.base_norm;
    std::printf("[density ratio] %-8s D=%-4g conjectured=%.6g proven=%.6g achieved=%.6g\n", inst.name.c_str(), D,
                lower_constant, upper_constant, achieved);
    EXPECT_TRUE(geo.feasible) << inst.name;
    EXPECT_LE(achieved, upper_constant * (1.0 + 1e-6)) << inst.name;
  }
  gate(13, "achieved density ratios stay under the proven constant");
}

}  // namespace
