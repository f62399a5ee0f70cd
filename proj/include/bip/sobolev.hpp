#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

#include "bip/curves.hpp"
#include "bip/generators.hpp"
#include "bip/interpolation.hpp"
#include "bip/measure.hpp"
#include "bip/space.hpp"

// Weak upper gradients from test plans: the per-plan inequality check, the
// minimal gradient as a convex program over half-space constraints, geodesic
// plan families closed under time restriction, master plans, and the Clarkson
// convexity check on weighted L^p norms.

namespace bip {

// Nonnegative candidate gradient G sampled at the atoms, tagged with the
// exponent of the norm it is meant to minimize.
struct GradientCandidate {
  std::vector<double> values;
  double p = 2.0;
};

// Finite family of test plans over a shared space. Tags record how each plan
// was generated; comp/ke cache its compression and q-kinetic energy.
struct PlanFamily {
  std::vector<TestPlan> plans;
  std::vector<std::string> tags;
  std::vector<double> comp;
  std::vector<double> ke;

  int size() const { return static_cast<int>(plans.size()); }
};

inline double weighted_p_norm(const FiniteMetricMeasureSpace& s, const std::vector<double>& v, double p) {
  if (static_cast<int>(v.size()) != s.n) throw std::invalid_argument("weighted_p_norm: size mismatch");
  if (!(p >= 1.0) || !std::isfinite(p)) throw std::invalid_argument("weighted_p_norm: p must be finite and >= 1");
  double acc = 0.0;
  for (int i = 0; i < s.n; ++i) acc += std::pow(std::fabs(v[i]), p) * s.w(i);
  return std::pow(acc, 1.0 / p);
}

namespace detail {

inline void check_function(const FiniteMetricMeasureSpace& s, const RealFunction& f, const char* where) {
  if (static_cast<int>(f.values.size()) != s.n)
    throw std::invalid_argument(std::string(where) + ": function size must match the space");
}

inline void check_gradient(const FiniteMetricMeasureSpace& s, const GradientCandidate& g, const char* where) {
  if (static_cast<int>(g.values.size()) != s.n)
    throw std::invalid_argument(std::string(where) + ": gradient size must match the space");
  for (double x : g.values)
    if (x < 0.0) throw std::invalid_argument(std::string(where) + ": gradient values must be nonnegative");
  if (!(g.p >= 1.0) || !std::isfinite(g.p))
    throw std::invalid_argument(std::string(where) + ": gradient exponent must be finite and >= 1");
}

// One linear constraint "sum_i a[i] G_i >= b" distilled from a test plan: the
// left side is the curve integral of G against speed with G sampled at the
// left node of each step, the right side the mean endpoint increment of f.
struct GradientRow {
  std::vector<double> a;
  double b = 0.0;
};

inline GradientRow gradient_row(const FiniteMetricMeasureSpace& s, const RealFunction& f, const TestPlan& plan) {
  GradientRow row;
  row.a.assign(s.n, 0.0);
  for (std::size_t k = 0; k < plan.curves.size(); ++k) {
    const std::vector<int>& nodes = plan.curves[k].nodes;
    const double pk = plan.probs[k];
    row.b += pk * std::fabs(f.values[nodes.back()] - f.values[nodes.front()]);
    for (std::size_t j = 0; j + 1 < nodes.size(); ++j) row.a[nodes[j]] += pk * s.d(nodes[j], nodes[j + 1]);
  }
  return row;
}

struct ConstraintSystem {
  std::vector<GradientRow> rows;  // rows with b <= 0 are vacuous and dropped
  double b_scale = 1.0;
};

inline ConstraintSystem gradient_constraints(const FiniteMetricMeasureSpace& s, const RealFunction& f,
                                             const PlanFamily& family) {
  ConstraintSystem sys;
  for (const TestPlan& plan : family.plans) {
    GradientRow row = gradient_row(s, f, plan);
    if (row.b > 1e-15) {
      sys.b_scale = std::max(sys.b_scale, row.b);
      sys.rows.push_back(std::move(row));
    }
  }
  return sys;
}

inline double row_value(const GradientRow& row, const std::vector<double>& x) {
  double v = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) v += row.a[i] * x[i];
  return v;
}

inline double max_residual(const ConstraintSystem& sys, const std::vector<double>& x) {
  double worst = 0.0;
  for (const GradientRow& row : sys.rows) worst = std::max(worst, row.b - row_value(row, x));
  return worst;
}

// Projection onto {a.x >= b} in the weighted inner product <u,v> = sum u v w.
// Row coefficients are nonnegative, so the projection only raises coordinates.
inline void project_halfspace(const FiniteMetricMeasureSpace& s, const GradientRow& row, std::vector<double>& x) {
  const double viol = row.b - row_value(row, x);
  if (viol <= 0.0) return;
  double denom = 0.0;
  for (int i = 0; i < s.n; ++i)
    if (row.a[i] != 0.0) denom += row.a[i] * row.a[i] / s.w(i);
  if (!(denom > 0.0)) return;  // unreachable for rows with b > 0 on a metric space
  const double t = viol / denom;
  for (int i = 0; i < s.n; ++i)
    if (row.a[i] != 0.0) x[i] += t * row.a[i] / s.w(i);
}

// Minimum weighted-L2-norm point of the constraint polytope via Dykstra's
// alternating projections started from zero. Because every row coefficient is
// nonnegative the iterates stay in the nonnegative orthant on their own; the
// orthant set is still cycled for safety.
inline std::vector<double> min_norm_gradient_l2(const FiniteMetricMeasureSpace& s, const ConstraintSystem& sys) {
  const int n = s.n;
  const int R = static_cast<int>(sys.rows.size());
  std::vector<double> x(n, 0.0);
  std::vector<std::vector<double>> corr(static_cast<std::size_t>(R) + 1, std::vector<double>(n, 0.0));
  const double viol_tol = 1e-10 * sys.b_scale;
  std::vector<double> prev(n, 0.0);
  for (int sweep = 0; sweep < 100000; ++sweep) {
    prev = x;
    for (int r = 0; r <= R; ++r) {
      std::vector<double> y(n);
      for (int i = 0; i < n; ++i) y[i] = x[i] + corr[r][i];
      std::vector<double> next = y;
      if (r < R) {
        project_halfspace(s, sys.rows[r], next);
      } else {
        for (int i = 0; i < n; ++i) next[i] = std::max(next[i], 0.0);
      }
      for (int i = 0; i < n; ++i) corr[r][i] = y[i] - next[i];
      x = std::move(next);
    }
    double change = 0.0;
    double scale = 1.0;
    for (int i = 0; i < n; ++i) {
      change = std::max(change, std::fabs(x[i] - prev[i]));
      scale = std::max(scale, std::fabs(x[i]));
    }
    if (max_residual(sys, x) <= viol_tol && change <= 1e-13 * scale) break;
  }
  for (int i = 0; i < n; ++i) x[i] = std::max(x[i], 0.0);
  return x;
}

// Restore feasibility after a descent step by cycling the half-space
// projections. Projections only raise coordinates, so the orthant clamp at the
// start cannot be undone.
inline void restore_feasibility(const FiniteMetricMeasureSpace& s, const ConstraintSystem& sys,
                                std::vector<double>& x, double tol, int max_sweeps) {
  for (int i = 0; i < s.n; ++i) x[i] = std::max(x[i], 0.0);
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    for (const GradientRow& row : sys.rows) project_halfspace(s, row, x);
    if (max_residual(sys, x) <= tol) break;
  }
}

// Projected subgradient descent on sum_i G_i^p w_i over the constraint
// polytope, with diminishing steps c/sqrt(k) and a deterministic schedule of
// five restarts that polish the best iterate found so far.
inline std::vector<double> min_norm_gradient_p(const FiniteMetricMeasureSpace& s, const ConstraintSystem& sys,
                                               double p, std::vector<double> start) {
  const int n = s.n;
  auto objective = [&](const std::vector<double>& x) {
    double o = 0.0;
    for (int i = 0; i < n; ++i) o += std::pow(x[i], p) * s.w(i);
    return o;
  };
  const double feas_tol = 1e-9 * sys.b_scale;
  const double pocs_tol = 1e-11 * sys.b_scale;
  restore_feasibility(s, sys, start, pocs_tol, 500);
  std::vector<double> best = start;
  double best_obj = objective(best);
  double scale0 = 1e-3;
  for (int i = 0; i < n; ++i) scale0 = std::max(scale0, start[i]);
  const double schedule[5] = {0.5, 0.2, 0.08, 0.03, 0.01};
  std::vector<double> grad(n, 0.0);
  for (double c : schedule) {
    std::vector<double> x = best;
    for (int k = 1; k <= 1200; ++k) {
      double gnorm = 0.0;
      for (int i = 0; i < n; ++i) {
        grad[i] = p * std::pow(x[i], p - 1.0) * s.w(i);
        gnorm += grad[i] * grad[i];
      }
      gnorm = std::sqrt(gnorm);
      if (gnorm < 1e-18) break;
      const double step = c * scale0 / (std::sqrt(static_cast<double>(k)) * gnorm);
      for (int i = 0; i < n; ++i) x[i] -= step * grad[i];
      restore_feasibility(s, sys, x, pocs_tol, 200);
      if (max_residual(sys, x) <= feas_tol) {
        const double obj = objective(x);
        if (obj < best_obj) {
          best_obj = obj;
          best = x;
        }
      }
    }
  }
  return best;
}

}  // namespace detail

struct UpperGradientReport {
  double lhs = 0.0;           // mean endpoint increment of f over the plan
  double rhs = 0.0;           // curve integral of G, left-node quadrature
  bool holds = false;         // lhs <= rhs + 1e-9
  double deficit = 0.0;       // max(lhs - rhs, 0)
  double comp = 0.0;          // compression constant of the plan
  double ke = 0.0;            // q-kinetic energy of the plan
  double norm_g = 0.0;        // weighted L^p norm of G
  double holder_split = 0.0;  // comp^{1/p} * norm_g * ke^{1/q}
  double holder_plain = 0.0;  // comp * norm_g * ke^{1/q}
};

// Checks the defining inequality of a weak upper gradient on one test plan
// and reports both Hoelder majorants of the right side (they bound it only
// when p and the plan's q are conjugate; the report does not assert that).
inline UpperGradientReport upper_gradient_check(const FiniteMetricMeasureSpace& s, const RealFunction& f,
                                                const GradientCandidate& G, const TestPlan& plan) {
  detail::check_function(s, f, "upper_gradient_check");
  detail::check_gradient(s, G, "upper_gradient_check");
  check_plan(plan);
  const detail::GradientRow row = detail::gradient_row(s, f, plan);
  UpperGradientReport rep;
  rep.lhs = row.b;
  rep.rhs = detail::row_value(row, G.values);
  rep.holds = rep.lhs <= rep.rhs + 1e-9;
  rep.deficit = std::max(rep.lhs - rep.rhs, 0.0);
  rep.comp = compression(s, plan);
  rep.ke = plan_kinetic_energy(s, plan);
  rep.norm_g = weighted_p_norm(s, G.values, G.p);
  const double ke_q = std::pow(rep.ke, 1.0 / plan.q);
  rep.holder_split = std::pow(rep.comp, 1.0 / G.p) * rep.norm_g * ke_q;
  rep.holder_plain = rep.comp * rep.norm_g * ke_q;
  return rep;
}

// Minimal p-weak upper gradient over a finite plan family: minimize the
// weighted p-norm of G subject to the upper-gradient inequality for every
// plan and G >= 0. Exact alternating projections for p = 2; projected
// subgradient polishing for other exponents, started from the p = 2 point.
inline GradientCandidate minimal_weak_upper_gradient(const FiniteMetricMeasureSpace& s, const RealFunction& f,
                                                     double p, const PlanFamily& family) {
  detail::check_function(s, f, "minimal_weak_upper_gradient");
  if (!(p >= 1.0) || !std::isfinite(p))
    throw std::invalid_argument("minimal_weak_upper_gradient: p must be finite and >= 1");
  if (family.plans.empty()) throw std::invalid_argument("minimal_weak_upper_gradient: family must be nonempty");
  for (const TestPlan& plan : family.plans) check_plan(plan);

  GradientCandidate out;
  out.p = p;
  const detail::ConstraintSystem sys = detail::gradient_constraints(s, f, family);
  if (sys.rows.empty()) {
    out.values.assign(s.n, 0.0);
    return out;
  }
  std::vector<double> x = detail::min_norm_gradient_l2(s, sys);
  if (std::fabs(p - 2.0) > 1e-12) x = detail::min_norm_gradient_p(s, sys, p, std::move(x));
  const double residual = detail::max_residual(sys, x);
  if (residual > 1e-7 * sys.b_scale) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "minimal_weak_upper_gradient: solver did not converge (max residual %.3e)",
                  residual);
    throw std::runtime_error(buf);
  }
  for (double& v : x) v = std::max(v, 0.0);
  out.values = std::move(x);
  return out;
}

struct GradientComparisonReport {
  GradientCandidate g1;    // minimal gradient at exponent p1
  GradientCandidate g2;    // minimal gradient at exponent p2
  double p1 = 0.0;
  double p2 = 0.0;
  double norm1 = 0.0;      // ||g1||_{p1}
  double norm2 = 0.0;      // ||g2||_{p2}
  double cross_norm = 0.0; // ||g2||_{p1}
  double neg_gap = 0.0;    // ||min(g2 - g1, 0)||_inf
  double agree_gap = 0.0;  // ||g2 - g1||_inf
  bool solver_monotone = false;  // norm1 <= cross_norm up to solver slack
  bool agree = false;            // agree_gap <= agree_tol
  double agree_tol = 0.0;
};

// Solves the same constrained program at two exponents. The feasible set does
// not depend on p, so the p1-norm of the p1 minimizer can never exceed the
// p1-norm of the p2 minimizer; that solver-level monotonicity is flagged,
// while the pointwise ordering is only reported via neg_gap.
inline GradientComparisonReport gradient_p_comparison(const FiniteMetricMeasureSpace& s, const RealFunction& f,
                                                      double p1, double p2, const PlanFamily& family,
                                                      double agree_tol = 2e-3) {
  if (!(p1 < p2)) throw std::invalid_argument("gradient_p_comparison: requires p1 < p2");
  GradientComparisonReport rep;
  rep.p1 = p1;
  rep.p2 = p2;
  rep.agree_tol = agree_tol;
  rep.g1 = minimal_weak_upper_gradient(s, f, p1, family);
  rep.g2 = minimal_weak_upper_gradient(s, f, p2, family);
  rep.norm1 = weighted_p_norm(s, rep.g1.values, p1);
  rep.norm2 = weighted_p_norm(s, rep.g2.values, p2);
  rep.cross_norm = weighted_p_norm(s, rep.g2.values, p1);
  for (int i = 0; i < s.n; ++i) {
    const double diff = rep.g2.values[i] - rep.g1.values[i];
    rep.neg_gap = std::max(rep.neg_gap, std::max(-diff, 0.0));
    rep.agree_gap = std::max(rep.agree_gap, std::fabs(diff));
  }
  rep.solver_monotone = rep.norm1 <= rep.cross_norm + 1e-6 * (1.0 + rep.cross_norm);
  rep.agree = rep.agree_gap <= agree_tol;
  return rep;
}

struct LeibnizReport {
  GradientCandidate gf;
  GradientCandidate gg;
  GradientCandidate gfg;
  std::vector<double> margins;  // |f| gg + |g| gf - gfg per atom
  double worst_margin = 0.0;
  bool pass = false;  // worst margin >= -1e-6
};

// Product-rule surrogate: computes the three minimal gradients against the
// same family and reports the pointwise margin of the Leibniz bound.
inline LeibnizReport leibniz_check(const FiniteMetricMeasureSpace& s, const RealFunction& f, const RealFunction& g,
                                   double p, const PlanFamily& family) {
  detail::check_function(s, f, "leibniz_check");
  detail::check_function(s, g, "leibniz_check");
  RealFunction fg;
  fg.values.resize(s.n);
  for (int i = 0; i < s.n; ++i) fg.values[i] = f.values[i] * g.values[i];
  LeibnizReport rep;
  rep.gf = minimal_weak_upper_gradient(s, f, p, family);
  rep.gg = minimal_weak_upper_gradient(s, g, p, family);
  rep.gfg = minimal_weak_upper_gradient(s, fg, p, family);
  rep.margins.resize(s.n);
  rep.worst_margin = std::numeric_limits<double>::infinity();
  for (int i = 0; i < s.n; ++i) {
    rep.margins[i] = std::fabs(f.values[i]) * rep.gg.values[i] + std::fabs(g.values[i]) * rep.gf.values[i] -
                     rep.gfg.values[i];
    rep.worst_margin = std::min(rep.worst_margin, rep.margins[i]);
  }
  rep.pass = rep.worst_margin >= -1e-6;
  return rep;
}

namespace detail {

// Hop counts (edge counts along shortest paths) from src over the edge list.
inline std::vector<int> graph_hops_from(int n, const std::vector<std::vector<int>>& adj, int src) {
  std::vector<int> hops(n, -1);
  hops[src] = 0;
  std::queue<int> frontier;
  frontier.push(src);
  while (!frontier.empty()) {
    const int u = frontier.front();
    frontier.pop();
    for (int v : adj[u])
      if (hops[v] < 0) {
        hops[v] = hops[u] + 1;
        frontier.push(v);
      }
  }
  return hops;
}

}  // namespace detail

// Deterministic family of optimal geodesic plans: every ordered atom pair in
// lexicographic order, then uniform-patch pairs by increasing width, truncated
// at pair_budget pairs, then closed under the time restrictions that split the
// grid into k equal blocks for each k up to depth dividing the plan's grid.
// Both orientations of each pair are kept: the left-node quadrature only sees
// departure points, so a one-directional family would leave terminal atoms
// unconstrained.
inline PlanFamily build_geod_family(const FiniteMetricMeasureSpace& s, double q, int depth, int pair_budget) {
  if (!s.has_graph()) throw std::invalid_argument("build_geod_family: requires a graph-backed space");
  if (depth < 1) throw std::invalid_argument("build_geod_family: depth must be >= 1");
  if (pair_budget < 1) throw std::invalid_argument("build_geod_family: pair_budget must be >= 1");
  if (s.n < 2) throw std::invalid_argument("build_geod_family: needs at least two atoms");

  std::vector<std::vector<int>> adj(s.n);
  for (const Edge& e : s.edge_list) {
    if (e.u == e.v) continue;
    adj[e.u].push_back(e.v);
    adj[e.v].push_back(e.u);
  }
  std::vector<std::vector<int>> hops(s.n);
  for (int i = 0; i < s.n; ++i) hops[i] = detail::graph_hops_from(s.n, adj, i);

  struct PairSpec {
    ProbMeasure mu0;
    ProbMeasure mu1;
    int T = 0;
    std::string tag;
  };
  std::vector<PairSpec> specs;
  auto budget_left = [&]() { return static_cast<int>(specs.size()) < pair_budget; };

  for (int i = 0; i < s.n && budget_left(); ++i)
    for (int j = 0; j < s.n && budget_left(); ++j) {
      if (i == j || hops[i][j] < 0) continue;
      specs.push_back({dirac(s.n, i), dirac(s.n, j), hops[i][j],
                       "atom(" + std::to_string(i) + "," + std::to_string(j) + ")"});
    }
  for (int width = 2; width < s.n && budget_left(); ++width)
    for (int a = 0; a + width <= s.n && budget_left(); ++a)
      for (int b = 0; b + width <= s.n && budget_left(); ++b) {
        if (a == b) continue;
        int worst = 0;
        bool reachable = true;
        for (int i = a; i < a + width && reachable; ++i)
          for (int j = b; j < b + width; ++j) {
            if (hops[i][j] < 0) {
              reachable = false;
              break;
            }
            worst = std::max(worst, hops[i][j]);
          }
        if (!reachable || worst == 0) continue;
        specs.push_back({uniform_patch(s.n, a, width), uniform_patch(s.n, b, width), worst,
                         "patch(" + std::to_string(width) + "," + std::to_string(a) + "," + std::to_string(b) +
                             ")"});
      }
  if (specs.empty()) throw std::invalid_argument("build_geod_family: no transportable pairs found");

  PlanFamily fam;
  auto push = [&](TestPlan plan, std::string tag) {
    fam.comp.push_back(compression(s, plan));
    fam.ke.push_back(plan_kinetic_energy(s, plan));
    fam.plans.push_back(std::move(plan));
    fam.tags.push_back(std::move(tag));
  };
  for (const PairSpec& spec : specs) push(optgeo_plan(s, q, spec.mu0, spec.mu1, spec.T).plan, spec.tag);

  const int base_count = fam.size();
  for (int bi = 0; bi < base_count; ++bi)
    for (int k = 2; k <= depth; ++k) {
      if (fam.plans[bi].T % k != 0) continue;
      for (int i = 1; i <= k; ++i) {
        TestPlan r = restrict_plan(fam.plans[bi], static_cast<double>(i - 1) / k, static_cast<double>(i) / k);
        push(std::move(r), fam.tags[bi] + "|restr(" + std::to_string(i) + "/" + std::to_string(k) + ")");
      }
    }
  return fam;
}

struct MasterPlanResult {
  TestPlan plan;
  std::vector<double> lambda;   // unnormalized member weights 1/(2^k max{comp, ke, 1})
  double normalization = 0.0;   // sum of the lambda
  double comp_bound = 0.0;      // 1/normalization, the guaranteed compression bound
  double comp = 0.0;            // achieved compression of the mixture
};

// Normalized weighted mixture of the family, one shared time grid. Member k
// (1-based, in stored order) enters with weight 1/(2^k max{Comp_k, Ke_k, 1});
// curves are resampled to the least common grid by holding each node until
// its step completes, which leaves endpoint increments and left-node curve
// integrals of every member unchanged.
inline MasterPlanResult build_master_plan(const FiniteMetricMeasureSpace& s, const PlanFamily& family, double q) {
  if (family.plans.empty()) throw std::invalid_argument("build_master_plan: family must be nonempty");
  long long grid = 1;
  for (const TestPlan& plan : family.plans) {
    check_plan(plan);
    if (plan.T < 1) throw std::invalid_argument("build_master_plan: plans must have at least one step");
    grid = std::lcm(grid, static_cast<long long>(plan.T));
    if (grid > 1000000) throw std::runtime_error("build_master_plan: common time grid would exceed 1e6 steps");
  }

  MasterPlanResult out;
  const int master_T = static_cast<int>(grid);
  TestPlan mixture;
  mixture.T = master_T;
  mixture.q = q;
  for (int k = 0; k < family.size(); ++k) {
    const TestPlan& plan = family.plans[k];
    const double comp_k = compression(s, plan);
    const double ke_k = plan_kinetic_energy(s, plan);
    const double lambda = 1.0 / (std::pow(2.0, k + 1) * std::max({comp_k, ke_k, 1.0}));
    out.lambda.push_back(lambda);
    out.normalization += lambda;
    for (int c = 0; c < plan.size(); ++c) {
      DiscreteCurve lifted;
      lifted.nodes.resize(master_T + 1);
      for (int j = 0; j <= master_T; ++j) {
        const long long parent = static_cast<long long>(j) * plan.T / master_T;
        lifted.nodes[j] = plan.curves[c].nodes[static_cast<std::size_t>(parent)];
      }
      mixture.curves.push_back(std::move(lifted));
      mixture.probs.push_back(lambda * plan.probs[c]);
    }
  }
  for (double& prob : mixture.probs) prob /= out.normalization;
  out.plan = merge_duplicate_curves(mixture);
  out.comp_bound = 1.0 / out.normalization;
  out.comp = compression(s, out.plan);
  return out;
}

struct MasterPlanCheckReport {
  std::vector<double> curve_margin;  // per master curve: curve integral minus endpoint increment
  double worst_curve_margin = 0.0;
  int worst_curve = -1;
  bool per_curve_pass = false;      // every master curve satisfies the inequality
  std::vector<bool> family_holds;   // integrated inequality per family member
  bool family_pass = false;
  bool consistent = false;  // per-curve pass forces family pass
};

// Per-curve certificate: if every curve the master plan charges satisfies the
// pointwise inequality, the integrated inequality follows for every family
// member, because each member's curves appear in the master support with
// positive weight.
inline MasterPlanCheckReport master_plan_check(const FiniteMetricMeasureSpace& s, const RealFunction& f,
                                               const GradientCandidate& G, const TestPlan& master,
                                               const PlanFamily& family) {
  detail::check_function(s, f, "master_plan_check");
  detail::check_gradient(s, G, "master_plan_check");
  check_plan(master);
  MasterPlanCheckReport rep;
  rep.per_curve_pass = true;
  rep.worst_curve_margin = std::numeric_limits<double>::infinity();
  for (int c = 0; c < master.size(); ++c) {
    const std::vector<int>& nodes = master.curves[c].nodes;
    const double lhs = std::fabs(f.values[nodes.back()] - f.values[nodes.front()]);
    double rhs = 0.0;
    for (std::size_t j = 0; j + 1 < nodes.size(); ++j)
      rhs += G.values[nodes[j]] * s.d(nodes[j], nodes[j + 1]);
    const double margin = rhs - lhs;
    rep.curve_margin.push_back(margin);
    if (margin < rep.worst_curve_margin) {
      rep.worst_curve_margin = margin;
      rep.worst_curve = c;
    }
    if (lhs > rhs + 1e-9) rep.per_curve_pass = false;
  }
  rep.family_pass = true;
  for (const TestPlan& plan : family.plans) {
    const bool holds = upper_gradient_check(s, f, G, plan).holds;
    rep.family_holds.push_back(holds);
    rep.family_pass = rep.family_pass && holds;
  }
  rep.consistent = !rep.per_curve_pass || rep.family_pass;
  return rep;
}

struct ClarksonReport {
  double p = 0.0;
  bool high_case = false;  // p >= 2 branch
  double lhs = 0.0;
  double rhs = 0.0;
  double margin = 0.0;  // rhs - lhs
  bool pass = false;    // margin >= -1e-9
};

// Clarkson convexity check on weighted L^p norms. Inputs are the pointwise
// Euclidean norms of two fields and of their sum and difference; they must
// satisfy the pointwise parallelogram identity, which is automatic when the
// caller builds them from genuine vectors.
inline ClarksonReport clarkson_check(const FiniteMetricMeasureSpace& s, const std::vector<double>& omega,
                                     const std::vector<double>& eta, const std::vector<double>& sum_norm,
                                     const std::vector<double>& diff_norm, double p) {
  if (static_cast<int>(omega.size()) != s.n || static_cast<int>(eta.size()) != s.n ||
      static_cast<int>(sum_norm.size()) != s.n || static_cast<int>(diff_norm.size()) != s.n)
    throw std::invalid_argument("clarkson_check: all fields must match the space size");
  if (!(p > 1.0) || !std::isfinite(p)) throw std::invalid_argument("clarkson_check: p must be finite and > 1");
  for (int i = 0; i < s.n; ++i) {
    if (omega[i] < 0.0 || eta[i] < 0.0 || sum_norm[i] < 0.0 || diff_norm[i] < 0.0)
      throw std::invalid_argument("clarkson_check: pointwise norms must be nonnegative");
    const double gap = 2.0 * omega[i] * omega[i] + 2.0 * eta[i] * eta[i] - sum_norm[i] * sum_norm[i] -
                       diff_norm[i] * diff_norm[i];
    if (std::fabs(gap) > 1e-10) {
      char buf[160];
      std::snprintf(buf, sizeof(buf), "clarkson_check: parallelogram identity violated at atom %d (gap %.3e)", i,
                    gap);
      throw std::invalid_argument(buf);
    }
  }
  auto powsum = [&](const std::vector<double>& v, double half) {
    double acc = 0.0;
    for (int i = 0; i < s.n; ++i) acc += std::pow(v[i] * half, p) * s.w(i);
    return acc;
  };
  ClarksonReport rep;
  rep.p = p;
  rep.high_case = p >= 2.0;
  if (rep.high_case) {
    rep.lhs = powsum(sum_norm, 0.5) + powsum(diff_norm, 0.5);
    rep.rhs = 0.5 * powsum(omega, 1.0) + 0.5 * powsum(eta, 1.0);
  } else {
    const double conj = p / (p - 1.0);
    rep.lhs = std::pow(powsum(sum_norm, 0.5), conj / p) + std::pow(powsum(diff_norm, 0.5), conj / p);
    rep.rhs = std::pow(0.5 * powsum(omega, 1.0) + 0.5 * powsum(eta, 1.0), 1.0 / (p - 1.0));
  }
  rep.margin = rep.rhs - rep.lhs;
  rep.pass = rep.margin >= -1e-9;
  return rep;
}

struct GalleryInstance {
  FiniteMetricMeasureSpace space;
  PlanFamily family;
};

// Counterexample gallery: a unit-spacing line whose atom weights alternate
// between 1 and `low`, paired with the family of all two-step geodesic plans
// in both directions. Every constraint couples two neighboring atoms, so the
// minimal gradient can trade mass between heavy and light atoms and different
// exponents genuinely disagree. The resulting gap is reported descriptively;
// no inequality is claimed for it.
inline GalleryInstance oscillating_weight_gallery(int n, double low, double q) {
  if (n < 3) throw std::invalid_argument("oscillating_weight_gallery: needs at least three atoms");
  if (!(low > 0.0)) throw std::invalid_argument("oscillating_weight_gallery: low weight must be positive");
  std::vector<double> weight(n);
  for (int i = 0; i < n; ++i) weight[i] = (i % 2 == 0) ? 1.0 : low;
  GalleryInstance g;
  g.space = make_line(n, 1.0, weight);
  auto push = [&](int from, int to) {
    TestPlan plan = optgeo_plan(g.space, q, dirac(n, from), dirac(n, to), 2).plan;
    g.family.comp.push_back(compression(g.space, plan));
    g.family.ke.push_back(plan_kinetic_energy(g.space, plan));
    g.family.plans.push_back(std::move(plan));
    g.family.tags.push_back("osc(" + std::to_string(from) + "," + std::to_string(to) + ")");
  };
  for (int i = 0; i + 2 < n; ++i) {
    push(i, i + 2);
    push(i + 2, i);
  }
  return g;
}

struct DepthDiagnosticRow {
  int depth = 0;
  int family_size = 0;
  double norm = 0.0;       // weighted p-norm of the minimal gradient at this depth
  double delta_inf = 0.0;  // sup-norm change versus the previous depth
};

// Stability-in-depth diagnostic for the minimal gradient: how much the
// solution moves as the restriction closure deepens. There is no known a
// priori sufficient depth, so the trend is reported rather than judged.
inline std::vector<DepthDiagnosticRow> gradient_depth_diagnostic(const FiniteMetricMeasureSpace& s,
                                                                 const RealFunction& f, double p, double q,
                                                                 int max_depth, int pair_budget) {
  if (max_depth < 1) throw std::invalid_argument("gradient_depth_diagnostic: max_depth must be >= 1");
  std::vector<DepthDiagnosticRow> rows;
  std::vector<double> prev;
  for (int depth = 1; depth <= max_depth; ++depth) {
    const PlanFamily fam = build_geod_family(s, q, depth, pair_budget);
    const GradientCandidate g = minimal_weak_upper_gradient(s, f, p, fam);
    DepthDiagnosticRow row;
    row.depth = depth;
    row.family_size = fam.size();
    row.norm = weighted_p_norm(s, g.values, p);
    if (!prev.empty())
      for (int i = 0; i < s.n; ++i) row.delta_inf = std::max(row.delta_inf, std::fabs(g.values[i] - prev[i]));
    prev = g.values;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace bip
