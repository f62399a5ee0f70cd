#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "bip/curvature.hpp"
#include "bip/curves.hpp"
#include "bip/lp.hpp"
#include "bip/measure.hpp"
#include "bip/transport.hpp"

namespace bip {

// Feasibility tolerance on the excess-mass minimum: below this the density cap
// counts as achieved.
inline constexpr double kExcessTol = 1e-8;
// Relative slack used when interpolant densities are compared against a
// profile bound; absorbs LP rounding.
inline constexpr double kDensitySlack = 1e-6;
// Membership tolerance for the t-intermediate set.
inline constexpr double kIntermediateTol = 1e-8;

// ---------------------------------------------------------------------------
// Profile functions

struct ProfileFunction {
  ProfileKind kind = ProfileKind::cd_infty;
  double K = 0.0;
  double N = 0.0;
  std::vector<std::pair<double, double>> samples;  // (D, C(D)), ascending in D

  double evaluate(double D) const {
    if (kind != ProfileKind::sampled) return profile(kind, K, N, D);
    if (samples.empty()) throw std::logic_error("profile: sampled profile without samples");
    for (const auto& [d, c] : samples)
      if (d >= D - 1e-12) return c;
    return samples.back().second;
  }
};

inline ProfileFunction profile_cd_infty(double K) {
  ProfileFunction p;
  p.kind = ProfileKind::cd_infty;
  p.K = K;
  return p;
}

inline ProfileFunction profile_mcp(double K, double N) {
  if (!(N >= 1.0)) throw std::invalid_argument("profile_mcp: N must be >= 1");
  ProfileFunction p;
  p.kind = ProfileKind::mcp;
  p.K = K;
  p.N = N;
  return p;
}

inline ProfileFunction profile_cd_negative(double K, double N) {
  if (!(N < 0.0)) throw std::invalid_argument("profile_cd_negative: N must be negative");
  ProfileFunction p;
  p.kind = ProfileKind::cd_negative;
  p.K = K;
  p.N = N;
  return p;
}

// Sorts by D, clamps below at 1, and applies the nondecreasing envelope.
inline ProfileFunction profile_sampled(std::vector<std::pair<double, double>> samples) {
  if (samples.empty()) throw std::invalid_argument("profile_sampled: need at least one sample");
  std::sort(samples.begin(), samples.end());
  double run = 1.0;
  for (auto& [d, c] : samples) {
    if (!(d >= 0.0) || !std::isfinite(c)) throw std::invalid_argument("profile_sampled: bad sample");
    run = std::max(run, c);
    c = run;
  }
  ProfileFunction p;
  p.kind = ProfileKind::sampled;
  p.samples = std::move(samples);
  return p;
}

// ---------------------------------------------------------------------------
// Small helpers

inline double cos_product(double theta, int n) {
  if (n < 1) throw std::invalid_argument("cos_product: n must be >= 1");
  double p = 1.0;
  for (int i = 1; i <= n; ++i) p *= std::cos(std::ldexp(theta, -i));
  return p;
}

namespace detail {

inline std::vector<int> support_union(const ProbMeasure& a, const ProbMeasure& b) {
  std::vector<int> u;
  for (int i = 0; i < a.n(); ++i)
    if (a.mass[i] > 0.0 || b.mass[i] > 0.0) u.push_back(i);
  return u;
}

// Minimum-cost coupling for an arbitrary cost on the support pairs, via the
// transportation simplex.
inline Coupling min_cost_coupling(const FiniteMetricMeasureSpace& s, const ProbMeasure& mu0, const ProbMeasure& mu1,
                                  const std::function<double(int, int)>& cost_fn, double* total_cost = nullptr) {
  std::vector<int> rows = mu0.support(), cols = mu1.support();
  const int R = static_cast<int>(rows.size()), C = static_cast<int>(cols.size());
  std::vector<double> a(R), b(C);
  for (int r = 0; r < R; ++r) a[r] = mu0.mass[rows[r]];
  for (int c = 0; c < C; ++c) b[c] = mu1.mass[cols[c]];
  Matrix cost(R, C);
  for (int r = 0; r < R; ++r)
    for (int c = 0; c < C; ++c) cost(r, c) = cost_fn(rows[r], cols[c]);
  TransportSimplex simplex(a, b, cost);
  simplex.solve();
  Coupling out;
  out.plan = Matrix(s.n, s.n, 0.0);
  double total = 0.0;
  for (int r = 0; r < R; ++r)
    for (int c = 0; c < C; ++c)
      if (simplex.flow(r, c) > 0.0) {
        out.plan(rows[r], cols[c]) = simplex.flow(r, c);
        total += simplex.flow(r, c) * cost(r, c);
      }
  if (total_cost != nullptr) *total_cost = total;
  out.source = mu0;
  out.target = mu1;
  return out;
}

}  // namespace detail

// Markov composition of two couplings sharing a middle marginal.
inline Coupling compose_couplings(const Coupling& left, const Coupling& right) {
  const int n = left.plan.rows;
  if (right.plan.rows != n) throw std::invalid_argument("compose_couplings: size mismatch");
  Coupling out;
  out.plan = Matrix(n, n, 0.0);
  for (int k = 0; k < n; ++k) {
    double mk = 0.0;
    for (int i = 0; i < n; ++i) mk += left.plan(i, k);
    if (mk <= 0.0) continue;
    for (int i = 0; i < n; ++i) {
      const double l = left.plan(i, k);
      if (l <= 0.0) continue;
      for (int j = 0; j < n; ++j) {
        const double r = right.plan(k, j);
        if (r > 0.0) out.plan(i, j) += l * r / mk;
      }
    }
  }
  out.source = left.source;
  out.target = right.target;
  return out;
}

// ---------------------------------------------------------------------------
// Optimal geodesic plans

struct OptGeoResult {
  TestPlan plan;
  double wq = 0.0;
  double wq_pow = 0.0;
  double energy = 0.0;  // plan_kinetic_energy of the returned plan
  double slack = 0.0;   // |energy - wq_pow|, the discretization slack
};

// Lifts a W_q-optimal coupling to shortest-path curves on the T-step grid.
// Among the optimal couplings, the one minimizing the discrete curve energy is
// selected, so the reported slack is the smallest this grid can achieve.
inline OptGeoResult optgeo_plan(const FiniteMetricMeasureSpace& s, double q, const ProbMeasure& mu0,
                                const ProbMeasure& mu1, int T) {
  if (T < 1) throw std::invalid_argument("optgeo_plan: T must be >= 1");
  if (!s.has_graph()) throw std::invalid_argument("optgeo_plan: graph metric required");
  std::vector<int> rows = mu0.support(), cols = mu1.support();
  for (int r : rows)
    for (int c : cols)
      if (!std::isfinite(s.d(r, c))) throw std::invalid_argument("optgeo_plan: supports are disconnected");
  TransportResult tr = wasserstein(s, q, mu0, mu1);

  const int R = static_cast<int>(rows.size()), C = static_cast<int>(cols.size());
  std::vector<std::vector<DiscreteCurve>> curve(R, std::vector<DiscreteCurve>(C));
  Matrix energy_cost(R, C);
  for (int r = 0; r < R; ++r)
    for (int c = 0; c < C; ++c) {
      curve[r][c] = shortest_path_curve(s, rows[r], cols[c], T);
      energy_cost(r, c) = kinetic_energy(s, curve[r][c], q);
    }

  // Stage 2: among couplings of optimal d^q cost, minimize the discrete
  // energy. The cost cap carries a sliver of slack for simplex rounding.
  LinearProgram lp;
  lp.num_vars = R * C;
  lp.objective.resize(lp.num_vars);
  for (int r = 0; r < R; ++r)
    for (int c = 0; c < C; ++c) lp.objective[r * C + c] = energy_cost(r, c);
  for (int r = 0; r < R; ++r) {
    LPRow row;
    row.sense = LPSense::eq;
    row.rhs = mu0.mass[rows[r]];
    for (int c = 0; c < C; ++c) row.coef.push_back({r * C + c, 1.0});
    lp.rows.push_back(row);
  }
  for (int c = 0; c < C; ++c) {
    LPRow row;
    row.sense = LPSense::eq;
    row.rhs = mu1.mass[cols[c]];
    for (int r = 0; r < R; ++r) row.coef.push_back({r * C + c, 1.0});
    lp.rows.push_back(row);
  }
  LPRow cost_row;
  cost_row.sense = LPSense::le;
  cost_row.rhs = tr.wq_pow * (1.0 + 1e-11) + 1e-13;
  for (int r = 0; r < R; ++r)
    for (int c = 0; c < C; ++c) cost_row.coef.push_back({r * C + c, std::pow(s.d(rows[r], cols[c]), q)});
  lp.rows.push_back(cost_row);

  LPSolution sol = solve_lp(lp);
  if (sol.status != LPStatus::optimal) throw std::runtime_error("optgeo_plan: coupling refinement LP failed");

  OptGeoResult out;
  out.plan.T = T;
  out.plan.q = q;
  double total = 0.0;
  // Entries below 1e-12 are simplex noise admitted by the cost-cap slack.
  for (int r = 0; r < R; ++r)
    for (int c = 0; c < C; ++c) {
      const double x = sol.x[r * C + c];
      if (x > 1e-12) {
        out.plan.curves.push_back(curve[r][c]);
        out.plan.probs.push_back(x);
        total += x;
      }
    }
  for (double& p : out.plan.probs) p /= total;
  out.plan = merge_duplicate_curves(out.plan);
  out.wq = tr.wq;
  out.wq_pow = tr.wq_pow;
  out.energy = plan_kinetic_energy(s, out.plan);
  out.slack = std::fabs(out.energy - out.wq_pow);
  return out;
}

// Interpolator that minimizes the discrete curve energy outright (no d^q
// optimality stage). Used where exact block-energy minimality matters, e.g.
// as the per-block interpolator of polygonal_approximation.
inline Interpolator energy_minimizing_interpolator(const FiniteMetricMeasureSpace& s, double q) {
  const FiniteMetricMeasureSpace* sp = &s;
  return [sp, q](const ProbMeasure& a, const ProbMeasure& b, int T) {
    std::vector<std::vector<DiscreteCurve>> cache(sp->n);
    auto curve_at = [&](int i, int j) -> const DiscreteCurve& {
      if (cache[i].empty()) cache[i].resize(sp->n);
      if (cache[i][j].nodes.empty()) cache[i][j] = shortest_path_curve(*sp, i, j, T);
      return cache[i][j];
    };
    Coupling cpl = detail::min_cost_coupling(*sp, a, b, [&](int i, int j) {
      return kinetic_energy(*sp, curve_at(i, j), q);
    });
    TestPlan plan;
    plan.T = T;
    plan.q = q;
    double total = 0.0;
    for (int i = 0; i < sp->n; ++i)
      for (int j = 0; j < sp->n; ++j) {
        const double x = cpl.plan(i, j);
        if (x > 1e-15) {
          plan.curves.push_back(curve_at(i, j));
          plan.probs.push_back(x);
          total += x;
        }
      }
    for (double& p : plan.probs) p /= total;
    return merge_duplicate_curves(plan);
  };
}

// ---------------------------------------------------------------------------
// t-intermediate measures

struct IntermediateReport {
  double t = 0.0;
  double wq = 0.0;  // W_q(mu0, mu1)
  double w0 = 0.0;  // W_q(mu0, mu)
  double w1 = 0.0;  // W_q(mu, mu1)
  double resid0 = 0.0;
  double resid1 = 0.0;
  bool member = false;
};

inline IntermediateReport intermediate_feasibility(const FiniteMetricMeasureSpace& s, double q, const ProbMeasure& mu0,
                                                   const ProbMeasure& mu1, const ProbMeasure& mu, double t,
                                                   double tol = kIntermediateTol) {
  if (!(t > 0.0 && t < 1.0)) throw std::invalid_argument("intermediate_feasibility: t must lie in (0,1)");
  IntermediateReport rep;
  rep.t = t;
  rep.wq = wasserstein(s, q, mu0, mu1).wq;
  rep.w0 = wasserstein(s, q, mu0, mu).wq;
  rep.w1 = wasserstein(s, q, mu, mu1).wq;
  rep.resid0 = std::fabs(rep.w0 - t * rep.wq);
  rep.resid1 = std::fabs(rep.w1 - (1.0 - t) * rep.wq);
  rep.member = rep.resid0 <= tol && rep.resid1 <= tol;
  return rep;
}

// ---------------------------------------------------------------------------
// Midpoint excess-mass LP

struct MidpointResult {
  ProbMeasure mid;
  double excess = 0.0;
  Coupling left;   // coupling of (mu0, mid)
  Coupling right;  // coupling of (mid, mu1)
  double wq = 0.0;
  double wq_pow = 0.0;
};

// Minimizes the mass of the midpoint density above the cap C over all
// measures mu that admit couplings to both endpoints at half the optimal
// cost. The two cost constraints are <=; the triangle inequality forces them
// to bind, so every feasible mu is a genuine metric midpoint.
inline MidpointResult midpoint_excess_min(const FiniteMetricMeasureSpace& s, double q, const ProbMeasure& mu0,
                                          const ProbMeasure& mu1, double C) {
  if (!(C >= 0.0)) throw std::invalid_argument("midpoint_excess_min: C must be nonnegative");
  if (mu0.n() != s.n || mu1.n() != s.n) throw std::invalid_argument("midpoint_excess_min: measure size mismatch");
  TransportResult tr = wasserstein(s, q, mu0, mu1);
  const double half_cost = tr.wq_pow / std::pow(2.0, q);
  const double cap = half_cost * (1.0 + 1e-11) + 1e-13;

  const std::vector<int> S0 = mu0.support(), S1 = mu1.support();
  const int R0 = static_cast<int>(S0.size()), R1 = static_cast<int>(S1.size()), n = s.n;
  // Variables: a0[r][k] (r in S0, k in X), a1[k][c] (k in X, c in S1), s[k].
  const int base0 = 0;
  const int base1 = R0 * n;
  const int base_s = base1 + n * R1;
  LinearProgram lp;
  lp.num_vars = base_s + n;
  lp.objective.assign(lp.num_vars, 0.0);
  for (int k = 0; k < n; ++k) lp.objective[base_s + k] = 1.0;

  for (int r = 0; r < R0; ++r) {
    LPRow row;
    row.sense = LPSense::eq;
    row.rhs = mu0.mass[S0[r]];
    for (int k = 0; k < n; ++k) row.coef.push_back({base0 + r * n + k, 1.0});
    lp.rows.push_back(row);
  }
  for (int k = 0; k < n; ++k) {
    LPRow row;
    row.sense = LPSense::eq;
    row.rhs = 0.0;
    for (int r = 0; r < R0; ++r) row.coef.push_back({base0 + r * n + k, 1.0});
    for (int c = 0; c < R1; ++c) row.coef.push_back({base1 + k * R1 + c, -1.0});
    lp.rows.push_back(row);
  }
  for (int c = 0; c < R1; ++c) {
    LPRow row;
    row.sense = LPSense::eq;
    row.rhs = mu1.mass[S1[c]];
    for (int k = 0; k < n; ++k) row.coef.push_back({base1 + k * R1 + c, 1.0});
    lp.rows.push_back(row);
  }
  for (int k = 0; k < n; ++k) {
    LPRow row;
    row.sense = LPSense::le;
    row.rhs = C * s.w(k);
    for (int r = 0; r < R0; ++r) row.coef.push_back({base0 + r * n + k, 1.0});
    row.coef.push_back({base_s + k, -1.0});
    lp.rows.push_back(row);
  }
  {
    LPRow row;
    row.sense = LPSense::le;
    row.rhs = cap;
    for (int r = 0; r < R0; ++r)
      for (int k = 0; k < n; ++k) row.coef.push_back({base0 + r * n + k, std::pow(s.d(S0[r], k), q)});
    lp.rows.push_back(row);
  }
  {
    LPRow row;
    row.sense = LPSense::le;
    row.rhs = cap;
    for (int k = 0; k < n; ++k)
      for (int c = 0; c < R1; ++c) row.coef.push_back({base1 + k * R1 + c, std::pow(s.d(k, S1[c]), q)});
    lp.rows.push_back(row);
  }

  LPSolution sol = solve_lp(lp);
  if (sol.status == LPStatus::infeasible)
    throw std::runtime_error("midpoint_excess_min: no midpoint measure exists at half the transport cost");
  if (sol.status != LPStatus::optimal) throw std::runtime_error("midpoint_excess_min: LP solver failed");

  MidpointResult out;
  std::vector<double> mid(n, 0.0);
  double total = 0.0;
  for (int k = 0; k < n; ++k) {
    double m = 0.0;
    for (int r = 0; r < R0; ++r) m += sol.x[base0 + r * n + k];
    // Atoms below 1e-9 are simplex noise admitted by the cost-row slack;
    // dropped so support-based quantities see the genuine support.
    if (m < 1e-9) m = 0.0;
    mid[k] = m;
    total += m;
  }
  for (double& m : mid) m /= total;
  out.mid = ProbMeasure{mid};
  out.excess = std::max(sol.objective, 0.0);
  out.left.plan = Matrix(n, n, 0.0);
  out.right.plan = Matrix(n, n, 0.0);
  for (int r = 0; r < R0; ++r)
    for (int k = 0; k < n; ++k) out.left.plan(S0[r], k) = std::max(sol.x[base0 + r * n + k], 0.0);
  for (int k = 0; k < n; ++k)
    for (int c = 0; c < R1; ++c) out.right.plan(k, S1[c]) = std::max(sol.x[base1 + k * R1 + c], 0.0);
  out.left.source = mu0;
  out.left.target = out.mid;
  out.right.source = out.mid;
  out.right.target = mu1;
  out.wq = tr.wq;
  out.wq_pow = tr.wq_pow;
  return out;
}

// ---------------------------------------------------------------------------
// Redistribution of plan mass against an alternative intermediate measure

// Removes the f-weighted part of the plan at time t and replaces it with mu,
// which must itself be a t-intermediate of the conditioned endpoints. The
// output is certified to stay in the t-intermediate set of the full
// endpoints.
inline ProbMeasure redistribute(const FiniteMetricMeasureSpace& s, const TestPlan& plan, const std::vector<double>& f,
                                const ProbMeasure& mu, double t) {
  check_plan(plan);
  if (static_cast<int>(f.size()) != plan.size()) throw std::invalid_argument("redistribute: weight size mismatch");
  for (double x : f)
    if (!(x >= 0.0 && x <= 1.0)) throw std::invalid_argument("redistribute: weights must lie in [0,1]");
  double c = 0.0;
  for (int k = 0; k < plan.size(); ++k) c += f[k] * plan.probs[k];
  if (!(c > 0.0 && c < 1.0)) throw std::invalid_argument("redistribute: mixed mass must lie strictly in (0,1)");

  const double jt_real = t * plan.T;
  const int jt = static_cast<int>(std::lround(jt_real));
  if (std::fabs(jt_real - jt) > 1e-9) throw std::invalid_argument("redistribute: t is not on the plan grid");

  std::vector<double> m0(s.n, 0.0), m1(s.n, 0.0);
  for (int k = 0; k < plan.size(); ++k) {
    m0[plan.curves[k].nodes.front()] += f[k] * plan.probs[k] / c;
    m1[plan.curves[k].nodes.back()] += f[k] * plan.probs[k] / c;
  }
  IntermediateReport pre = intermediate_feasibility(s, plan.q, ProbMeasure{m0}, ProbMeasure{m1}, mu, t);
  if (!pre.member)
    throw std::invalid_argument("redistribute: mu is not a t-intermediate of the conditioned endpoints");

  std::vector<double> out(s.n, 0.0);
  for (int k = 0; k < plan.size(); ++k) out[plan.curves[k].nodes[jt]] += (1.0 - f[k]) * plan.probs[k];
  for (int i = 0; i < s.n; ++i) out[i] += c * mu.mass[i];
  ProbMeasure result{out};

  IntermediateReport post = intermediate_feasibility(s, plan.q, plan_marginal(plan, 0, s.n),
                                                     plan_marginal(plan, plan.T, s.n), result, t);
  if (!post.member)
    throw std::runtime_error("redistribute: output left the t-intermediate set (residuals " +
                             format_double(post.resid0) + ", " + format_double(post.resid1) + ")");
  return result;
}

// ---------------------------------------------------------------------------
// Dyadic density-bounded geodesics

struct DyadicLevelRecord {
  int level = 0;
  double cap_factor = 1.0;   // exp(K^- (2^{1-i} D)^2 / 8)
  double cap = 0.0;          // density cap handed to this level's LPs
  double achieved_sup = 0.0; // max sup-density among this level's midpoints
  double worst_excess = 0.0;
};

struct DyadicGeodesic {
  int level = 0;
  double q = 2.0;
  std::vector<ProbMeasure> measures;  // index k is time k / 2^level
  std::vector<DyadicLevelRecord> trace;
  Coupling endpoint_coupling;  // level-1 couplings composed through the midpoint
  double wq = 0.0;
  double wq_pow = 0.0;
  double diam = 0.0;       // diameter of the union of endpoint supports
  double base_norm = 0.0;  // max endpoint sup-density
  double max_sup = 0.0;    // max sup-density over every dyadic measure
  bool feasible = true;    // all level excesses below kExcessTol
  int witness_level = -1;
  int witness_point = -1;
  bool met_target = false;
  double c_target = std::numeric_limits<double>::infinity();

  int segments() const { return 1 << level; }
  double time_of(int k) const { return static_cast<double>(k) / segments(); }
  // Construction level that introduced grid index k (0 for the endpoints).
  int level_of(int k) const {
    if (k == 0 || k == segments()) return 0;
    int lev = level;
    while (k % 2 == 0) {
      k /= 2;
      --lev;
    }
    return lev;
  }
};

// Fills the dyadic grid by repeated midpoint LPs. Level i caps densities at
// exp(K^- (2^{1-i} D)^2 / 8) times the running bound; when cap_override is
// given it replaces the schedule as an absolute density cap at every level.
inline DyadicGeodesic dyadic_geodesic(const FiniteMetricMeasureSpace& s, double q, const ProbMeasure& mu0,
                                      const ProbMeasure& mu1, double K, int levels, double C_target,
                                      std::optional<double> cap_override = std::nullopt) {
  if (levels < 1) throw std::invalid_argument("dyadic_geodesic: levels must be >= 1");
  DyadicGeodesic geo;
  geo.level = levels;
  geo.q = q;
  geo.measures.assign((1 << levels) + 1, ProbMeasure{});
  geo.measures.front() = mu0;
  geo.measures.back() = mu1;
  geo.diam = diameter(s, detail::support_union(mu0, mu1));
  geo.base_norm = std::max(sup_density(s, mu0), sup_density(s, mu1));
  geo.max_sup = geo.base_norm;
  geo.c_target = C_target;

  const double kminus = K < 0.0 ? -K : 0.0;
  double running = geo.base_norm;
  for (int i = 1; i <= levels; ++i) {
    const double seg_d = std::ldexp(geo.diam, 1 - i);
    DyadicLevelRecord rec;
    rec.level = i;
    rec.cap_factor = std::exp(kminus * seg_d * seg_d / 8.0);
    rec.cap = cap_override.has_value() ? *cap_override : rec.cap_factor * running;
    const int stride = 1 << (levels - i);
    for (int a = 0; a + 2 * stride <= (1 << levels); a += 2 * stride) {
      const int b = a + 2 * stride, mid = a + stride;
      MidpointResult mr = midpoint_excess_min(s, q, geo.measures[a], geo.measures[b], rec.cap);
      geo.measures[mid] = mr.mid;
      rec.achieved_sup = std::max(rec.achieved_sup, sup_density(s, mr.mid));
      rec.worst_excess = std::max(rec.worst_excess, mr.excess);
      if (mr.excess > kExcessTol && geo.feasible) {
        geo.feasible = false;
        geo.witness_level = i;
        double worst = 0.0;
        for (int k = 0; k < s.n; ++k) {
          const double over = mr.mid.mass[k] - rec.cap * s.w(k);
          if (over > worst) {
            worst = over;
            geo.witness_point = k;
          }
        }
      }
      if (i == 1) {
        geo.endpoint_coupling = compose_couplings(mr.left, mr.right);
        geo.wq = mr.wq;
        geo.wq_pow = mr.wq_pow;
      }
    }
    geo.max_sup = std::max(geo.max_sup, rec.achieved_sup);
    running = std::max(running, rec.achieved_sup);
    geo.trace.push_back(rec);
  }
  geo.met_target = geo.max_sup <= C_target * geo.base_norm * (1.0 + kDensitySlack);
  return geo;
}

// ---------------------------------------------------------------------------
// BIP verification and profile estimation

struct BipPairReport {
  int index = 0;
  double D = 0.0;
  double profile_value = 0.0;  // C(D)
  double wq = 0.0;
  double worst_ratio = 0.0;  // max interpolant sup-density / endpoint sup-density
  bool lp_feasible = true;
  int witness_level = -1;
  int witness_point = -1;
  bool pass = false;
};

struct BipReport {
  double q = 2.0;
  int levels = 0;
  bool pass = false;
  std::vector<BipPairReport> pairs;
};

// Checks the bounded-interpolation inequality on each endpoint pair: every
// dyadic interpolant density must stay below C(D) times the endpoint density
// bound. Closed-form profiles drive the level caps through their curvature;
// sampled profiles are enforced as absolute caps.
inline BipReport bip_verify(const FiniteMetricMeasureSpace& s, double q,
                            const std::vector<std::pair<ProbMeasure, ProbMeasure>>& pairs,
                            const ProfileFunction& prof, int levels = 4) {
  BipReport rep;
  rep.q = q;
  rep.levels = levels;
  rep.pass = true;
  for (int idx = 0; idx < static_cast<int>(pairs.size()); ++idx) {
    const auto& [a, b] = pairs[idx];
    BipPairReport pr;
    pr.index = idx;
    pr.D = diameter(s, detail::support_union(a, b));
    pr.profile_value = prof.evaluate(pr.D);
    const double base = std::max(sup_density(s, a), sup_density(s, b));
    std::optional<double> cap_override;
    double cap_k = 0.0;
    if (prof.kind == ProfileKind::sampled) {
      cap_override = pr.profile_value * base;
    } else {
      cap_k = prof.K;
    }
    DyadicGeodesic geo = dyadic_geodesic(s, q, a, b, cap_k, levels, pr.profile_value, cap_override);
    pr.wq = geo.wq;
    pr.worst_ratio = geo.max_sup / geo.base_norm;
    pr.lp_feasible = geo.feasible;
    pr.witness_level = geo.witness_level;
    pr.witness_point = geo.witness_point;
    pr.pass = pr.worst_ratio <= pr.profile_value * (1.0 + kDensitySlack);
    rep.pass = rep.pass && pr.pass;
    rep.pairs.push_back(pr);
  }
  return rep;
}

// Empirical profile: for each D in the grid, the worst over sampled pairs of
// the smallest density cap (relative to the endpoint bound) for which the
// midpoint LP reaches zero excess. Bisection on the cap multiplier.
inline ProfileFunction bip_profile_estimate(const FiniteMetricMeasureSpace& s, double q,
                                            const std::vector<double>& D_grid, int sample_pairs_per_D,
                                            uint64_t seed = env_seed()) {
  if (D_grid.empty()) throw std::invalid_argument("bip_profile_estimate: empty grid");
  if (sample_pairs_per_D < 1) throw std::invalid_argument("bip_profile_estimate: need at least one pair per D");
  std::mt19937_64 rng = make_rng(seed);
  std::uniform_int_distribution<int> pick(0, s.n - 1);
  double min_w = std::numeric_limits<double>::infinity();
  for (int i = 0; i < s.n; ++i) min_w = std::min(min_w, s.w(i));

  std::vector<std::pair<double, double>> samples;
  for (double D : D_grid) {
    double worst = 1.0;
    for (int rep = 0; rep < sample_pairs_per_D; ++rep) {
      // Draw two uniform patches inside a ball of radius D/2, so the union
      // diameter never exceeds D.
      const int center = pick(rng);
      std::vector<int> ball;
      for (int y = 0; y < s.n; ++y)
        if (s.d(center, y) <= D / 2.0 + kStructuralTol) ball.push_back(y);
      std::uniform_int_distribution<int> inside(0, static_cast<int>(ball.size()) - 1);
      std::vector<double> m0(s.n, 0.0), m1(s.n, 0.0);
      const int k0 = 1 + inside(rng) % std::max<int>(1, static_cast<int>(ball.size()) / 2);
      const int k1 = 1 + inside(rng) % std::max<int>(1, static_cast<int>(ball.size()) / 2);
      for (int j = 0; j < k0; ++j) m0[ball[inside(rng)]] += 1.0;
      for (int j = 0; j < k1; ++j) m1[ball[inside(rng)]] += 1.0;
      for (double& x : m0) x /= k0;
      for (double& x : m1) x /= k1;
      ProbMeasure mu0{m0}, mu1{m1};
      const double base = std::max(sup_density(s, mu0), sup_density(s, mu1));

      double lo = 0.0, hi = 1.0 / (min_w * base);
      try {
        if (midpoint_excess_min(s, q, mu0, mu1, hi * base).excess > kExcessTol) continue;
      } catch (const std::runtime_error&) {
        continue;  // no midpoint measure at all on this pair
      }
      for (int it = 0; it < 50 && hi - lo > 1e-7 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (midpoint_excess_min(s, q, mu0, mu1, mid * base).excess <= kExcessTol)
          hi = mid;
        else
          lo = mid;
      }
      worst = std::max(worst, hi);
    }
    samples.push_back({D, worst});
  }
  return profile_sampled(std::move(samples));
}

// ---------------------------------------------------------------------------
// Measured Gromov-Hausdorff transfer (extrinsic model)

struct EmbeddedSpace {
  FiniteMetricMeasureSpace space;
  std::vector<int> to_ambient;
};

inline void validate_embedding(const EmbeddedSpace& e, const FiniteMetricMeasureSpace& ambient) {
  if (static_cast<int>(e.to_ambient.size()) != e.space.n)
    throw std::invalid_argument("embedding: index map size mismatch");
  std::vector<char> seen(ambient.n, 0);
  for (int i : e.to_ambient) {
    if (i < 0 || i >= ambient.n) throw std::invalid_argument("embedding: ambient index out of range");
    if (seen[i]) throw std::invalid_argument("embedding: ambient indices must be distinct");
    seen[i] = 1;
  }
  for (int i = 0; i < e.space.n; ++i)
    for (int j = i + 1; j < e.space.n; ++j)
      if (std::fabs(e.space.d(i, j) - ambient.d(e.to_ambient[i], e.to_ambient[j])) > kStructuralTol)
        throw std::invalid_argument("embedding: not isometric into the ambient space");
}

struct PmghTransferResult {
  ProbMeasure mu;           // on the target space
  double sup_density = 0.0; // of mu on the target
  double density_bound = 0.0;  // (z_limit / z_target) * input sup-density
  double z_limit = 0.0;
  double z_target = 0.0;
  double wq = 0.0;  // ambient W_q between the input and the transferred measure
};

// Moves mu_limit from the limit space onto the target space through a
// W_q-optimal coupling of the cutoff-weighted reference measures in the
// ambient metric.
inline PmghTransferResult pmgh_transfer(const EmbeddedSpace& target, const EmbeddedSpace& limit,
                                        const FiniteMetricMeasureSpace& ambient, const ProbMeasure& mu_limit,
                                        const RealFunction& cutoff_eta, double q) {
  validate_embedding(target, ambient);
  validate_embedding(limit, ambient);
  if (mu_limit.n() != limit.space.n) throw std::invalid_argument("pmgh_transfer: measure size mismatch");
  if (static_cast<int>(cutoff_eta.values.size()) != ambient.n)
    throw std::invalid_argument("pmgh_transfer: cutoff must be defined on the ambient space");
  for (double v : cutoff_eta.values)
    if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("pmgh_transfer: cutoff values must lie in [0,1]");
  for (int i : mu_limit.support())
    if (cutoff_eta.values[limit.to_ambient[i]] < 1.0 - kStructuralTol)
      throw std::invalid_argument("pmgh_transfer: cutoff must equal 1 on the support of the input measure");

  double z_l = 0.0, z_t = 0.0;
  for (int i = 0; i < limit.space.n; ++i) z_l += cutoff_eta.values[limit.to_ambient[i]] * limit.space.w(i);
  for (int k = 0; k < target.space.n; ++k) z_t += cutoff_eta.values[target.to_ambient[k]] * target.space.w(k);
  if (!(z_t > 0.0)) throw std::invalid_argument("pmgh_transfer: cutoff has zero mass on the target space");
  if (!(z_l > 0.0)) throw std::invalid_argument("pmgh_transfer: cutoff has zero mass on the limit space");

  // Cutoff-weighted reference measures, pushed into the ambient index set.
  std::vector<double> refl(ambient.n, 0.0), reft(ambient.n, 0.0);
  for (int i = 0; i < limit.space.n; ++i)
    refl[limit.to_ambient[i]] = cutoff_eta.values[limit.to_ambient[i]] * limit.space.w(i) / z_l;
  for (int k = 0; k < target.space.n; ++k)
    reft[target.to_ambient[k]] = cutoff_eta.values[target.to_ambient[k]] * target.space.w(k) / z_t;
  TransportResult ref_cpl = wasserstein(ambient, q, ProbMeasure{refl}, ProbMeasure{reft});

  std::vector<double> out(target.space.n, 0.0);
  double total = 0.0;
  for (int i : mu_limit.support()) {
    const int ai = limit.to_ambient[i];
    const double scale = mu_limit.mass[i] / refl[ai];  // d mu / d reference at i
    for (int k = 0; k < target.space.n; ++k) {
      const double flow = ref_cpl.coupling.plan(ai, target.to_ambient[k]);
      if (flow > 0.0) {
        out[k] += scale * flow;
        total += scale * flow;
      }
    }
  }
  for (double& x : out) x /= total;

  PmghTransferResult res;
  res.mu = ProbMeasure{out};
  res.sup_density = sup_density(target.space, res.mu);
  res.density_bound = (z_l / z_t) * sup_density(limit.space, mu_limit);
  res.z_limit = z_l;
  res.z_target = z_t;

  std::vector<double> amb_in(ambient.n, 0.0), amb_out(ambient.n, 0.0);
  for (int i = 0; i < limit.space.n; ++i) amb_in[limit.to_ambient[i]] += mu_limit.mass[i];
  for (int k = 0; k < target.space.n; ++k) amb_out[target.to_ambient[k]] += res.mu.mass[k];
  res.wq = wasserstein(ambient, q, ProbMeasure{amb_in}, ProbMeasure{amb_out}).wq;
  return res;
}

struct PmghPairReport {
  int index = 0;
  double D = 0.0;                    // on the limit space
  double tail_profile = 0.0;         // last profile in the sequence at this D
  std::vector<double> approx_ratio;  // worst interpolant ratio on each approximating space
  std::vector<char> approx_pass;
  std::vector<double> transfer_w0;  // ambient W_q(mu0, transferred mu0) per space
  std::vector<double> transfer_w1;
  double limit_ratio = 0.0;
  bool limit_pass = false;
};

struct PmghStabilityReport {
  bool pass = false;
  std::vector<PmghPairReport> pairs;
};

// Transfers each test pair to every approximating space, verifies the
// interpolation bound there with that space's profile, then checks the limit
// space against the tail profile of the sequence (the finite stand-in for the
// limsup hypothesis).
inline PmghStabilityReport pmgh_stability_check(const std::vector<EmbeddedSpace>& sequence,
                                                const std::vector<ProfileFunction>& profiles,
                                                const EmbeddedSpace& limit, const FiniteMetricMeasureSpace& ambient,
                                                double q,
                                                const std::vector<std::pair<ProbMeasure, ProbMeasure>>& pairs,
                                                int levels = 3) {
  if (sequence.size() != profiles.size())
    throw std::invalid_argument("pmgh_stability_check: one profile per space required");
  if (sequence.empty()) throw std::invalid_argument("pmgh_stability_check: empty sequence");
  RealFunction ones;
  ones.values.assign(ambient.n, 1.0);

  PmghStabilityReport rep;
  rep.pass = true;
  for (int idx = 0; idx < static_cast<int>(pairs.size()); ++idx) {
    const auto& [a, b] = pairs[idx];
    PmghPairReport pr;
    pr.index = idx;
    pr.D = diameter(limit.space, detail::support_union(a, b));
    pr.tail_profile = profiles.back().evaluate(pr.D);
    for (size_t n = 0; n < sequence.size(); ++n) {
      PmghTransferResult t0 = pmgh_transfer(sequence[n], limit, ambient, a, ones, q);
      PmghTransferResult t1 = pmgh_transfer(sequence[n], limit, ambient, b, ones, q);
      BipReport br = bip_verify(sequence[n].space, q, {{t0.mu, t1.mu}}, profiles[n], levels);
      pr.approx_ratio.push_back(br.pairs[0].worst_ratio);
      pr.approx_pass.push_back(br.pairs[0].pass ? 1 : 0);
      pr.transfer_w0.push_back(t0.wq);
      pr.transfer_w1.push_back(t1.wq);
      rep.pass = rep.pass && br.pairs[0].pass;
    }
    ProfileFunction tail = profile_sampled({{pr.D, pr.tail_profile}});
    BipReport lim = bip_verify(limit.space, q, {{a, b}}, tail, levels);
    pr.limit_ratio = lim.pairs[0].worst_ratio;
    pr.limit_pass = lim.pairs[0].pass;
    rep.pass = rep.pass && pr.limit_pass;
    rep.pairs.push_back(pr);
  }
  return rep;
}

}  // namespace bip
