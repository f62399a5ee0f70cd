// bip-lab: command-line front end for transport, interpolation, curvature,
// Sobolev, and measured-limit checks on finite metric measure spaces.
//
// Exit codes: 0 all checks passed, 1 at least one check failed (or a solver
// gave up), 2 malformed input. BIPLAB_SEED fixes every sampled quantity;
// BIPLAB_THREADS caps the report battery's parallelism.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "bip/curvature_checks.hpp"
#include "bip/generators.hpp"
#include "bip/interpolation.hpp"
#include "bip/json_io.hpp"
#include "bip/report.hpp"
#include "bip/sobolev.hpp"

namespace {

using namespace bip;

json rows_to_json(std::vector<CheckRow> rows) {
  std::stable_sort(rows.begin(), rows.end(),
                   [](const CheckRow& a, const CheckRow& b) { return a.check_id < b.check_id; });
  json out;
  out["pass"] = all_pass(rows);
  json checks = json::array();
  for (const CheckRow& r : rows) {
    json row;
    row["check_id"] = r.check_id;
    row["statement"] = r.statement;
    row["lhs"] = r.lhs;
    row["rhs"] = r.rhs;
    row["margin"] = r.margin;
    row["pass"] = r.pass;
    checks.push_back(std::move(row));
  }
  out["checks"] = std::move(checks);
  return out;
}

bool json_format(const std::string& out_path, const std::string& format, bool default_json) {
  if (format == "json") return true;
  if (format == "csv") return false;
  if (out_path.size() >= 5 && out_path.substr(out_path.size() - 5) == ".json") return true;
  if (out_path.size() >= 4 && out_path.substr(out_path.size() - 4) == ".csv") return false;
  return default_json;
}

void write_report(const std::vector<CheckRow>& rows, const std::string& out_path, const std::string& format,
                  bool default_json = false) {
  if (out_path.empty()) return;
  if (json_format(out_path, format, default_json))
    write_text_file(out_path, rows_to_json(rows).dump(2) + "\n");
  else
    write_text_file(out_path, emit_report_csv(rows));
}

std::string pad3(int k) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%03d", k);
  return buf;
}

// ---------------------------------------------------------------------------
// validate

struct ValidateArgs {
  std::string space;
  std::string out;
  std::string format;
  double tol = kStructuralTol;
};

int run_validate(const ValidateArgs& a) {
  const FiniteMetricMeasureSpace s = load_space(a.space);
  const ValidationReport rep = validate_space(s, a.tol);
  std::vector<CheckRow> rows;
  if (rep.pass()) {
    rows.push_back({"space-valid", "distance matrix is a metric and every weight is positive", 0.0, 0.0, 0.0,
                    true});
  } else {
    for (std::size_t k = 0; k < rep.issues.size(); ++k) {
      const ValidationIssue& issue = rep.issues[k];
      std::string what = issue.what;
      if (issue.i >= 0) what += " (i=" + std::to_string(issue.i) + ")";
      if (issue.j >= 0) what += " (j=" + std::to_string(issue.j) + ")";
      if (issue.k >= 0) what += " (k=" + std::to_string(issue.k) + ")";
      rows.push_back({"space-issue-" + pad3(static_cast<int>(k)), what, 0.0, 0.0, 0.0, false});
    }
  }
  write_report(rows, a.out, a.format);
  std::printf("%s: %d points, %s\n", a.space.c_str(), s.n,
              rep.pass() ? "valid" : (std::to_string(rep.issues.size()) + " issue(s)").c_str());
  return rep.pass() ? 0 : 1;
}

// ---------------------------------------------------------------------------
// wasserstein

struct WassersteinArgs {
  std::string space;
  std::string mu0;
  std::string mu1;
  std::string coupling;
  std::string out;
  double q = 2.0;
};

int run_wasserstein(const WassersteinArgs& a) {
  const FiniteMetricMeasureSpace s = load_space(a.space);
  const ProbMeasure m0 = load_measure(a.mu0, s.n);
  const ProbMeasure m1 = load_measure(a.mu1, s.n);
  const TransportResult res = wasserstein(s, a.q, m0, m1);
  std::printf("%s\n", format_double(res.wq).c_str());
  if (!a.coupling.empty()) {
    std::string csv = "i,j,mass\n";
    for (int i = 0; i < s.n; ++i)
      for (int j = 0; j < s.n; ++j)
        if (res.coupling.plan(i, j) > 0.0)
          csv += std::to_string(i) + "," + std::to_string(j) + "," + format_double(res.coupling.plan(i, j)) + "\n";
    write_text_file(a.coupling, csv);
  }
  if (!a.out.empty()) {
    json j;
    j["q"] = a.q;
    j["wq"] = res.wq;
    j["wq_pow"] = res.wq_pow;
    write_text_file(a.out, j.dump(2) + "\n");
  }
  return 0;
}

// ---------------------------------------------------------------------------
// interpolate

struct InterpolateArgs {
  std::string space;
  std::string mu0;
  std::string mu1;
  std::string out = "trace.csv";
  double q = 2.0;
  double K = 0.0;
  int levels = 4;
  double c_target = std::numeric_limits<double>::infinity();
  std::optional<double> cap_override;
};

int run_interpolate(const InterpolateArgs& a) {
  const FiniteMetricMeasureSpace s = load_space(a.space);
  const ProbMeasure m0 = load_measure(a.mu0, s.n);
  const ProbMeasure m1 = load_measure(a.mu1, s.n);
  const DyadicGeodesic geo = dyadic_geodesic(s, a.q, m0, m1, a.K, a.levels, a.c_target, a.cap_override);

  std::vector<double> cap_of_level(static_cast<std::size_t>(a.levels) + 1, geo.base_norm);
  for (const DyadicLevelRecord& rec : geo.trace)
    if (rec.level >= 1 && rec.level <= a.levels) cap_of_level[rec.level] = rec.cap;

  std::string csv = "time,point,mass,density,level_cap\n";
  for (int k = 0; k <= geo.segments(); ++k) {
    const ProbMeasure& mu = geo.measures[k];
    const std::vector<double> rho = density(s, mu);
    const double cap = cap_of_level[geo.level_of(k)];
    for (int i = 0; i < s.n; ++i)
      if (mu.mass[i] > 0.0)
        csv += format_double(geo.time_of(k)) + "," + std::to_string(i) + "," + format_double(mu.mass[i]) + "," +
               format_double(rho[i]) + "," + format_double(cap) + "\n";
  }
  write_text_file(a.out, csv);
  std::printf("wq=%s max_sup=%s base=%s feasible=%s\n", format_double(geo.wq).c_str(),
              format_double(geo.max_sup).c_str(), format_double(geo.base_norm).c_str(),
              geo.feasible ? "true" : "false");
  if (!geo.feasible)
    std::printf("witness: level=%d point=%d\n", geo.witness_level, geo.witness_point);
  return geo.feasible ? 0 : 1;
}

// ---------------------------------------------------------------------------
// bip-verify

struct BipVerifyArgs {
  std::string space;
  std::string pairs;
  std::string profile;
  std::string out;
  std::string format;
  double q = 2.0;
  int levels = 4;
};

int run_bip_verify(const BipVerifyArgs& a) {
  const FiniteMetricMeasureSpace s = load_space(a.space);
  const auto pairs = load_pairs(a.pairs, s.n);
  const ProfileFunction prof = load_profile(a.profile);
  const BipReport rep = bip_verify(s, a.q, pairs, prof, a.levels);
  std::vector<CheckRow> rows;
  for (const BipPairReport& pr : rep.pairs) {
    std::string statement = "interpolant sup-density stays within the profile bound (D=" + format_double(pr.D) +
                            ", wq=" + format_double(pr.wq) + ")";
    if (!pr.pass)
      statement += "; witness level=" + std::to_string(pr.witness_level) +
                   " point=" + std::to_string(pr.witness_point);
    rows.push_back({"bip-pair-" + pad3(pr.index), statement, pr.worst_ratio, pr.profile_value,
                    pr.profile_value - pr.worst_ratio, pr.pass});
  }
  write_report(rows, a.out, a.format);
  for (const CheckRow& r : rows)
    std::printf("%s: ratio=%s bound=%s %s\n", r.check_id.c_str(), format_double(r.lhs).c_str(),
                format_double(r.rhs).c_str(), r.pass ? "pass" : "FAIL");
  return rep.pass ? 0 : 1;
}

// ---------------------------------------------------------------------------
// curvature-check

struct CurvatureArgs {
  std::string space;
  std::string pairs;
  std::string kind = "cd_infty";
  std::string out;
  std::string format;
  double q = 2.0;
  double K = 0.0;
  double N = 0.0;
  bool has_N = false;
  int levels = 3;
  std::vector<double> grid;
};

int run_curvature(const CurvatureArgs& a) {
  const FiniteMetricMeasureSpace s = load_space(a.space);
  const auto pairs = load_pairs(a.pairs, s.n);
  if ((a.kind == "mcp" || a.kind == "cd_negative") && !a.has_N)
    throw std::invalid_argument("curvature-check: --N is required for kind '" + a.kind + "'");

  json jpairs = json::array();
  std::vector<CheckRow> rows;
  bool pass = true;
  for (std::size_t idx = 0; idx < pairs.size(); ++idx) {
    const auto& [m0, m1] = pairs[idx];
    const DyadicGeodesic geo =
        dyadic_geodesic(s, a.q, m0, m1, a.K, a.levels, std::numeric_limits<double>::infinity());
    json jp;
    jp["index"] = static_cast<int>(idx);
    double worst = 0.0;
    bool pair_pass = false;
    if (a.kind == "cd_infty") {
      const CdInftyReport rep = cd_infty_check(s, a.q, a.K, m0, m1, geo);
      jp["times"] = rep.times;
      jp["margins"] = rep.margins;
      worst = rep.worst_margin;
      pair_pass = rep.pass;
    } else if (a.kind == "mcp") {
      const std::vector<int> supp = m1.support();
      if (supp.size() != 1)
        throw std::invalid_argument("curvature-check: kind 'mcp' needs mu1 to be a Dirac measure");
      const McpReport rep = mcp_check(s, a.q, a.K, a.N, m0, supp[0], geo);
      jp["times"] = rep.times;
      jp["margins"] = rep.margins;
      jp["density_factor"] = rep.density_factor;
      jp["density_bound"] = rep.density_bound;
      jp["vacuous"] = rep.any_vacuous;
      worst = rep.worst_margin;
      pair_pass = rep.pass;
    } else if (a.kind == "cd_negative") {
      const CdNegativeReport rep = cd_negative_check(s, a.q, a.K, a.N, m0, m1, geo, a.grid);
      jp["dimension_grid"] = rep.n_grid;
      jp["times"] = rep.times;
      jp["margins"] = rep.margins;
      jp["spreading_bound"] = rep.spreading_bound_value;
      jp["midpoint_support_mass"] = rep.midpoint_support_mass;
      worst = rep.worst_margin;
      pair_pass = rep.pass;
    } else {
      throw std::invalid_argument("curvature-check: unknown kind '" + a.kind + "'");
    }
    jp["worst_margin"] = worst;
    jp["pass"] = pair_pass;
    jpairs.push_back(std::move(jp));
    rows.push_back({a.kind + "-pair-" + pad3(static_cast<int>(idx)),
                    "entropy convexity margins stay nonnegative along the dyadic geodesic", worst, 0.0, worst,
                    pair_pass});
    pass = pass && pair_pass;
  }
  if (!a.out.empty()) {
    if (json_format(a.out, a.format, true)) {
      json j;
      j["kind"] = a.kind;
      j["K"] = a.K;
      if (a.has_N) j["N"] = a.N;
      j["q"] = a.q;
      j["pass"] = pass;
      j["pairs"] = std::move(jpairs);
      write_text_file(a.out, j.dump(2) + "\n");
    } else {
      write_report(rows, a.out, a.format);
    }
  }
  for (const CheckRow& r : rows)
    std::printf("%s: worst_margin=%s %s\n", r.check_id.c_str(), format_double(r.lhs).c_str(),
                r.pass ? "pass" : "FAIL");
  return pass ? 0 : 1;
}

// ---------------------------------------------------------------------------
// sobolev

struct SobolevArgs {
  std::string space;
  std::string f;
  std::string out = "gradient.csv";
  double p = 2.0;
  double q = 2.0;
  int family_depth = 2;
  int pair_budget = 200;
  int diagnose_depth = 0;
};

int run_sobolev(const SobolevArgs& a) {
  const FiniteMetricMeasureSpace s = load_space(a.space);
  const RealFunction f = load_function(a.f, s.n);
  const PlanFamily fam = build_geod_family(s, a.q, a.family_depth, a.pair_budget);
  const GradientCandidate g = minimal_weak_upper_gradient(s, f, a.p, fam);
  std::string csv = "point,gradient\n";
  for (int i = 0; i < s.n; ++i) csv += std::to_string(i) + "," + format_double(g.values[i]) + "\n";
  write_text_file(a.out, csv);
  std::printf("family=%d plans, |G|_p=%s\n", fam.size(), format_double(weighted_p_norm(s, g.values, a.p)).c_str());
  if (a.diagnose_depth > 0) {
    const auto diag = gradient_depth_diagnostic(s, f, a.p, a.q, a.diagnose_depth, a.pair_budget);
    std::printf("depth,family_size,norm,delta_inf\n");
    for (const DepthDiagnosticRow& row : diag)
      std::printf("%d,%d,%s,%s\n", row.depth, row.family_size, format_double(row.norm).c_str(),
                  format_double(row.delta_inf).c_str());
  }
  return 0;
}

struct SobolevCompareArgs {
  std::string space;
  std::string f;
  std::string out;
  std::string format;
  double p1 = 1.5;
  double p2 = 3.0;
  double q = 2.0;
  int family_depth = 2;
  int pair_budget = 200;
  double agree_tol = 2e-3;
};

int run_sobolev_compare(const SobolevCompareArgs& a) {
  const FiniteMetricMeasureSpace s = load_space(a.space);
  const RealFunction f = load_function(a.f, s.n);
  const PlanFamily fam = build_geod_family(s, a.q, a.family_depth, a.pair_budget);
  const GradientComparisonReport rep = gradient_p_comparison(s, f, a.p1, a.p2, fam, a.agree_tol);
  std::vector<CheckRow> rows;
  rows.push_back({"gradient-monotone",
                  "the smaller exponent's minimal norm never exceeds the larger exponent's gradient in that norm",
                  rep.norm1, rep.cross_norm, rep.cross_norm - rep.norm1, rep.solver_monotone});
  rows.push_back({"gradient-agree", "the two minimal gradients agree pointwise within tolerance (descriptive)",
                  rep.agree_gap, rep.agree_tol, rep.agree_tol - rep.agree_gap, rep.agree});
  write_report(rows, a.out, a.format);
  std::printf("|G%s|=%s |G%s|=%s gap=%s neg_gap=%s agree=%s\n", format_double(a.p1).c_str(),
              format_double(rep.norm1).c_str(), format_double(a.p2).c_str(), format_double(rep.norm2).c_str(),
              format_double(rep.agree_gap).c_str(), format_double(rep.neg_gap).c_str(),
              rep.agree ? "true" : "false");
  return rep.solver_monotone ? 0 : 1;
}

// ---------------------------------------------------------------------------
// pmgh

struct PmghArgs {
  std::string space;
  std::string target;
  std::string limit;
  std::string mu;
  std::string cutoff;
  std::string out;
  double q = 2.0;
};

int run_pmgh(const PmghArgs& a) {
  const FiniteMetricMeasureSpace ambient = load_space(a.space);
  const EmbeddedSpace target = load_embedded(a.target, ambient);
  const EmbeddedSpace limit = load_embedded(a.limit, ambient);
  const ProbMeasure mu = load_measure(a.mu, limit.space.n);
  const RealFunction cutoff = load_function(a.cutoff, ambient.n);
  const PmghTransferResult res = pmgh_transfer(target, limit, ambient, mu, cutoff, a.q);
  const bool pass = res.sup_density <= res.density_bound * (1.0 + 1e-9) + 1e-12;
  if (!a.out.empty()) {
    json j;
    j["mu"] = res.mu.mass;
    j["sup_density"] = res.sup_density;
    j["density_bound"] = res.density_bound;
    j["z_limit"] = res.z_limit;
    j["z_target"] = res.z_target;
    j["wq"] = res.wq;
    j["pass"] = pass;
    write_text_file(a.out, j.dump(2) + "\n");
  }
  std::printf("sup_density=%s bound=%s wq=%s %s\n", format_double(res.sup_density).c_str(),
              format_double(res.density_bound).c_str(), format_double(res.wq).c_str(), pass ? "pass" : "FAIL");
  return pass ? 0 : 1;
}

// ---------------------------------------------------------------------------
// report battery

struct ReportArgs {
  std::string space;
  std::string out = "report.csv";
  std::string format;
  double q = 2.0;
  double K = 0.0;
  double p = 2.0;
  int levels = 3;
  int depth = 2;
  int budget = 60;
};

// True when an exact dyadic chain of depth v connects i and j: a grid point
// sits at exactly half the distance, recursively on both halves. Interpolation
// items are only well-posed between such atoms.
bool dyadic_chain_exists(const FiniteMetricMeasureSpace& s, int i, int j, int v) {
  if (v == 0) return true;
  const double half = s.d(i, j) / 2.0;
  for (int k = 0; k < s.n; ++k)
    if (std::fabs(s.d(i, k) - half) <= 1e-12 * std::max(1.0, half) &&
        std::fabs(s.d(k, j) - half) <= 1e-12 * std::max(1.0, half))
      if (dyadic_chain_exists(s, i, k, v - 1) && dyadic_chain_exists(s, k, j, v - 1)) return true;
  return false;
}

struct DyadicPairChoice {
  int i = -1;
  int j = -1;
  int levels = 0;
};

DyadicPairChoice deepest_dyadic_pair(const FiniteMetricMeasureSpace& s, int max_levels) {
  DyadicPairChoice best;
  for (int v = max_levels; v >= 1; --v) {
    double best_d = 0.0;
    for (int i = 0; i < s.n; ++i)
      for (int j = i + 1; j < s.n; ++j)
        if (s.d(i, j) > best_d && dyadic_chain_exists(s, i, j, v)) {
          best_d = s.d(i, j);
          best.i = i;
          best.j = j;
          best.levels = v;
        }
    if (best.levels > 0) return best;
  }
  return best;
}

int run_report(const ReportArgs& a) {
  const FiniteMetricMeasureSpace s = load_space(a.space);
  if (!s.has_graph()) throw std::invalid_argument("report: requires a graph-backed space (edge list input)");
  if (s.n < 2) throw std::invalid_argument("report: needs at least two atoms");
  const int patch = std::max(1, s.n / 4);
  const ProbMeasure muA = uniform_patch(s.n, 0, patch);
  const ProbMeasure muB = uniform_patch(s.n, s.n - patch, patch);
  const DyadicPairChoice dy = deepest_dyadic_pair(s, a.levels);
  const uint64_t seed = env_seed();

  using Task = std::function<std::vector<CheckRow>()>;
  std::vector<Task> tasks;

  tasks.push_back([&]() -> std::vector<CheckRow> {
    const ValidationReport rep = validate_space(s);
    const double issues = static_cast<double>(rep.issues.size());
    return {{"a-space-metric", "distance matrix is a metric and every weight is positive", issues, 0.0, -issues,
             rep.pass()}};
  });
  tasks.push_back([&]() -> std::vector<CheckRow> {
    const double wq = wasserstein(s, a.q, muA, muA).wq;
    return {{"b-transport-identity", "transport distance from a measure to itself vanishes", wq, 0.0, -wq,
             wq <= 1e-9}};
  });
  tasks.push_back([&]() -> std::vector<CheckRow> {
    const double ab = wasserstein(s, a.q, muA, muB).wq;
    const double ba = wasserstein(s, a.q, muB, muA).wq;
    const double gap = std::fabs(ab - ba);
    return {{"c-transport-symmetry", "transport distance is symmetric in its endpoints", ab, ba, -gap,
             gap <= 1e-9}};
  });
  tasks.push_back([&]() -> std::vector<CheckRow> {
    const OptGeoResult og = optgeo_plan(s, a.q, muA, muB, 1);
    return {{"d-geodesic-energy", "one-step geodesic plan energy equals the transport cost", og.energy, og.wq_pow,
             -og.slack, og.slack <= 1e-9}};
  });
  tasks.push_back([&]() -> std::vector<CheckRow> {
    if (dy.levels == 0)
      return {{"e-interpolation-density", "no atom pair admits exact dyadic midpoints; nothing to interpolate",
               0.0, 0.0, 0.0, true}};
    const ProbMeasure d0 = dirac(s.n, dy.i), d1 = dirac(s.n, dy.j);
    const DyadicGeodesic geo =
        dyadic_geodesic(s, a.q, d0, d1, a.K, dy.levels, std::numeric_limits<double>::infinity());
    const double ratio = geo.max_sup / geo.base_norm;
    const double bound = profile_cd_infty(a.K).evaluate(geo.diam);
    const bool ok = geo.feasible && ratio <= bound * (1.0 + 1e-6);
    return {{"e-interpolation-density", "dyadic interpolant density stays within the curvature profile", ratio,
             bound, bound - ratio, ok}};
  });
  tasks.push_back([&]() -> std::vector<CheckRow> {
    if (dy.levels == 0)
      return {{"f-curvature-cdinfty", "no atom pair admits exact dyadic midpoints; nothing to check", 0.0, 0.0,
               0.0, true}};
    const ProbMeasure d0 = dirac(s.n, dy.i), d1 = dirac(s.n, dy.j);
    const DyadicGeodesic geo =
        dyadic_geodesic(s, a.q, d0, d1, a.K, dy.levels, std::numeric_limits<double>::infinity());
    const CdInftyReport rep = cd_infty_check(s, a.q, a.K, d0, d1, geo);
    return {{"f-curvature-cdinfty", "entropy convexity margins stay nonnegative along the geodesic",
             rep.worst_margin, 0.0, rep.worst_margin, rep.pass}};
  });
  tasks.push_back([&]() -> std::vector<CheckRow> {
    RealFunction f;
    f.values.resize(s.n);
    for (int i = 0; i < s.n; ++i) f.values[i] = s.d(0, i);
    const PlanFamily fam = build_geod_family(s, a.q, a.depth, a.budget);
    const GradientCandidate g = minimal_weak_upper_gradient(s, f, a.p, fam);
    double worst_deficit = 0.0;
    for (const TestPlan& plan : fam.plans)
      worst_deficit = std::max(worst_deficit, upper_gradient_check(s, f, g, plan).deficit);
    std::vector<CheckRow> rows;
    rows.push_back({"g-sobolev-gradient", "minimal gradient satisfies every family constraint", worst_deficit,
                    1e-9, 1e-9 - worst_deficit, worst_deficit <= 1e-9});
    const MasterPlanResult master = build_master_plan(s, fam, a.q);
    const MasterPlanCheckReport mrep = master_plan_check(s, f, g, master.plan, fam);
    rows.push_back({"h-sobolev-master", "per-curve pass on the master plan forces the integrated pass",
                    mrep.worst_curve_margin, 0.0, mrep.worst_curve_margin,
                    mrep.consistent && mrep.per_curve_pass == mrep.family_pass});
    return rows;
  });
  tasks.push_back([&]() -> std::vector<CheckRow> {
    std::mt19937_64 rng = make_rng(seed);
    std::uniform_real_distribution<double> coord(-1.0, 1.0);
    std::vector<double> w(s.n), e(s.n), sum(s.n), diff(s.n);
    for (int i = 0; i < s.n; ++i) {
      const double wx = coord(rng), wy = coord(rng), ex = coord(rng), ey = coord(rng);
      w[i] = std::hypot(wx, wy);
      e[i] = std::hypot(ex, ey);
      sum[i] = std::hypot(wx + ex, wy + ey);
      diff[i] = std::hypot(wx - ex, wy - ey);
    }
    const ClarksonReport rep = clarkson_check(s, w, e, sum, diff, 3.0);
    return {{"i-clarkson", "Clarkson convexity inequality holds for a seeded random pair at p=3", rep.lhs, rep.rhs,
             rep.margin, rep.pass}};
  });

  // Deterministic fan-out: results land in task order no matter the schedule.
  const int threads = std::min(env_thread_count(), static_cast<int>(tasks.size()));
  std::vector<std::vector<CheckRow>> results(tasks.size());
  if (threads <= 1) {
    for (std::size_t i = 0; i < tasks.size(); ++i) results[i] = tasks[i]();
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t)
      pool.emplace_back([&]() {
        for (std::size_t i = next.fetch_add(1); i < tasks.size(); i = next.fetch_add(1)) results[i] = tasks[i]();
      });
    for (std::thread& th : pool) th.join();
  }
  std::vector<CheckRow> rows;
  for (const auto& part : results) rows.insert(rows.end(), part.begin(), part.end());

  write_report(rows, a.out, a.format);
  const bool pass = all_pass(rows);
  for (const CheckRow& r : rows)
    std::printf("%-24s %s\n", r.check_id.c_str(), r.pass ? "pass" : "FAIL");
  std::printf("report: %zu checks, %s\n", rows.size(), pass ? "all pass" : "FAILURES");
  return pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bip-lab: transport, interpolation, curvature, and Sobolev checks on finite metric measure spaces"};
  app.require_subcommand(1);

  ValidateArgs va;
  CLI::App* validate = app.add_subcommand("validate", "check that a space file is a metric measure space");
  validate->add_option("--space", va.space, "space JSON file")->required();
  validate->add_option("--tol", va.tol, "structural tolerance");
  validate->add_option("--out", va.out, "report output path");
  validate->add_option("--format", va.format, "report format: json or csv");

  WassersteinArgs wa;
  CLI::App* wass = app.add_subcommand("wasserstein", "q-Wasserstein distance between two measures");
  wass->add_option("--space", wa.space, "space JSON file")->required();
  wass->add_option("--mu0", wa.mu0, "first measure JSON file")->required();
  wass->add_option("--mu1", wa.mu1, "second measure JSON file")->required();
  wass->add_option("--q", wa.q, "transport exponent (default 2)");
  wass->add_option("--coupling", wa.coupling, "write the optimal coupling as CSV");
  wass->add_option("--out", wa.out, "write cost summary as JSON");

  InterpolateArgs ia;
  CLI::App* interp = app.add_subcommand("interpolate", "dyadic geodesic interpolation with density caps");
  interp->add_option("--space", ia.space, "space JSON file")->required();
  interp->add_option("--mu0", ia.mu0, "first endpoint measure")->required();
  interp->add_option("--mu1", ia.mu1, "second endpoint measure")->required();
  interp->add_option("--q", ia.q, "transport exponent (default 2)");
  interp->add_option("--K", ia.K, "curvature lower bound driving the caps (default 0)");
  interp->add_option("--levels", ia.levels, "dyadic depth (default 4)");
  interp->add_option("--c-target", ia.c_target, "stop early once this density ratio is met");
  double cap_override_value = 0.0;
  CLI::Option* cap_opt = interp->add_option("--cap-override", cap_override_value, "absolute density cap");
  interp->add_option("--out", ia.out, "trace CSV path (default trace.csv)");

  BipVerifyArgs ba;
  CLI::App* bipv = app.add_subcommand("bip-verify", "verify the bounded-interpolation profile on endpoint pairs");
  bipv->add_option("--space", ba.space, "space JSON file")->required();
  bipv->add_option("--pairs", ba.pairs, "JSON array of {mu0, mu1} pairs")->required();
  bipv->add_option("--profile", ba.profile, "profile JSON (inline or a file path)")->required();
  bipv->add_option("--q", ba.q, "transport exponent (default 2)");
  bipv->add_option("--levels", ba.levels, "dyadic depth (default 4)");
  bipv->add_option("--out", ba.out, "report output path");
  bipv->add_option("--format", ba.format, "report format: json or csv");

  CurvatureArgs ca;
  CLI::App* curv = app.add_subcommand("curvature-check", "entropy convexity checks along dyadic geodesics");
  curv->add_option("--space", ca.space, "space JSON file")->required();
  curv->add_option("--pairs", ca.pairs, "JSON array of {mu0, mu1} pairs")->required();
  curv->add_option("--kind", ca.kind, "cd_infty, mcp, or cd_negative (default cd_infty)");
  curv->add_option("--K", ca.K, "curvature parameter (default 0)");
  CLI::Option* n_opt = curv->add_option("--N", ca.N, "dimension parameter (mcp, cd_negative)");
  curv->add_option("--q", ca.q, "transport exponent (default 2)");
  curv->add_option("--levels", ca.levels, "dyadic depth (default 3)");
  curv->add_option("--grid", ca.grid, "dimension grid for cd_negative (default N, N/2, N/4)");
  curv->add_option("--out", ca.out, "report output path (JSON by default)");
  curv->add_option("--format", ca.format, "report format: json or csv");

  SobolevArgs sa;
  CLI::App* sob = app.add_subcommand("sobolev", "minimal weak upper gradient over a geodesic plan family");
  sob->add_option("--space", sa.space, "space JSON file");
  sob->add_option("--f", sa.f, "function JSON array");
  sob->add_option("--p", sa.p, "gradient norm exponent (default 2)");
  sob->add_option("--q", sa.q, "plan energy exponent (default 2)");
  sob->add_option("--family-depth", sa.family_depth, "restriction closure depth (default 2)");
  sob->add_option("--pair-budget", sa.pair_budget, "measure pair budget (default 200)");
  sob->add_option("--diagnose-depth", sa.diagnose_depth, "also print gradient stability up to this depth");
  sob->add_option("--out", sa.out, "gradient CSV path (default gradient.csv)");

  SobolevCompareArgs sca;
  CLI::App* scmp = sob->add_subcommand("compare", "compare minimal gradients at two exponents");
  scmp->add_option("--space", sca.space, "space JSON file")->required();
  scmp->add_option("--f", sca.f, "function JSON array")->required();
  scmp->add_option("--p1", sca.p1, "smaller exponent (default 1.5)");
  scmp->add_option("--p2", sca.p2, "larger exponent (default 3)");
  scmp->add_option("--q", sca.q, "plan energy exponent (default 2)");
  scmp->add_option("--family-depth", sca.family_depth, "restriction closure depth (default 2)");
  scmp->add_option("--pair-budget", sca.pair_budget, "measure pair budget (default 200)");
  scmp->add_option("--agree-tol", sca.agree_tol, "pointwise agreement tolerance (default 2e-3)");
  scmp->add_option("--out", sca.out, "report output path");
  scmp->add_option("--format", sca.format, "report format: json or csv");
  sob->require_subcommand(0, 1);

  PmghArgs pa;
  CLI::App* pmgh = app.add_subcommand("pmgh", "transfer a measure between embedded spaces in a common ambient");
  pmgh->add_option("--space", pa.space, "ambient space JSON file")->required();
  pmgh->add_option("--target", pa.target, "target embedding {indices, weights?}")->required();
  pmgh->add_option("--limit", pa.limit, "limit embedding {indices, weights?}")->required();
  pmgh->add_option("--mu", pa.mu, "measure on the limit space (JSON array)")->required();
  pmgh->add_option("--cutoff", pa.cutoff, "cutoff function on the ambient space (JSON array)")->required();
  pmgh->add_option("--q", pa.q, "transport exponent (default 2)");
  pmgh->add_option("--out", pa.out, "report output path (JSON)");

  ReportArgs ra;
  CLI::App* rep = app.add_subcommand("report", "run the standard check battery on a space");
  rep->add_option("--space", ra.space, "space JSON file")->required();
  rep->add_option("--q", ra.q, "transport exponent (default 2)");
  rep->add_option("--K", ra.K, "curvature parameter (default 0)");
  rep->add_option("--p", ra.p, "gradient exponent (default 2)");
  rep->add_option("--levels", ra.levels, "dyadic depth (default 3)");
  rep->add_option("--depth", ra.depth, "family restriction depth (default 2)");
  rep->add_option("--budget", ra.budget, "family pair budget (default 60)");
  rep->add_option("--out", ra.out, "report output path (default report.csv)");
  rep->add_option("--format", ra.format, "report format: json or csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*validate) return run_validate(va);
    if (*wass) return run_wasserstein(wa);
    if (*interp) {
      if (cap_opt->count() > 0) ia.cap_override = cap_override_value;
      return run_interpolate(ia);
    }
    if (*bipv) return run_bip_verify(ba);
    if (*curv) {
      ca.has_N = n_opt->count() > 0;
      return run_curvature(ca);
    }
    if (*sob) {
      if (*scmp) return run_sobolev_compare(sca);
      if (sa.space.empty() || sa.f.empty())
        throw std::invalid_argument("sobolev: --space and --f are required");
      return run_sobolev(sa);
    }
    if (*pmgh) return run_pmgh(pa);
    if (*rep) return run_report(ra);
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 2;
}
