#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "bip/curvature.hpp"
#include "bip/interpolation.hpp"

namespace bip {

// Default slack on inequality margins; absorbs LP rounding on the geodesic.
inline constexpr double kMarginTol = 1e-6;

namespace detail {

inline void require_endpoints(const DyadicGeodesic& geo, const ProbMeasure& mu0, const ProbMeasure& mu1,
                              const char* who) {
  const ProbMeasure& a = geo.measures.front();
  const ProbMeasure& b = geo.measures.back();
  if (a.n() != mu0.n() || b.n() != mu1.n()) throw std::invalid_argument(std::string(who) + ": endpoint size mismatch");
  for (int i = 0; i < mu0.n(); ++i)
    if (std::fabs(a.mass[i] - mu0.mass[i]) > 1e-9 || std::fabs(b.mass[i] - mu1.mass[i]) > 1e-9)
      throw std::invalid_argument(std::string(who) + ": geodesic endpoints do not match the given measures");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Entropy displacement convexity, dimension-free form

struct CdInftyReport {
  double K = 0.0;
  double wq = 0.0;
  double ent0 = 0.0;
  double ent1 = 0.0;
  std::vector<double> times;
  std::vector<double> lhs;      // Ent(mu_t)
  std::vector<double> rhs;      // (1-t)Ent(mu0) + t Ent(mu1) - (K/2)t(1-t)W^2
  std::vector<double> margins;  // rhs - lhs
  double worst_margin = 0.0;
  int worst_index = -1;
  bool pass = false;
};

inline CdInftyReport cd_infty_check(const FiniteMetricMeasureSpace& s, double q, double K, const ProbMeasure& mu0,
                                    const ProbMeasure& mu1, const DyadicGeodesic& geo, double tol = kMarginTol) {
  (void)q;
  detail::require_endpoints(geo, mu0, mu1, "cd_infty_check");
  CdInftyReport rep;
  rep.K = K;
  rep.wq = geo.wq;
  rep.ent0 = shannon_entropy(s, mu0);
  rep.ent1 = shannon_entropy(s, mu1);
  rep.worst_margin = std::numeric_limits<double>::infinity();
  const int M = geo.segments();
  for (int k = 0; k <= M; ++k) {
    const double t = geo.time_of(k);
    const double lhs = shannon_entropy(s, geo.measures[k]);
    const double rhs = (1.0 - t) * rep.ent0 + t * rep.ent1 - 0.5 * K * t * (1.0 - t) * rep.wq * rep.wq;
    rep.times.push_back(t);
    rep.lhs.push_back(lhs);
    rep.rhs.push_back(rhs);
    rep.margins.push_back(rhs - lhs);
    if (rhs - lhs < rep.worst_margin) {
      rep.worst_margin = rhs - lhs;
      rep.worst_index = k;
    }
  }
  rep.pass = rep.worst_margin >= -tol;
  return rep;
}

// ---------------------------------------------------------------------------
// Measure contraction toward a point

struct McpReport {
  double K = 0.0;
  double N = 1.0;
  double D = 0.0;  // diameter of supp(mu0) with the target point
  std::vector<double> times;    // dyadic t < 1
  std::vector<double> lhs;      // U_N(mu_t)
  std::vector<double> rhs;      // -sum tau^{(1-t)}(d(x,o)) rho0^{1-1/N} dm
  std::vector<double> margins;  // rhs - lhs; +inf on vacuous entries
  std::vector<char> vacuous;    // tau hit +inf somewhere in the sum
  std::vector<double> density_factor;  // ||rho_t|| / ||rho_0||
  std::vector<double> density_bound;   // e^{D t sqrt((N-1)K^-)} / (1-t)^N
  double worst_margin = 0.0;           // over non-vacuous entries
  bool any_vacuous = false;
  bool renyi_pass = false;
  bool density_pass = false;
  bool pass = false;
};

inline McpReport mcp_check(const FiniteMetricMeasureSpace& s, double q, double K, double N, const ProbMeasure& mu0,
                           int o, const DyadicGeodesic& geo, double tol = kMarginTol) {
  (void)q;
  if (!(N >= 1.0)) throw std::invalid_argument("mcp_check: N must lie in [1, inf)");
  if (o < 0 || o >= s.n) throw std::invalid_argument("mcp_check: target point out of range");
  detail::require_endpoints(geo, mu0, dirac(s.n, o), "mcp_check");

  McpReport rep;
  rep.K = K;
  rep.N = N;
  std::vector<int> un = mu0.support();
  un.push_back(o);
  rep.D = diameter(s, un);
  const double kminus = K < 0.0 ? -K : 0.0;
  const double rate = std::sqrt((N - 1.0) * kminus);
  const double norm0 = sup_density(s, mu0);
  const std::vector<double> rho0 = density(s, mu0);
  rep.worst_margin = std::numeric_limits<double>::infinity();

  const int M = geo.segments();
  for (int k = 0; k < M; ++k) {
    const double t = geo.time_of(k);
    const double lhs = renyi_entropy(s, geo.measures[k], N);
    double sum = 0.0;
    bool vac = false;
    for (int i : mu0.support()) {
      const double rho = rho0[i];
      ExtendedReal tv = tau(K, N, 1.0 - t, s.d(i, o));
      if (tv.infinite) {
        vac = true;
        break;
      }
      sum += tv.value * std::pow(rho, 1.0 - 1.0 / N) * s.w(i);
    }
    rep.times.push_back(t);
    rep.lhs.push_back(lhs);
    rep.vacuous.push_back(vac ? 1 : 0);
    if (vac) {
      rep.any_vacuous = true;
      rep.rhs.push_back(std::numeric_limits<double>::infinity());
      rep.margins.push_back(std::numeric_limits<double>::infinity());
    } else {
      rep.rhs.push_back(-sum);
      rep.margins.push_back(-sum - lhs);
      if (-sum - lhs < rep.worst_margin) rep.worst_margin = -sum - lhs;
    }
    rep.density_factor.push_back(sup_density(s, geo.measures[k]) / norm0);
    rep.density_bound.push_back(std::exp(rep.D * t * rate) / std::pow(1.0 - t, N));
  }
  rep.renyi_pass = rep.worst_margin >= -tol;
  rep.density_pass = true;
  for (size_t k = 0; k < rep.times.size(); ++k)
    if (rep.density_factor[k] > rep.density_bound[k] * (1.0 + tol)) rep.density_pass = false;
  rep.pass = rep.renyi_pass && rep.density_pass;
  return rep;
}

// ---------------------------------------------------------------------------
// Curvature-dimension with negative dimension parameter

struct CdNegativeReport {
  double K = 0.0;
  double N = -1.0;
  std::vector<double> n_grid;  // N' values checked, all in [N, 0)
  std::vector<double> times;
  std::vector<std::vector<double>> lhs;      // [grid][time]
  std::vector<std::vector<double>> rhs;      // +inf on vacuous entries
  std::vector<std::vector<double>> margins;  // rhs - lhs
  std::vector<std::vector<char>> vacuous;
  double worst_margin = 0.0;
  bool any_vacuous = false;
  double midpoint_support_mass = 0.0;
  double spreading_bound_value = 0.0;
  bool spreading_pass = false;
  bool renyi_pass = false;
  bool pass = false;
};

// Checks the convexity inequality for the signed Renyi entropy along the
// geodesic, with the endpoint pairing taken from the geodesic's lifted
// coupling, for each dimension parameter N' in the grid. Also checks the
// midpoint mass-spreading lower bound.
inline CdNegativeReport cd_negative_check(const FiniteMetricMeasureSpace& s, double q, double K, double N,
                                          const ProbMeasure& mu0, const ProbMeasure& mu1, const DyadicGeodesic& geo,
                                          std::vector<double> n_grid = {}, double tol = kMarginTol) {
  (void)q;
  if (!(N < 0.0)) throw std::invalid_argument("cd_negative_check: N must be negative");
  detail::require_endpoints(geo, mu0, mu1, "cd_negative_check");
  if (n_grid.empty()) n_grid = {N, N / 2.0, N / 4.0};
  for (double np : n_grid)
    if (!(np >= N && np < 0.0)) throw std::invalid_argument("cd_negative_check: grid values must lie in [N, 0)");

  CdNegativeReport rep;
  rep.K = K;
  rep.N = N;
  rep.n_grid = n_grid;
  rep.worst_margin = std::numeric_limits<double>::infinity();
  const int M = geo.segments();
  for (int k = 0; k <= M; ++k) rep.times.push_back(geo.time_of(k));

  const Matrix& pi = geo.endpoint_coupling.plan;
  const std::vector<double> rho0 = density(s, mu0), rho1 = density(s, mu1);
  for (double np : n_grid) {
    std::vector<double> lhs_row, rhs_row, margin_row;
    std::vector<char> vac_row;
    for (int k = 0; k <= M; ++k) {
      const double t = rep.times[k];
      const double lhs = renyi_entropy(s, geo.measures[k], np);
      double sum = 0.0;
      bool vac = false;
      for (int i = 0; i < s.n && !vac; ++i)
        for (int j = 0; j < s.n; ++j) {
          const double mass = pi(i, j);
          if (mass <= 0.0) continue;
          const double dij = s.d(i, j);
          ExtendedReal t0 = tau(K, np, 1.0 - t, dij);
          ExtendedReal t1 = tau(K, np, t, dij);
          if (t0.infinite || t1.infinite) {
            vac = true;
            break;
          }
          sum += mass * (t0.value * std::pow(rho0[i], -1.0 / np) + t1.value * std::pow(rho1[j], -1.0 / np));
        }
      lhs_row.push_back(lhs);
      vac_row.push_back(vac ? 1 : 0);
      if (vac) {
        rep.any_vacuous = true;
        rhs_row.push_back(std::numeric_limits<double>::infinity());
        margin_row.push_back(std::numeric_limits<double>::infinity());
      } else {
        rhs_row.push_back(sum);
        margin_row.push_back(sum - lhs);
        if (sum - lhs < rep.worst_margin) rep.worst_margin = sum - lhs;
      }
    }
    rep.lhs.push_back(lhs_row);
    rep.rhs.push_back(rhs_row);
    rep.margins.push_back(margin_row);
    rep.vacuous.push_back(vac_row);
  }

  std::vector<int> un = detail::support_union(mu0, mu1);
  const double D = diameter(s, un);
  rep.midpoint_support_mass = support_mass(s, geo.measures[M / 2]);
  rep.spreading_bound_value = spreading_bound(sup_density(s, mu0), sup_density(s, mu1), D, K, N);
  rep.spreading_pass = rep.midpoint_support_mass >= rep.spreading_bound_value - 1e-8;
  rep.renyi_pass = rep.worst_margin >= -tol;
  rep.pass = rep.renyi_pass && rep.spreading_pass;
  return rep;
}

}  // namespace bip
