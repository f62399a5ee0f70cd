#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "bip/common.hpp"

namespace bip {

constexpr double kStructuralTol = 1e-12;

struct Edge {
  int u = 0;
  int v = 0;
  double len = 0.0;
};

// Finite metric measure space: dense symmetric distance matrix plus strictly
// positive atom weights. Graph spaces keep their edge list so geodesics can be
// reconstructed later; dense-input spaces have an empty edge list.
struct FiniteMetricMeasureSpace {
  int n = 0;
  Matrix dist;
  std::vector<double> weight;
  std::vector<std::string> label;
  std::vector<Edge> edge_list;

  double d(int i, int j) const { return dist(i, j); }
  double w(int i) const { return weight[i]; }
  bool has_graph() const { return !edge_list.empty(); }

  double total_mass() const {
    double s = 0.0;
    for (double x : weight) s += x;
    return s;
  }
};

struct RealFunction {
  std::vector<double> values;
};

struct ValidationIssue {
  std::string what;
  int i = -1;
  int j = -1;
  int k = -1;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;
  bool pass() const { return issues.empty(); }
};

inline ValidationReport validate_space(const FiniteMetricMeasureSpace& s, double tol = kStructuralTol) {
  ValidationReport rep;
  auto add = [&](std::string what, int i = -1, int j = -1, int k = -1) {
    rep.issues.push_back({std::move(what), i, j, k});
  };
  if (s.n <= 0) {
    add("point count must be positive");
    return rep;
  }
  if (s.dist.rows != s.n || s.dist.cols != s.n) {
    add("distance matrix shape mismatch");
    return rep;
  }
  if (static_cast<int>(s.weight.size()) != s.n) {
    add("weight vector length mismatch");
    return rep;
  }
  if (!s.label.empty() && static_cast<int>(s.label.size()) != s.n) add("label vector length mismatch");

  for (int i = 0; i < s.n; ++i) {
    if (!(s.weight[i] > 0.0) || !std::isfinite(s.weight[i])) add("weight not strictly positive", i);
    if (std::fabs(s.dist(i, i)) > tol) add("nonzero diagonal distance", i, i);
    for (int j = i + 1; j < s.n; ++j) {
      if (!std::isfinite(s.dist(i, j))) add("non-finite distance", i, j);
      if (std::fabs(s.dist(i, j) - s.dist(j, i)) > tol) add("asymmetric distance", i, j);
      if (s.dist(i, j) <= 0.0) add("non-positive off-diagonal distance", i, j);
    }
  }
  for (int i = 0; i < s.n; ++i)
    for (int j = 0; j < s.n; ++j)
      for (int k = 0; k < s.n; ++k)
        if (s.dist(i, k) > s.dist(i, j) + s.dist(j, k) + tol) add("triangle inequality violated", i, j, k);

  if (s.has_graph()) {
    // dist must equal the shortest-path closure of the edge list.
    for (const Edge& e : s.edge_list)
      if (e.u < 0 || e.u >= s.n || e.v < 0 || e.v >= s.n || !(e.len > 0.0)) add("bad edge", e.u, e.v);
    if (rep.pass()) {
      Matrix sp(s.n, s.n, std::numeric_limits<double>::infinity());
      for (int i = 0; i < s.n; ++i) sp(i, i) = 0.0;
      for (const Edge& e : s.edge_list) {
        sp(e.u, e.v) = std::min(sp(e.u, e.v), e.len);
        sp(e.v, e.u) = sp(e.u, e.v);
      }
      for (int k = 0; k < s.n; ++k)
        for (int i = 0; i < s.n; ++i)
          for (int j = 0; j < s.n; ++j)
            if (sp(i, k) + sp(k, j) < sp(i, j)) sp(i, j) = sp(i, k) + sp(k, j);
      for (int i = 0; i < s.n; ++i)
        for (int j = 0; j < s.n; ++j)
          if (!(std::fabs(sp(i, j) - s.dist(i, j)) <= tol)) {
            add("distance differs from shortest-path closure of edges", i, j);
            i = s.n;
            break;
          }
    }
  }
  return rep;
}

inline FiniteMetricMeasureSpace make_space_from_dist(Matrix dist, std::vector<double> weight,
                                                     std::vector<std::string> label = {}) {
  FiniteMetricMeasureSpace s;
  s.n = dist.rows;
  s.dist = std::move(dist);
  s.weight = std::move(weight);
  s.label = std::move(label);
  ValidationReport rep = validate_space(s);
  if (!rep.pass()) throw std::invalid_argument("invalid space: " + rep.issues.front().what);
  return s;
}

inline FiniteMetricMeasureSpace make_space_from_edges(int n, std::vector<Edge> edges, std::vector<double> weight,
                                                      std::vector<std::string> label = {}) {
  if (n <= 0) throw std::invalid_argument("point count must be positive");
  Matrix sp(n, n, std::numeric_limits<double>::infinity());
  for (int i = 0; i < n; ++i) sp(i, i) = 0.0;
  for (const Edge& e : edges) {
    if (e.u < 0 || e.u >= n || e.v < 0 || e.v >= n || e.u == e.v || !(e.len > 0.0))
      throw std::invalid_argument("bad edge in edge list");
    sp(e.u, e.v) = std::min(sp(e.u, e.v), e.len);
    sp(e.v, e.u) = sp(e.u, e.v);
  }
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (sp(i, k) + sp(k, j) < sp(i, j)) sp(i, j) = sp(i, k) + sp(k, j);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (!std::isfinite(sp(i, j))) throw std::invalid_argument("graph is disconnected");

  FiniteMetricMeasureSpace s;
  s.n = n;
  s.dist = std::move(sp);
  s.weight = std::move(weight);
  s.label = std::move(label);
  s.edge_list = std::move(edges);
  ValidationReport rep = validate_space(s);
  if (!rep.pass()) throw std::invalid_argument("invalid space: " + rep.issues.front().what);
  return s;
}

inline double diameter(const FiniteMetricMeasureSpace& s, const std::vector<int>& subset) {
  if (subset.empty()) throw std::invalid_argument("diameter of empty subset");
  double m = 0.0;
  for (size_t a = 0; a < subset.size(); ++a)
    for (size_t b = a + 1; b < subset.size(); ++b) m = std::max(m, s.d(subset[a], subset[b]));
  return m;
}

inline double diameter(const FiniteMetricMeasureSpace& s) {
  double m = 0.0;
  for (int i = 0; i < s.n; ++i)
    for (int j = i + 1; j < s.n; ++j) m = std::max(m, s.d(i, j));
  return m;
}

// Closed ball mass; balls are closed so radius sweeps over the distance
// multiset are exact.
inline double ball_mass(const FiniteMetricMeasureSpace& s, int x, double r) {
  double m = 0.0;
  for (int y = 0; y < s.n; ++y)
    if (s.d(x, y) <= r + kStructuralTol) m += s.w(y);
  return m;
}

inline std::vector<double> distinct_radii(const FiniteMetricMeasureSpace& s, double R) {
  std::set<double> vals;
  for (int i = 0; i < s.n; ++i)
    for (int j = i + 1; j < s.n; ++j)
      if (s.d(i, j) > 0.0 && s.d(i, j) <= R + kStructuralTol) vals.insert(s.d(i, j));
  return std::vector<double>(vals.begin(), vals.end());
}

inline double doubling_constant(const FiniteMetricMeasureSpace& s, double R) {
  if (!(R > 0.0)) throw std::invalid_argument("doubling_constant: R must be positive");
  std::vector<double> radii = distinct_radii(s, R);
  if (radii.empty()) return 1.0;
  double best = 1.0;
  for (int x = 0; x < s.n; ++x)
    for (double r : radii) best = std::max(best, ball_mass(s, x, 2.0 * r) / ball_mass(s, x, r));
  return best;
}

inline std::vector<double> local_lip(const FiniteMetricMeasureSpace& s, const RealFunction& f, double r0) {
  if (!(r0 > 0.0)) throw std::invalid_argument("local_lip: r0 must be positive");
  std::vector<double> out(s.n, 0.0);
  for (int x = 0; x < s.n; ++x)
    for (int y = 0; y < s.n; ++y)
      if (y != x && s.d(x, y) <= r0 + kStructuralTol)
        out[x] = std::max(out[x], std::fabs(f.values[y] - f.values[x]) / s.d(x, y));
  return out;
}

inline double min_positive_distance(const FiniteMetricMeasureSpace& s) {
  double m = std::numeric_limits<double>::infinity();
  for (int i = 0; i < s.n; ++i)
    for (int j = i + 1; j < s.n; ++j) m = std::min(m, s.d(i, j));
  return m;
}

enum class PoincareCenter { mean, median };

struct PoincareReport {
  bool pass = true;
  double worst_ratio = 0.0;  // +inf when the right side vanishes but the left does not
  int witness_center = -1;
  double witness_radius = 0.0;
  double worst_lhs = 0.0;
  double worst_rhs = 0.0;
};

// Checks the weak local (1,1) Poincare inequality
//   avg_{B_r(x)} |f - f_B| dm  <=  tau * r * avg_{B_{Lambda r}(x)} lip f dm
// over all centers and all distinct radii r <= R.
inline PoincareReport poincare_check(const FiniteMetricMeasureSpace& s, const RealFunction& f, double r0, double tau,
                                     double Lambda, double R, PoincareCenter center = PoincareCenter::mean) {
  if (!(tau > 0.0) || !(Lambda > 0.0) || !(R > 0.0) || !(r0 > 0.0))
    throw std::invalid_argument("poincare_check: parameters must be positive");
  std::vector<double> lip = local_lip(s, f, r0);
  PoincareReport rep;
  const double inf = std::numeric_limits<double>::infinity();
  for (int x = 0; x < s.n; ++x) {
    for (double r : distinct_radii(s, R)) {
      std::vector<int> ball;
      double mB = 0.0;
      for (int y = 0; y < s.n; ++y)
        if (s.d(x, y) <= r + kStructuralTol) {
          ball.push_back(y);
          mB += s.w(y);
        }
      double c;
      if (center == PoincareCenter::mean) {
        c = 0.0;
        for (int y : ball) c += f.values[y] * s.w(y);
        c /= mB;
      } else {
        // weighted median of f over the ball
        std::vector<std::pair<double, double>> fw;
        for (int y : ball) fw.push_back({f.values[y], s.w(y)});
        std::sort(fw.begin(), fw.end());
        double acc = 0.0;
        c = fw.back().first;
        for (auto& p : fw) {
          acc += p.second;
          if (acc >= mB / 2.0) {
            c = p.first;
            break;
          }
        }
      }
      double lhs = 0.0;
      for (int y : ball) lhs += std::fabs(f.values[y] - c) * s.w(y);
      lhs /= mB;

      double mE = 0.0, rhs_avg = 0.0;
      for (int y = 0; y < s.n; ++y)
        if (s.d(x, y) <= Lambda * r + kStructuralTol) {
          mE += s.w(y);
          rhs_avg += lip[y] * s.w(y);
        }
      double rhs = tau * r * rhs_avg / mE;

      double ratio;
      if (rhs > 0.0)
        ratio = lhs / rhs;
      else
        ratio = (lhs <= kStructuralTol) ? 0.0 : inf;
      if (ratio > rep.worst_ratio) {
        rep.worst_ratio = ratio;
        rep.witness_center = x;
        rep.witness_radius = r;
        rep.worst_lhs = lhs;
        rep.worst_rhs = rhs;
      }
    }
  }
  rep.pass = rep.worst_ratio <= 1.0 + 1e-9;
  return rep;
}

// Convenience grid search: smallest (tau, Lambda) pair from the given grids
// that makes the check pass, or nullopt-like failure flag.
struct PoincareSearchResult {
  bool found = false;
  double tau = 0.0;
  double Lambda = 0.0;
};

inline PoincareSearchResult poincare_search(const FiniteMetricMeasureSpace& s, const RealFunction& f, double r0,
                                            double R, const std::vector<double>& taus,
                                            const std::vector<double>& lambdas) {
  for (double tau : taus)
    for (double L : lambdas)
      if (poincare_check(s, f, r0, tau, L, R).pass) return {true, tau, L};
  return {};
}

}  // namespace bip
