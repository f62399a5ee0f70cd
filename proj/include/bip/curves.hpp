#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <stdexcept>
#include <vector>

#include "bip/measure.hpp"
#include "bip/space.hpp"

namespace bip {

// Curve on the uniform time grid t_j = j/T.
struct DiscreteCurve {
  std::vector<int> nodes;  // length T+1

  int T() const { return static_cast<int>(nodes.size()) - 1; }
};

// Weighted finite family of curves on a shared grid.
struct TestPlan {
  std::vector<DiscreteCurve> curves;
  std::vector<double> probs;
  int T = 0;
  double q = 2.0;

  int size() const { return static_cast<int>(curves.size()); }
};

inline void check_plan(const TestPlan& plan) {
  if (plan.curves.size() != plan.probs.size()) throw std::invalid_argument("plan: curve/prob size mismatch");
  double total = 0.0;
  for (double p : plan.probs) {
    if (p < 0.0) throw std::invalid_argument("plan: negative probability");
    total += p;
  }
  if (std::fabs(total - 1.0) > kMassTol) throw std::invalid_argument("plan: probabilities must sum to 1");
  for (const DiscreteCurve& c : plan.curves)
    if (c.T() != plan.T) throw std::invalid_argument("plan: curves must share the grid");
}

inline std::vector<double> metric_speed(const FiniteMetricMeasureSpace& s, const DiscreteCurve& g) {
  int T = g.T();
  std::vector<double> v(T, 0.0);
  for (int j = 0; j < T; ++j) v[j] = T * s.d(g.nodes[j], g.nodes[j + 1]);
  return v;
}

inline double kinetic_energy(const FiniteMetricMeasureSpace& s, const DiscreteCurve& g, double q) {
  if (!(q > 1.0)) throw std::invalid_argument("kinetic_energy: q must exceed 1");
  double e = 0.0;
  int T = g.T();
  for (int j = 0; j < T; ++j) e += std::pow(T * s.d(g.nodes[j], g.nodes[j + 1]), q);
  return e / T;
}

inline DiscreteCurve restrict_curve(const DiscreteCurve& g, double s, double t) {
  int T = g.T();
  double js = s * T, jt = t * T;
  int a = static_cast<int>(std::lround(js)), b = static_cast<int>(std::lround(jt));
  if (std::fabs(js - a) > 1e-9 || std::fabs(jt - b) > 1e-9)
    throw std::invalid_argument("restrict_curve: times must be grid-aligned");
  if (!(a < b) || a < 0 || b > T) throw std::invalid_argument("restrict_curve: need 0 <= s < t <= 1");
  DiscreteCurve out;
  out.nodes.assign(g.nodes.begin() + a, g.nodes.begin() + b + 1);
  return out;
}

// Shortest path x -> y resampled to T+1 nodes at near-constant speed.
// Path choice: walk from x, always taking the smallest-index neighbor that
// stays on a shortest path. Node j minimizes |arc-length - (j/T) d(x,y)|,
// ties broken by smaller point index.
inline DiscreteCurve shortest_path_curve(const FiniteMetricMeasureSpace& s, int x, int y, int T) {
  if (T < 1) throw std::invalid_argument("shortest_path_curve: T must be >= 1");
  if (!s.has_graph()) throw std::invalid_argument("shortest_path_curve: graph metric required");
  if (!std::isfinite(s.d(x, y))) throw std::invalid_argument("shortest_path_curve: disconnected pair");

  std::vector<int> path_nodes;
  std::vector<double> arc;
  path_nodes.push_back(x);
  arc.push_back(0.0);
  const double D = s.d(x, y);
  int cur = x;
  double walked = 0.0;
  while (cur != y) {
    int next = -1;
    double step = 0.0;
    for (const Edge& e : s.edge_list) {
      int z = -1;
      if (e.u == cur)
        z = e.v;
      else if (e.v == cur)
        z = e.u;
      else
        continue;
      if (std::fabs(walked + e.len + s.d(z, y) - D) <= 1e-9 * std::max(1.0, D) + 1e-12)
        if (next < 0 || z < next) {
          next = z;
          step = e.len;
        }
    }
    if (next < 0) throw std::runtime_error("shortest_path_curve: path reconstruction failed");
    cur = next;
    walked += step;
    path_nodes.push_back(cur);
    arc.push_back(walked);
  }

  DiscreteCurve out;
  out.nodes.resize(T + 1);
  out.nodes[0] = x;
  out.nodes[T] = y;
  for (int j = 1; j < T; ++j) {
    double target = (static_cast<double>(j) / T) * D;
    int best = 0;
    double best_err = std::fabs(arc[0] - target);
    for (size_t k = 1; k < path_nodes.size(); ++k) {
      double err = std::fabs(arc[k] - target);
      if (err < best_err - 1e-12 || (err <= best_err + 1e-12 && path_nodes[k] < path_nodes[best])) {
        best = static_cast<int>(k);
        best_err = err;
      }
    }
    out.nodes[j] = path_nodes[best];
  }
  return out;
}

// Marginal (e_{jt/T})_# plan as a measure on the space.
inline ProbMeasure plan_marginal(const TestPlan& plan, int jt, int n) {
  std::vector<double> mass(n, 0.0);
  for (int k = 0; k < plan.size(); ++k) mass[plan.curves[k].nodes[jt]] += plan.probs[k];
  return {std::move(mass)};
}

inline double compression(const FiniteMetricMeasureSpace& s, const TestPlan& plan) {
  double comp = 0.0;
  for (int jt = 0; jt <= plan.T; ++jt) {
    ProbMeasure mu = plan_marginal(plan, jt, s.n);
    comp = std::max(comp, sup_density(s, mu));
  }
  return comp;
}

inline double plan_kinetic_energy(const FiniteMetricMeasureSpace& s, const TestPlan& plan) {
  double e = 0.0;
  for (int k = 0; k < plan.size(); ++k) e += plan.probs[k] * kinetic_energy(s, plan.curves[k], plan.q);
  return e;
}

inline double plan_max_speed(const FiniteMetricMeasureSpace& s, const TestPlan& plan) {
  double v = 0.0;
  for (const DiscreteCurve& c : plan.curves)
    for (double x : metric_speed(s, c)) v = std::max(v, x);
  return v;
}

inline TestPlan rescale_plan(const TestPlan& plan, const std::vector<int>& subset) {
  double total = 0.0;
  for (int k : subset) total += plan.probs[k];
  if (!(total > 0.0)) throw std::invalid_argument("rescale_plan: subset has zero mass");
  TestPlan out;
  out.T = plan.T;
  out.q = plan.q;
  for (int k : subset) {
    out.curves.push_back(plan.curves[k]);
    out.probs.push_back(plan.probs[k] / total);
  }
  return out;
}

inline TestPlan restrict_plan(const TestPlan& plan, double s, double t) {
  TestPlan out;
  out.q = plan.q;
  out.probs = plan.probs;
  for (const DiscreteCurve& c : plan.curves) out.curves.push_back(restrict_curve(c, s, t));
  out.T = out.curves.empty() ? plan.T : out.curves.front().T();
  return out;
}

// Merge identical curves, dropping zero weights.
inline TestPlan merge_duplicate_curves(const TestPlan& plan) {
  TestPlan out;
  out.T = plan.T;
  out.q = plan.q;
  std::map<std::vector<int>, int> seen;
  for (int k = 0; k < plan.size(); ++k) {
    if (plan.probs[k] <= 0.0) continue;
    auto it = seen.find(plan.curves[k].nodes);
    if (it == seen.end()) {
      seen[plan.curves[k].nodes] = out.size();
      out.curves.push_back(plan.curves[k]);
      out.probs.push_back(plan.probs[k]);
    } else {
      out.probs[it->second] += plan.probs[k];
    }
  }
  return out;
}

// Markov gluing through the shared junction marginal: a curve of the first
// plan ending at x continues with a second-plan curve starting at x, with the
// conditional product weights. Output lives on the concatenated grid T1 + T2.
inline TestPlan glue_plans(const TestPlan& first, const TestPlan& second, int n) {
  ProbMeasure end = plan_marginal(first, first.T, n);
  ProbMeasure start = plan_marginal(second, 0, n);
  for (int i = 0; i < n; ++i)
    if (std::fabs(end.mass[i] - start.mass[i]) > kMarginalTol)
      throw std::invalid_argument("glue_plans: junction marginals mismatch");

  TestPlan out;
  out.T = first.T + second.T;
  out.q = first.q;
  for (int k1 = 0; k1 < first.size(); ++k1) {
    if (first.probs[k1] <= 0.0) continue;
    int x = first.curves[k1].nodes.back();
    for (int k2 = 0; k2 < second.size(); ++k2) {
      if (second.probs[k2] <= 0.0) continue;
      if (second.curves[k2].nodes.front() != x) continue;
      double w = first.probs[k1] * second.probs[k2] / end.mass[x];
      DiscreteCurve c;
      c.nodes = first.curves[k1].nodes;
      c.nodes.insert(c.nodes.end(), second.curves[k2].nodes.begin() + 1, second.curves[k2].nodes.end());
      out.curves.push_back(std::move(c));
      out.probs.push_back(w);
    }
  }
  return merge_duplicate_curves(out);
}

inline double curve_sup_distance(const FiniteMetricMeasureSpace& s, const DiscreteCurve& a, const DiscreteCurve& b) {
  double m = 0.0;
  for (size_t j = 0; j < a.nodes.size(); ++j) m = std::max(m, s.d(a.nodes[j], b.nodes[j]));
  return m;
}

using Interpolator = std::function<TestPlan(const ProbMeasure&, const ProbMeasure&, int)>;

// Polygonal approximation: partition curves into sup-metric cells of diameter
// <= 1/n, replace each cell on each time block [j/m, (j+1)/m] by the
// interpolating plan between the cell's block marginals, glue the blocks.
inline TestPlan polygonal_approximation(const FiniteMetricMeasureSpace& s, const TestPlan& plan, int n_scale,
                                        int m_sub, const Interpolator& interpolator) {
  if (n_scale < 1 || m_sub < 1) throw std::invalid_argument("polygonal_approximation: n, m must be >= 1");
  if (plan.T % m_sub != 0) throw std::invalid_argument("polygonal_approximation: m must divide the plan grid T");
  const int Tb = plan.T / m_sub;
  const double cell_diam = 1.0 / n_scale;

  // Greedy deterministic clustering in curve creation order: a curve joins the
  // first cell all of whose members are within the diameter bound.
  std::vector<std::vector<int>> cells;
  for (int k = 0; k < plan.size(); ++k) {
    if (plan.probs[k] <= 0.0) continue;
    bool placed = false;
    for (auto& cell : cells) {
      bool fits = true;
      for (int kk : cell)
        if (curve_sup_distance(s, plan.curves[k], plan.curves[kk]) > cell_diam) {
          fits = false;
          break;
        }
      if (fits) {
        cell.push_back(k);
        placed = true;
        break;
      }
    }
    if (!placed) cells.push_back({k});
  }

  TestPlan out;
  out.T = plan.T;
  out.q = plan.q;
  for (auto& cell : cells) {
    double cell_mass = 0.0;
    for (int k : cell) cell_mass += plan.probs[k];
    TestPlan conditional = rescale_plan(plan, cell);

    TestPlan glued;
    for (int j = 0; j < m_sub; ++j) {
      ProbMeasure a = plan_marginal(conditional, j * Tb, s.n);
      ProbMeasure b = plan_marginal(conditional, (j + 1) * Tb, s.n);
      TestPlan block = interpolator(a, b, Tb);
      glued = (j == 0) ? block : glue_plans(glued, block, s.n);
    }
    for (int k = 0; k < glued.size(); ++k) {
      out.curves.push_back(glued.curves[k]);
      out.probs.push_back(cell_mass * glued.probs[k]);
    }
  }
  return merge_duplicate_curves(out);
}

}  // namespace bip
