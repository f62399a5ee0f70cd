#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <queue>
#include <stdexcept>
#include <vector>

#include "bip/measure.hpp"
#include "bip/space.hpp"

namespace bip {

struct TransportResult {
  double wq = 0.0;      // W_q
  double wq_pow = 0.0;  // W_q^q, kept to avoid repeated root extraction downstream
  Coupling coupling;
};

namespace detail {

// Transportation simplex on the bipartite support graph. Deterministic:
// north-west-corner start, Bland's anti-cycling rule (first negative reduced
// cost in row-major order enters, first minimizer on the cycle leaves).
struct TransportSimplex {
  int R, C;
  const std::vector<double>& a;  // supplies
  const std::vector<double>& b;  // demands
  const Matrix& cost;
  Matrix flow;
  std::vector<char> basic;

  TransportSimplex(const std::vector<double>& a_, const std::vector<double>& b_, const Matrix& cost_)
      : R(static_cast<int>(a_.size())),
        C(static_cast<int>(b_.size())),
        a(a_),
        b(b_),
        cost(cost_),
        flow(R, C, 0.0),
        basic(static_cast<size_t>(R) * C, 0) {}

  char& is_basic(int r, int c) { return basic[static_cast<size_t>(r) * C + c]; }

  void northwest_start() {
    std::vector<double> ra = a, rb = b;
    int i = 0, j = 0;
    while (i < R && j < C) {
      double x = std::min(ra[i], rb[j]);
      flow(i, j) = x;
      is_basic(i, j) = 1;
      ra[i] -= x;
      rb[j] -= x;
      if (ra[i] <= rb[j])
        ++i;
      else
        ++j;
    }
    // Pad to a spanning tree (R + C - 1 basic arcs) with zero-flow arcs that
    // do not close a cycle; needed when the NW walk exhausts both sides at once.
    int count = 0;
    for (char x : basic) count += x;
    if (count < R + C - 1) {
      std::vector<int> comp(R + C);
      std::iota(comp.begin(), comp.end(), 0);
      std::function<int(int)> find = [&](int x) { return comp[x] == x ? x : comp[x] = find(comp[x]); };
      for (int r = 0; r < R; ++r)
        for (int c = 0; c < C; ++c)
          if (is_basic(r, c)) comp[find(r)] = find(R + c);
      for (int r = 0; r < R && count < R + C - 1; ++r)
        for (int c = 0; c < C && count < R + C - 1; ++c)
          if (!is_basic(r, c) && find(r) != find(R + c)) {
            is_basic(r, c) = 1;
            comp[find(r)] = find(R + c);
            ++count;
          }
    }
  }

  // Potentials u, v with u[i] + v[j] = cost(i,j) on basic arcs.
  void potentials(std::vector<double>& u, std::vector<double>& v) {
    u.assign(R, 0.0);
    v.assign(C, 0.0);
    std::vector<char> seen(R + C, 0);
    std::queue<int> q;
    q.push(0);
    seen[0] = 1;
    while (!q.empty()) {
      int node = q.front();
      q.pop();
      if (node < R) {
        for (int c = 0; c < C; ++c)
          if (is_basic(node, c) && !seen[R + c]) {
            v[c] = cost(node, c) - u[node];
            seen[R + c] = 1;
            q.push(R + c);
          }
      } else {
        int c = node - R;
        for (int r = 0; r < R; ++r)
          if (is_basic(r, c) && !seen[r]) {
            u[r] = cost(r, c) - v[c];
            seen[r] = 1;
            q.push(r);
          }
      }
    }
  }

  // Path between two tree nodes through basic arcs.
  std::vector<int> tree_path(int from, int to) {
    std::vector<int> parent(R + C, -1);
    std::vector<char> seen(R + C, 0);
    std::queue<int> q;
    q.push(from);
    seen[from] = 1;
    while (!q.empty()) {
      int node = q.front();
      q.pop();
      if (node == to) break;
      if (node < R) {
        for (int c = 0; c < C; ++c)
          if (is_basic(node, c) && !seen[R + c]) {
            seen[R + c] = 1;
            parent[R + c] = node;
            q.push(R + c);
          }
      } else {
        int c = node - R;
        for (int r = 0; r < R; ++r)
          if (is_basic(r, c) && !seen[r]) {
            seen[r] = 1;
            parent[r] = node;
            q.push(r);
          }
      }
    }
    std::vector<int> path;
    for (int x = to; x != -1; x = parent[x]) path.push_back(x);
    std::reverse(path.begin(), path.end());
    return path;
  }

  void solve() {
    northwest_start();
    const double tol = 1e-12;
    std::vector<double> u, v;
    for (;;) {
      potentials(u, v);
      int er = -1, ec = -1;
      for (int r = 0; r < R && er < 0; ++r)
        for (int c = 0; c < C; ++c)
          if (!is_basic(r, c) && cost(r, c) - u[r] - v[c] < -tol) {
            er = r;
            ec = c;
            break;
          }
      if (er < 0) break;

      // Unique cycle: entering arc plus the tree path from its column node
      // back to its row node. Arcs alternate +,-,+,... starting at entering.
      std::vector<int> path = tree_path(R + ec, er);  // col node ... row node
      std::vector<std::pair<int, int>> arcs;          // (r, c) along the cycle, starting with entering
      arcs.push_back({er, ec});
      for (size_t k = 0; k + 1 < path.size(); ++k) {
        int x = path[k], y = path[k + 1];
        int r = x < R ? x : y;
        int c = x < R ? y - R : x - R;
        arcs.push_back({r, c});
      }
      double theta = std::numeric_limits<double>::infinity();
      for (size_t k = 1; k < arcs.size(); k += 2) theta = std::min(theta, flow(arcs[k].first, arcs[k].second));
      int lr = -1, lc = -1;
      for (size_t k = 1; k < arcs.size(); k += 2)
        if (flow(arcs[k].first, arcs[k].second) <= theta) {
          lr = arcs[k].first;
          lc = arcs[k].second;
          break;
        }
      for (size_t k = 0; k < arcs.size(); ++k) {
        double& fx = flow(arcs[k].first, arcs[k].second);
        fx += (k % 2 == 0) ? theta : -theta;
        if (fx < 0.0) fx = 0.0;
      }
      is_basic(er, ec) = 1;
      is_basic(lr, lc) = 0;
      flow(lr, lc) = 0.0;
    }
  }
};

}  // namespace detail

inline TransportResult wasserstein(const FiniteMetricMeasureSpace& s, double q, const ProbMeasure& mu0,
                                   const ProbMeasure& mu1) {
  if (!(q > 1.0) || !std::isfinite(q)) throw std::invalid_argument("wasserstein: q must lie in (1, inf)");
  if (mu0.n() != s.n || mu1.n() != s.n) throw std::invalid_argument("wasserstein: measure size mismatch");

  // Degenerate (zero-mass) rows and columns are dropped before solving and
  // reinstated as zero rows in the output.
  std::vector<int> rows = mu0.support(), cols = mu1.support();
  int R = static_cast<int>(rows.size()), C = static_cast<int>(cols.size());
  std::vector<double> a(R), b(C);
  for (int r = 0; r < R; ++r) a[r] = mu0.mass[rows[r]];
  for (int c = 0; c < C; ++c) b[c] = mu1.mass[cols[c]];
  Matrix cost(R, C);
  for (int r = 0; r < R; ++r)
    for (int c = 0; c < C; ++c) cost(r, c) = std::pow(s.d(rows[r], cols[c]), q);

  detail::TransportSimplex simplex(a, b, cost);
  simplex.solve();

  TransportResult out;
  out.coupling.plan = Matrix(s.n, s.n, 0.0);
  double total = 0.0;
  for (int r = 0; r < R; ++r)
    for (int c = 0; c < C; ++c)
      if (simplex.flow(r, c) > 0.0) {
        out.coupling.plan(rows[r], cols[c]) = simplex.flow(r, c);
        total += simplex.flow(r, c) * cost(r, c);
      }
  out.wq_pow = total;
  out.wq = std::pow(total, 1.0 / q);
  out.coupling.source = mu0;
  out.coupling.target = mu1;
  return out;
}

// Oracle: the optimum of a transportation problem is attained at a vertex of
// the feasible polytope, and every vertex is the basic solution of some
// spanning tree of the bipartite graph on the two supports. Enumerates all
// such trees, solves each by peeling leaves, and keeps the cheapest feasible
// one. Exponential; intended only to cross-check the solver on tiny supports.
inline TransportResult brute_force_wasserstein(const FiniteMetricMeasureSpace& s, double q, const ProbMeasure& mu0,
                                               const ProbMeasure& mu1) {
  if (!(q > 1.0) || !std::isfinite(q)) throw std::invalid_argument("q must lie in (1, inf)");
  std::vector<int> rows = mu0.support(), cols = mu1.support();
  const int R = static_cast<int>(rows.size()), C = static_cast<int>(cols.size());
  if (R > 5 || C > 5) throw std::invalid_argument("brute_force_wasserstein: supports must have size <= 5");

  const int edges = R * C;       // edge e joins row e / C to column e % C
  const int need = R + C - 1;    // edge count of a spanning tree
  std::vector<double> costq(edges);
  for (int e = 0; e < edges; ++e) costq[e] = std::pow(s.d(rows[e / C], cols[e % C]), q);

  double best = std::numeric_limits<double>::infinity();
  Matrix best_flow(R, C, 0.0);
  std::vector<int> pick(need);
  std::iota(pick.begin(), pick.end(), 0);
  std::vector<int> uf(R + C), deg(R + C);
  std::vector<double> res(R + C), flow(need);
  std::vector<std::vector<std::pair<int, int>>> inc(R + C);  // node -> (edge slot, other node)
  auto uf_find = [&uf](int x) {
    while (uf[x] != x) x = uf[x] = uf[uf[x]];
    return x;
  };
  while (true) {
    // A spanning tree is exactly `need` edges with no cycle among them.
    std::iota(uf.begin(), uf.end(), 0);
    bool tree = true;
    for (int t = 0; t < need && tree; ++t) {
      const int a = uf_find(pick[t] / C), b = uf_find(R + pick[t] % C);
      if (a == b)
        tree = false;
      else
        uf[a] = b;
    }
    if (tree) {
      for (int v = 0; v < R + C; ++v) {
        deg[v] = 0;
        inc[v].clear();
      }
      for (int t = 0; t < need; ++t) {
        const int a = pick[t] / C, b = R + pick[t] % C;
        inc[a].push_back({t, b});
        inc[b].push_back({t, a});
        ++deg[a];
        ++deg[b];
      }
      for (int r = 0; r < R; ++r) res[r] = mu0.mass[rows[r]];
      for (int c = 0; c < C; ++c) res[R + c] = mu1.mass[cols[c]];
      // Peel leaves: a leaf's residual mass forces the flow on its only edge.
      std::vector<int> stack;
      std::vector<char> used(need, 0);
      for (int v = 0; v < R + C; ++v)
        if (deg[v] == 1) stack.push_back(v);
      bool feasible = true;
      double total = 0.0;
      while (!stack.empty()) {
        const int v = stack.back();
        stack.pop_back();
        if (deg[v] != 1) continue;
        for (const auto& [t, other] : inc[v]) {
          if (used[t]) continue;
          flow[t] = res[v];
          used[t] = 1;
          if (flow[t] < -1e-12) feasible = false;
          total += std::max(flow[t], 0.0) * costq[pick[t]];
          res[other] -= res[v];
          res[v] = 0.0;
          if (--deg[other] == 1) stack.push_back(other);
          deg[v] = 0;
          break;
        }
        if (!feasible) break;
      }
      if (feasible && total < best) {
        best = total;
        best_flow = Matrix(R, C, 0.0);
        for (int t = 0; t < need; ++t) best_flow(pick[t] / C, pick[t] % C) = std::max(flow[t], 0.0);
      }
    }
    // Advance to the next edge subset in lexicographic order.
    int i = need - 1;
    while (i >= 0 && pick[i] == edges - need + i) --i;
    if (i < 0) break;
    ++pick[i];
    for (int j = i + 1; j < need; ++j) pick[j] = pick[j - 1] + 1;
  }

  TransportResult out;
  out.wq_pow = best;
  out.wq = std::pow(best, 1.0 / q);
  out.coupling.plan = Matrix(s.n, s.n, 0.0);
  for (int r = 0; r < R; ++r)
    for (int c = 0; c < C; ++c) out.coupling.plan(rows[r], cols[c]) = best_flow(r, c);
  out.coupling.source = mu0;
  out.coupling.target = mu1;
  return out;
}

struct ConvergenceReport {
  std::vector<double> wq;       // W_q(mu_n, limit)
  std::vector<double> moments;  // integral of d^q(., x0) against mu_n
  double limit_moment = 0.0;
  bool converged = false;
};

inline ConvergenceReport wq_convergence_check(const FiniteMetricMeasureSpace& s, double q,
                                              const std::vector<ProbMeasure>& seq, const ProbMeasure& limit, int x0,
                                              double tol = 1e-9, int tail_window = 1) {
  if (seq.empty()) throw std::invalid_argument("wq_convergence_check: empty sequence");
  ConvergenceReport rep;
  for (const ProbMeasure& mu : seq) {
    rep.wq.push_back(wasserstein(s, q, mu, limit).wq);
    double m = 0.0;
    for (int i = 0; i < s.n; ++i) m += std::pow(s.d(i, x0), q) * mu.mass[i];
    rep.moments.push_back(m);
  }
  for (int i = 0; i < s.n; ++i) rep.limit_moment += std::pow(s.d(i, x0), q) * limit.mass[i];
  rep.converged = true;
  int from = std::max(0, static_cast<int>(seq.size()) - tail_window);
  for (size_t k = from; k < seq.size(); ++k)
    if (rep.wq[k] > tol || std::fabs(rep.moments[k] - rep.limit_moment) > tol) rep.converged = false;
  return rep;
}

}  // namespace bip
