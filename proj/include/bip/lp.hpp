#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "bip/common.hpp"

namespace bip {

// Small dense-basis revised simplex for the interpolation LPs. Columns are
// sparse (transport-style programs have 1-4 nonzeros per column), the basis
// inverse is kept dense. Deterministic: Dantzig pricing with a permanent
// switch to Bland's rule after a degenerate stall, fixed tie-breaks.

enum class LPSense : char { le, eq, ge };

struct LPRow {
  std::vector<std::pair<int, double>> coef;
  LPSense sense = LPSense::eq;
  double rhs = 0.0;
};

struct LinearProgram {
  int num_vars = 0;
  std::vector<double> objective;  // size num_vars, minimized; x >= 0 implicit
  std::vector<LPRow> rows;
};

enum class LPStatus { optimal, infeasible, unbounded, iteration_limit, numerical_failure };

struct LPSolution {
  LPStatus status = LPStatus::numerical_failure;
  std::vector<double> x;
  double objective = 0.0;
  int iterations = 0;
};

namespace detail {

struct SimplexState {
  int m = 0;                                          // rows
  int n = 0;                                          // structural + slack columns
  std::vector<std::vector<std::pair<int, double>>> col;  // sparse columns
  std::vector<double> cost;                           // phase-2 costs
  std::vector<double> rhs;
  int first_artificial = 0;  // columns >= this are artificial
  std::vector<int> basis;
  std::vector<char> in_basis;
  Matrix binv;
  std::vector<double> xb;

  void refactor() {
    // Gauss-Jordan inversion of the basis matrix.
    Matrix a(m, 2 * m, 0.0);
    for (int r = 0; r < m; ++r) {
      for (auto& [i, v] : col[basis[r]]) a(i, r) = v;
      a(r, m + r) = 1.0;
    }
    for (int p = 0; p < m; ++p) {
      int piv = p;
      for (int r = p + 1; r < m; ++r)
        if (std::fabs(a(r, p)) > std::fabs(a(piv, p))) piv = r;
      if (std::fabs(a(piv, p)) < 1e-13) throw std::runtime_error("singular basis");
      if (piv != p)
        for (int c = 0; c < 2 * m; ++c) std::swap(a(p, c), a(piv, c));
      double d = a(p, p);
      for (int c = 0; c < 2 * m; ++c) a(p, c) /= d;
      for (int r = 0; r < m; ++r)
        if (r != p && a(r, p) != 0.0) {
          double f = a(r, p);
          for (int c = 0; c < 2 * m; ++c) a(r, c) -= f * a(p, c);
        }
    }
    binv = Matrix(m, m, 0.0);
    for (int r = 0; r < m; ++r)
      for (int c = 0; c < m; ++c) binv(r, c) = a(r, m + c);
    recompute_xb();
  }

  void recompute_xb() {
    xb.assign(m, 0.0);
    for (int r = 0; r < m; ++r) {
      double s = 0.0;
      for (int c = 0; c < m; ++c) s += binv(r, c) * rhs[c];
      xb[r] = s;
    }
  }

  std::vector<double> column_direction(int j) const {
    std::vector<double> d(m, 0.0);
    for (auto& [i, v] : col[j])
      for (int r = 0; r < m; ++r) d[r] += binv(r, i) * v;
    return d;
  }
};

// One simplex phase over the given cost vector. banned columns never enter.
inline LPStatus run_phase(SimplexState& st, const std::vector<double>& cost, const std::vector<char>& banned,
                          int max_iter, int& iter_count) {
  const double rc_tol = 1e-9;
  const double piv_tol = 1e-10;
  int degenerate_run = 0;
  bool bland = false;
  int since_refactor = 0;

  for (;;) {
    if (iter_count >= max_iter) return LPStatus::iteration_limit;
    ++iter_count;
    if (++since_refactor >= 500) {
      st.refactor();
      since_refactor = 0;
    }

    // Duals y = c_B^T B^{-1}.
    std::vector<double> y(st.m, 0.0);
    for (int r = 0; r < st.m; ++r) {
      double cb = cost[st.basis[r]];
      if (cb != 0.0)
        for (int c = 0; c < st.m; ++c) y[c] += cb * st.binv(r, c);
    }

    int enter = -1;
    double best_rc = -rc_tol;
    for (int j = 0; j < st.n; ++j) {
      if (st.in_basis[j] || banned[j]) continue;
      double rc = cost[j];
      for (auto& [i, v] : st.col[j]) rc -= y[i] * v;
      if (bland) {
        if (rc < -rc_tol) {
          enter = j;
          break;
        }
      } else if (rc < best_rc) {
        best_rc = rc;
        enter = j;
      }
    }
    if (enter < 0) return LPStatus::optimal;

    std::vector<double> d = st.column_direction(enter);
    double theta = std::numeric_limits<double>::infinity();
    int leave_row = -1;
    for (int r = 0; r < st.m; ++r)
      if (d[r] > piv_tol) {
        double ratio = st.xb[r] / d[r];
        if (ratio < theta - 1e-12 ||
            (ratio < theta + 1e-12 && (leave_row < 0 || st.basis[r] < st.basis[leave_row]))) {
          theta = ratio;
          leave_row = r;
        }
      }
    if (leave_row < 0) return LPStatus::unbounded;
    if (theta < 0.0) theta = 0.0;

    if (theta <= 1e-12) {
      if (++degenerate_run >= 30) bland = true;
    } else {
      degenerate_run = 0;
    }

    // Pivot: update basis inverse and basic solution.
    double piv = d[leave_row];
    for (int c = 0; c < st.m; ++c) st.binv(leave_row, c) /= piv;
    for (int r = 0; r < st.m; ++r)
      if (r != leave_row && d[r] != 0.0) {
        double f = d[r];
        for (int c = 0; c < st.m; ++c) st.binv(r, c) -= f * st.binv(leave_row, c);
        st.xb[r] -= f * theta;
        if (st.xb[r] < 0.0) st.xb[r] = 0.0;
      }
    st.in_basis[st.basis[leave_row]] = 0;
    st.in_basis[enter] = 1;
    st.basis[leave_row] = enter;
    st.xb[leave_row] = theta;
  }
}

}  // namespace detail

inline LPSolution solve_lp(const LinearProgram& lp, int max_iter = 200000) {
  const int m = static_cast<int>(lp.rows.size());
  detail::SimplexState st;
  st.m = m;

  // Normalize to rhs >= 0, then append slack/surplus and artificial columns.
  std::vector<double> sign(m, 1.0);
  st.rhs.resize(m);
  std::vector<LPSense> sense(m);
  for (int r = 0; r < m; ++r) {
    sense[r] = lp.rows[r].sense;
    double b = lp.rows[r].rhs;
    if (b < 0.0) {
      sign[r] = -1.0;
      b = -b;
      if (sense[r] == LPSense::le)
        sense[r] = LPSense::ge;
      else if (sense[r] == LPSense::ge)
        sense[r] = LPSense::le;
    }
    st.rhs[r] = b;
  }

  st.col.resize(lp.num_vars);
  st.cost = lp.objective;
  for (int r = 0; r < m; ++r)
    for (auto& [j, v] : lp.rows[r].coef) {
      if (j < 0 || j >= lp.num_vars) throw std::invalid_argument("lp: column index out of range");
      st.col[j].push_back({r, sign[r] * v});
    }

  st.basis.assign(m, -1);
  for (int r = 0; r < m; ++r) {
    if (sense[r] == LPSense::le) {
      st.col.push_back({{r, 1.0}});
      st.cost.push_back(0.0);
      st.basis[r] = static_cast<int>(st.col.size()) - 1;
    } else if (sense[r] == LPSense::ge) {
      st.col.push_back({{r, -1.0}});
      st.cost.push_back(0.0);
    }
  }
  st.first_artificial = static_cast<int>(st.col.size());
  for (int r = 0; r < m; ++r)
    if (st.basis[r] < 0) {
      st.col.push_back({{r, 1.0}});
      st.cost.push_back(0.0);
      st.basis[r] = static_cast<int>(st.col.size()) - 1;
    }
  st.n = static_cast<int>(st.col.size());

  st.in_basis.assign(st.n, 0);
  for (int r = 0; r < m; ++r) st.in_basis[st.basis[r]] = 1;
  st.binv = Matrix(m, m, 0.0);
  for (int r = 0; r < m; ++r) st.binv(r, r) = 1.0;
  st.xb = st.rhs;

  LPSolution sol;
  int iters = 0;
  try {
    bool need_phase1 = st.first_artificial < st.n;
    if (need_phase1) {
      std::vector<double> p1(st.n, 0.0);
      for (int j = st.first_artificial; j < st.n; ++j) p1[j] = 1.0;
      std::vector<char> banned(st.n, 0);
      LPStatus ph1 = detail::run_phase(st, p1, banned, max_iter, iters);
      if (ph1 == LPStatus::iteration_limit) {
        sol.status = ph1;
        return sol;
      }
      double infeas = 0.0;
      for (int r = 0; r < m; ++r)
        if (st.basis[r] >= st.first_artificial) infeas += st.xb[r];
      if (infeas > 1e-7) {
        sol.status = LPStatus::infeasible;
        return sol;
      }
      // Drive zero-level artificials out of the basis where possible.
      for (int r = 0; r < m; ++r) {
        if (st.basis[r] < st.first_artificial) continue;
        int found = -1;
        for (int j = 0; j < st.first_artificial && found < 0; ++j) {
          if (st.in_basis[j]) continue;
          double dr = 0.0;
          for (auto& [i, v] : st.col[j]) dr += st.binv(r, i) * v;
          if (std::fabs(dr) > 1e-8) found = j;
        }
        if (found >= 0) {
          std::vector<double> d = st.column_direction(found);
          double piv = d[r];
          for (int c = 0; c < m; ++c) st.binv(r, c) /= piv;
          for (int rr = 0; rr < m; ++rr)
            if (rr != r && d[rr] != 0.0) {
              double f = d[rr];
              for (int c = 0; c < m; ++c) st.binv(rr, c) -= f * st.binv(r, c);
            }
          st.in_basis[st.basis[r]] = 0;
          st.in_basis[found] = 1;
          st.basis[r] = found;
          st.xb[r] = 0.0;
        }
      }
    }

    std::vector<char> banned(st.n, 0);
    for (int j = st.first_artificial; j < st.n; ++j) banned[j] = 1;
    std::vector<double> p2 = st.cost;
    p2.resize(st.n, 0.0);
    LPStatus ph2 = detail::run_phase(st, p2, banned, max_iter, iters);
    if (ph2 != LPStatus::optimal) {
      sol.status = ph2;
      return sol;
    }
  } catch (const std::runtime_error&) {
    sol.status = LPStatus::numerical_failure;
    return sol;
  }

  sol.status = LPStatus::optimal;
  sol.iterations = iters;
  sol.x.assign(lp.num_vars, 0.0);
  for (int r = 0; r < m; ++r)
    if (st.basis[r] < lp.num_vars) sol.x[st.basis[r]] = st.xb[r];
  sol.objective = 0.0;
  for (int j = 0; j < lp.num_vars; ++j) sol.objective += lp.objective[j] * sol.x[j];
  return sol;
}

}  // namespace bip
