#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "bip/space.hpp"

namespace bip {

constexpr double kMassTol = 1e-12;
constexpr double kMarginalTol = 1e-10;

struct ProbMeasure {
  std::vector<double> mass;

  int n() const { return static_cast<int>(mass.size()); }

  std::vector<int> support() const {
    std::vector<int> idx;
    for (int i = 0; i < n(); ++i)
      if (mass[i] > 0.0) idx.push_back(i);
    return idx;
  }
};

inline ProbMeasure make_prob_measure(std::vector<double> mass) {
  double total = 0.0;
  for (double m : mass) {
    if (m < 0.0 || !std::isfinite(m)) throw std::invalid_argument("measure mass must be nonnegative and finite");
    total += m;
  }
  if (std::fabs(total - 1.0) > kMassTol) throw std::invalid_argument("measure mass must sum to 1");
  return {std::move(mass)};
}

inline ProbMeasure dirac(int n, int at) {
  std::vector<double> m(n, 0.0);
  m[at] = 1.0;
  return {std::move(m)};
}

// Uniform probability on the index window [first, first+count).
inline ProbMeasure uniform_patch(int n, int first, int count) {
  if (count <= 0 || first < 0 || first + count > n) throw std::invalid_argument("bad patch window");
  std::vector<double> m(n, 0.0);
  for (int i = 0; i < count; ++i) m[first + i] = 1.0 / count;
  return {std::move(m)};
}

inline ProbMeasure uniform_patch_cyclic(int n, int first, int count) {
  if (count <= 0 || count > n) throw std::invalid_argument("bad patch window");
  std::vector<double> m(n, 0.0);
  for (int i = 0; i < count; ++i) m[(first + i) % n] += 1.0 / count;
  return {std::move(m)};
}

inline std::vector<double> density(const FiniteMetricMeasureSpace& s, const ProbMeasure& mu) {
  std::vector<double> rho(s.n, 0.0);
  for (int i = 0; i < s.n; ++i) rho[i] = mu.mass[i] / s.w(i);
  return rho;
}

inline double sup_density(const FiniteMetricMeasureSpace& s, const ProbMeasure& mu) {
  double m = 0.0;
  for (int i = 0; i < s.n; ++i) m = std::max(m, mu.mass[i] / s.w(i));
  return m;
}

// m-measure of the support {rho > 0}.
inline double support_mass(const FiniteMetricMeasureSpace& s, const ProbMeasure& mu) {
  double m = 0.0;
  for (int i = 0; i < s.n; ++i)
    if (mu.mass[i] > 0.0) m += s.w(i);
  return m;
}

struct Coupling {
  Matrix plan;  // n x n
  ProbMeasure source;
  ProbMeasure target;
};

inline void check_coupling(const Coupling& c, double tol = kMarginalTol) {
  int n = c.plan.rows;
  for (int i = 0; i < n; ++i) {
    double row = 0.0, col = 0.0;
    for (int j = 0; j < n; ++j) {
      row += c.plan(i, j);
      col += c.plan(j, i);
    }
    if (std::fabs(row - c.source.mass[i]) > tol) throw std::runtime_error("coupling row marginal mismatch");
    if (std::fabs(col - c.target.mass[i]) > tol) throw std::runtime_error("coupling column marginal mismatch");
  }
}

// phi_# mu: mass aggregated along fibers of the index map.
inline ProbMeasure pushforward(const std::vector<int>& map, const ProbMeasure& mu, int n_out) {
  std::vector<double> out(n_out, 0.0);
  for (int i = 0; i < mu.n(); ++i) {
    if (mu.mass[i] == 0.0) continue;
    if (i >= static_cast<int>(map.size()) || map[i] < 0 || map[i] >= n_out)
      throw std::invalid_argument("pushforward: map undefined on a support point");
    out[map[i]] += mu.mass[i];
  }
  return {std::move(out)};
}

}  // namespace bip
