#pragma once

#include <vector>

#include "bip/space.hpp"

namespace bip {

// Path graph with n points, consecutive spacing h, unit weights by default.
inline FiniteMetricMeasureSpace make_line(int n, double h = 1.0, std::vector<double> weight = {}) {
  if (weight.empty()) weight.assign(n, 1.0);
  std::vector<Edge> edges;
  for (int i = 0; i + 1 < n; ++i) edges.push_back({i, i + 1, h});
  if (n == 1) return make_space_from_dist(Matrix(1, 1, 0.0), weight);
  return make_space_from_edges(n, edges, weight);
}

// Cycle graph with n points and edge length h.
inline FiniteMetricMeasureSpace make_cycle(int n, double h = 1.0, std::vector<double> weight = {}) {
  if (weight.empty()) weight.assign(n, 1.0);
  std::vector<Edge> edges;
  for (int i = 0; i < n; ++i) edges.push_back({i, (i + 1) % n, h});
  return make_space_from_edges(n, edges, weight);
}

// rows x cols grid graph, unit edges, index = r*cols + c.
inline FiniteMetricMeasureSpace make_grid(int rows, int cols, double h = 1.0) {
  std::vector<Edge> edges;
  auto id = [&](int r, int c) { return r * cols + c; };
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      if (c + 1 < cols) edges.push_back({id(r, c), id(r, c + 1), h});
      if (r + 1 < rows) edges.push_back({id(r, c), id(r + 1, c), h});
    }
  return make_space_from_edges(rows * cols, edges, std::vector<double>(rows * cols, 1.0));
}

// Line whose middle vertex carries a tiny weight: geodesics between the two
// halves are forced through a bottleneck of small measure, so interpolated
// densities blow up there.
inline FiniteMetricMeasureSpace make_pinched_line(int half, double pinch_weight, double h = 1.0) {
  int n = 2 * half + 1;
  std::vector<double> weight(n, 1.0);
  weight[half] = pinch_weight;
  return make_line(n, h, weight);
}

}  // namespace bip
