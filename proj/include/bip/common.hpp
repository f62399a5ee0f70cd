#pragma once

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace bip {

// Dense row-major matrix of doubles. Small sizes only; everything in this
// library is O(n^2) memory by design.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(int r, int c, double fill = 0.0) : rows(r), cols(c), data(static_cast<size_t>(r) * c, fill) {}

  double& operator()(int i, int j) { return data[static_cast<size_t>(i) * cols + j]; }
  double operator()(int i, int j) const { return data[static_cast<size_t>(i) * cols + j]; }
};

inline int env_thread_count() {
  const char* s = std::getenv("BIPLAB_THREADS");
  if (s == nullptr) return 1;
  int v = std::atoi(s);
  return v < 1 ? 1 : v;
}

inline uint64_t env_seed() {
  const char* s = std::getenv("BIPLAB_SEED");
  if (s == nullptr) return 0;
  return static_cast<uint64_t>(std::strtoull(s, nullptr, 10));
}

// Deterministic RNG used by every sampling routine. Seed 0 is the default
// everywhere so identical configs reproduce byte-identical output.
inline std::mt19937_64 make_rng(uint64_t seed) { return std::mt19937_64(seed); }

inline std::string format_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", x);
  return std::string(buf);
}

}  // namespace bip
