#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>

#include "bip/measure.hpp"
#include "bip/space.hpp"

namespace bip {

// Distortion coefficients hit genuine +infinity branches; they are returned
// through this sentinel type instead of IEEE inf so callers must decide how
// divergence propagates.
struct ExtendedReal {
  double value = 0.0;
  bool infinite = false;

  static ExtendedReal inf() { return ExtendedReal{0.0, true}; }
  static ExtendedReal finite(double v) { return ExtendedReal{v, false}; }

  double as_double() const { return infinite ? std::numeric_limits<double>::infinity() : value; }
};

// Branch boundaries of the distortion coefficients are resolved within this
// tolerance on the product K*theta^2.
inline constexpr double kBranchTol = 1e-14;

struct CurvatureParams {
  double K = 0.0;
  double N = 1.0;
  double q = 2.0;
  double t = 0.0;
  double theta = 0.0;

  void validate() const {
    if (N == 0.0) throw std::invalid_argument("curvature: N must be nonzero");
    if (!(q > 1.0) || !std::isfinite(q)) throw std::invalid_argument("curvature: q must lie in (1,inf)");
    if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("curvature: t must lie in [0,1]");
    if (!(theta >= 0.0)) throw std::invalid_argument("curvature: theta must be nonnegative");
  }

  double k_minus() const { return K < 0.0 ? -K : 0.0; }
};

namespace detail {

inline void check_sigma_args(double N, double t, double theta) {
  if (!std::isfinite(N) || N == 0.0) throw std::invalid_argument("sigma: N must be a nonzero finite real");
  if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("sigma: t must lie in [0,1]");
  if (!(theta >= 0.0)) throw std::invalid_argument("sigma: theta must be nonnegative");
}

}  // namespace detail

// Interpolation coefficient sigma^(t)_{K,N}(theta). The sign of N selects
// between the positive-dimension and negative-dimension variants; both share
// the sin / t / sinh branch structure, split on K*theta^2.
inline ExtendedReal sigma(double K, double N, double t, double theta) {
  detail::check_sigma_args(N, t, theta);
  const double x = K * theta * theta;
  const double pole = N * M_PI * M_PI;
  if (N > 0.0) {
    if (x >= pole - kBranchTol) return ExtendedReal::inf();
    if (std::fabs(x) <= kBranchTol) return ExtendedReal::finite(t);
    if (x > 0.0) {
      const double a = theta * std::sqrt(K / N);
      return ExtendedReal::finite(std::sin(t * a) / std::sin(a));
    }
    const double a = theta * std::sqrt(-K / N);
    return ExtendedReal::finite(std::sinh(t * a) / std::sinh(a));
  }
  if (x <= pole + kBranchTol) return ExtendedReal::inf();
  if (std::fabs(x) <= kBranchTol) return ExtendedReal::finite(t);
  if (x < 0.0) {
    const double a = theta * std::sqrt(K / N);
    return ExtendedReal::finite(std::sin(t * a) / std::sin(a));
  }
  const double a = theta * std::sqrt(-K / N);
  return ExtendedReal::finite(std::sinh(t * a) / std::sinh(a));
}

// Distortion coefficient tau^(t)_{K,N}(theta) = t^{1/N} sigma^(t)_{K,N-1}(theta)^{1-1/N},
// with the N = 1 case handled separately (t when K <= 0, +infinity when K > 0).
inline ExtendedReal tau(double K, double N, double t, double theta) {
  if (!std::isfinite(N)) throw std::invalid_argument("tau: N must be finite");
  if (!(N >= 1.0 || N < 0.0)) throw std::invalid_argument("tau: N must lie in [1,inf) or (-inf,0)");
  if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("tau: t must lie in [0,1]");
  if (!(theta >= 0.0)) throw std::invalid_argument("tau: theta must be nonnegative");
  if (N == 1.0) {
    return K <= 0.0 ? ExtendedReal::finite(t) : ExtendedReal::inf();
  }
  if (N < 0.0 && t == 0.0) return ExtendedReal::finite(0.0);
  const ExtendedReal s = sigma(K, N - 1.0, t, theta);
  if (s.infinite) return ExtendedReal::inf();
  return ExtendedReal::finite(std::pow(t, 1.0 / N) * std::pow(s.value, 1.0 - 1.0 / N));
}

// Relative entropy of mu with respect to the space weights: sum over the
// support of rho*log(rho)*weight, with zero atoms contributing zero.
inline double shannon_entropy(const FiniteMetricMeasureSpace& s, const ProbMeasure& mu) {
  if (static_cast<int>(mu.mass.size()) != s.n) throw std::invalid_argument("shannon_entropy: size mismatch");
  double acc = 0.0;
  for (int i = 0; i < s.n; ++i) {
    if (mu.mass[i] <= 0.0) continue;
    const double rho = mu.mass[i] / s.w(i);
    acc += rho * std::log(rho) * s.w(i);
  }
  return acc;
}

// Renyi-type entropy: -sum rho^{1-1/N} weight for N >= 1, and +sum of the
// same integrand for N < 0. Zero atoms contribute zero in every case.
inline double renyi_entropy(const FiniteMetricMeasureSpace& s, const ProbMeasure& mu, double N) {
  if (static_cast<int>(mu.mass.size()) != s.n) throw std::invalid_argument("renyi_entropy: size mismatch");
  if (!std::isfinite(N) || N == 0.0) throw std::invalid_argument("renyi_entropy: N must be a nonzero finite real");
  const double e = 1.0 - 1.0 / N;
  double acc = 0.0;
  for (int i = 0; i < s.n; ++i) {
    if (mu.mass[i] <= 0.0) continue;
    const double rho = mu.mass[i] / s.w(i);
    acc += std::pow(rho, e) * s.w(i);
  }
  return N > 0.0 ? -acc : acc;
}

enum class ProfileKind { cd_infty, mcp, cd_negative, sampled };

inline std::string profile_kind_name(ProfileKind k) {
  switch (k) {
    case ProfileKind::cd_infty: return "cd_infty";
    case ProfileKind::mcp: return "mcp";
    case ProfileKind::cd_negative: return "cd_negative";
    case ProfileKind::sampled: return "sampled";
  }
  return "unknown";
}

inline ProfileKind profile_kind_from_name(const std::string& name) {
  if (name == "cd_infty") return ProfileKind::cd_infty;
  if (name == "mcp") return ProfileKind::mcp;
  if (name == "cd_negative") return ProfileKind::cd_negative;
  if (name == "sampled") return ProfileKind::sampled;
  throw std::invalid_argument("unknown profile kind: " + name);
}

// Closed-form density-inflation profiles C(D) for the three certified space
// classes. The cd_negative form requires K < 0 and diameter below the sine
// pole; for K >= 0 its bound degenerates to the constant 1.
inline double profile(ProfileKind kind, double K, double N, double D) {
  if (!(D >= 0.0)) throw std::invalid_argument("profile: D must be nonnegative");
  const double kminus = K < 0.0 ? -K : 0.0;
  switch (kind) {
    case ProfileKind::cd_infty:
      return std::exp(kminus * D * D / 12.0);
    case ProfileKind::mcp:
      if (!(N >= 1.0)) throw std::invalid_argument("profile: mcp requires N >= 1");
      return std::pow(2.0, N) * std::exp(D * std::sqrt((N - 1.0) * kminus));
    case ProfileKind::cd_negative: {
      if (!(N < 0.0)) throw std::invalid_argument("profile: cd_negative requires N < 0");
      if (K >= 0.0) return 1.0;
      const double dmax = M_PI * std::sqrt((N - 1.0) / K);
      if (!(D < dmax)) {
        throw std::domain_error("profile: cd_negative requires D < pi*sqrt((N-1)/K)");
      }
      const double x = (D / 4.0) * std::sqrt(K / (N - 1.0));
      if (x == 0.0) return 1.0;
      return std::pow(x / std::sin(x), 1.0 - N);
    }
    case ProfileKind::sampled:
      throw std::invalid_argument("profile: sampled profiles carry their own table");
  }
  throw std::invalid_argument("profile: unknown kind");
}

// Lower bound on the measure of the midpoint support {rho_{1/2} > 0}. Without
// N this is the exp(-K^- D^2/8) bound; with N < 0 the two curvature-sign
// variants apply.
inline double spreading_bound(double norm0, double norm1, double D, double K,
                              std::optional<double> N = std::nullopt) {
  if (!(norm0 > 0.0 && norm1 > 0.0)) throw std::invalid_argument("spreading_bound: norms must be positive");
  if (!(D >= 0.0)) throw std::invalid_argument("spreading_bound: D must be nonnegative");
  const double m = std::max(norm0, norm1);
  if (!N.has_value()) {
    const double kminus = K < 0.0 ? -K : 0.0;
    return std::exp(-kminus * D * D / 8.0) / m;
  }
  const double n = *N;
  if (!(n < 0.0)) throw std::invalid_argument("spreading_bound: N must be negative when provided");
  if (K >= 0.0) {
    return std::exp(-0.5 * std::sqrt((1.0 - n) * K) * D) / m;
  }
  const double dmax = M_PI * std::sqrt((n - 1.0) / K);
  if (!(D < dmax)) {
    throw std::domain_error("spreading_bound: negative-N bound requires D < pi*sqrt((N-1)/K)");
  }
  const double x = (D / 2.0) * std::sqrt(K / (n - 1.0));
  return std::pow(std::cos(x), 1.0 - n) / m;
}

}  // namespace bip
