#include "fpl/lambert.hpp"

#include <cmath>
#include <limits>

#include "fpl/errors.hpp"

namespace fpl {

namespace {

constexpr double kInvE = 0.36787944117144233;  // 1/e

// Series around the branch point z = -1/e in p = +-sqrt(2(ez+1)).
double branch_point_guess(double z, bool lower) {
  double q = 2.0 * (std::exp(1.0) * z + 1.0);
  if (q < 0.0) q = 0.0;
  const double p = lower ? -std::sqrt(q) : std::sqrt(q);
  return -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p;
}

double initial_guess(double z, WBranch branch) {
  if (branch == WBranch::principal) {
    if (z < -0.25) return branch_point_guess(z, false);
    if (z < 1.0) {
      // W(z) ~ z(1 - z + 3/2 z^2) near 0
      return z * (1.0 - z + 1.5 * z * z);
    }
    const double l1 = std::log(z);
    const double l2 = std::log(l1);
    return l1 - l2 + l2 / l1;
  }
  // lower branch, z in [-1/e, 0)
  if (z < -0.25) return branch_point_guess(z, true);
  const double l1 = std::log(-z);
  const double l2 = std::log(-l1);
  return l1 - l2 + l2 / l1;
}

}  // namespace

double lambert_w(double z, WBranch branch) {
  if (!(z >= -kInvE - 1e-14)) {
    raise(Errc::OutOfDomain, "lambert_w: z < -1/e");
  }
  if (branch == WBranch::lower && !(z < 0.0)) {
    raise(Errc::OutOfDomain, "lambert_w: lower branch needs z in [-1/e, 0)");
  }
  if (z == 0.0) return 0.0;
  if (z <= -kInvE + 1e-300) return -1.0;

  double w = initial_guess(z, branch);
  // Halley iteration; quadratic-plus convergence, a handful of steps.
  for (int it = 0; it < 64; ++it) {
    const double ew = std::exp(w);
    const double f = w * ew - z;
    const double wp1 = w + 1.0;
    const double denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
    const double step = f / denom;
    w -= step;
    if (std::abs(step) <= 1e-14 * (1.0 + std::abs(w))) break;
  }
  return w;
}

}  // namespace fpl
