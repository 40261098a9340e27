#include "fpl/transform_kit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace fpl {

namespace {

// sum k^p v_k e^{-kx} for p = 0,1,2 over the cached support.
double support_sum(const TransformBundle& b, double x, int p) {
  double acc = 0.0;
  for (std::size_t i = 0; i < b.kd.size(); ++i) {
    double term = b.vd[i] * std::exp(-b.kd[i] * x);
    for (int q = 0; q < p; ++q) term *= b.kd[i];
    acc += term;
  }
  return acc;
}

}  // namespace

TransformBundle build_bundle(const SizeSpectrum& spec0) {
  if (spec0.entries.empty()) raise(Errc::EmptySpectrum, "build_bundle");
  if (spec0.kind != SpectrumKind::finite_support) {
    raise(Errc::OutOfRange,
          "build_bundle requires a finite-support initial spectrum");
  }
  TransformBundle b;
  b.spec0 = spec0;
  b.mom0 = moments(spec0);
  if (b.mom0.m1 <= 0.0) raise(Errc::ZeroFirstMoment, "build_bundle");
  b.gel_time = 1.0 / b.mom0.m1;
  b.kd.reserve(spec0.entries.size());
  b.vd.reserve(spec0.entries.size());
  for (const auto& [k, v] : spec0.entries) {
    b.kd.push_back(static_cast<double>(k));
    b.vd.push_back(v);
  }
  return b;
}

double invert_w_to_x(const TransformBundle& b, double w) {
  if (!(w > 0.0)) raise(Errc::OutOfRange, "invert_w_to_x: w must be > 0");
  const double target = 1.0 / w;
  const auto m1x = [&](double x) { return support_sum(b, x, 1); };

  // m1x is strictly decreasing with range (0, inf), so the root always
  // exists; find a bracket [lo, hi] with m1x(lo) >= target >= m1x(hi).
  double lo, hi;
  if (m1x(0.0) >= target) {
    lo = 0.0;
    hi = 1.0;
    while (m1x(hi) > target) {
      lo = hi;
      hi *= 2.0;
    }
  } else {
    hi = 0.0;
    lo = -1.0;
    while (m1x(lo) < target) {
      hi = lo;
      lo *= 2.0;
    }
  }

  for (int it = 0; it < 200 && hi - lo > 1e-14 * std::max(1.0, std::abs(lo));
       ++it) {
    const double mid = 0.5 * (lo + hi);
    if (m1x(mid) >= target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  double x = 0.5 * (lo + hi);
  // one Newton polish; the derivative is -sum k^2 v e^{-kx}
  const double f = m1x(x) - target;
  const double df = -support_sum(b, x, 2);
  const double step = f / df;
  if (std::isfinite(step)) x -= step;
  return x;
}

double core_E(const TransformBundle& b, double w) {
  const double x = invert_w_to_x(b, w);
  const double s1 = support_sum(b, x, 1);
  const double s2 = support_sum(b, x, 2);
  return s1 * s1 * s1 / s2;
}

FG eval_F0_G0(const TransformBundle& b, double w) {
  const double x = invert_w_to_x(b, w);
  FG out;
  out.F = b.mom0.m0 - support_sum(b, x, 0);
  out.G = w * out.F - x;
  return out;
}

CoreWindowBounds phi_window_bounds(const TransformBundle& b, double w1,
                                   double w2) {
  if (!(w1 > 0.0) || !(w2 >= w1)) {
    raise(Errc::OutOfRange, "phi_window_bounds: need 0 < w1 <= w2");
  }
  CoreWindowBounds out;
  out.w1 = w1;
  out.w2 = w2;
  if (w1 == w2) {
    out.phi_inf = out.phi_sup = core_E(b, w1);
    return out;
  }

  // |dE/dw| <= D, so a segment with endpoint values fa, fb cannot contain
  // values outside [min(fa,fb) - D len/2, max(fa,fb) + D len/2]. Segments
  // that cannot improve the current extremum by more than the 1e-9
  // certificate are pruned, the rest are split.
  const double D =
      4.0 * b.mom0.m2 * b.mom0.m2 * b.mom0.m3;
  constexpr double kCert = 1e-9;

  struct Seg {
    double a, fa, bb, fb;
  };
  std::vector<Seg> stack;
  double fmin = std::numeric_limits<double>::infinity();
  double fmax = -std::numeric_limits<double>::infinity();

  const int kInit = 64;
  double prev_w = w1;
  double prev_f = core_E(b, w1);
  fmin = std::min(fmin, prev_f);
  fmax = std::max(fmax, prev_f);
  for (int i = 1; i <= kInit; ++i) {
    const double w = w1 + (w2 - w1) * static_cast<double>(i) / kInit;
    const double f = core_E(b, w);
    fmin = std::min(fmin, f);
    fmax = std::max(fmax, f);
    stack.push_back({prev_w, prev_f, w, f});
    prev_w = w;
    prev_f = f;
  }

  std::size_t evals = 0;
  while (!stack.empty()) {
    const Seg s = stack.back();
    stack.pop_back();
    const double len = s.bb - s.a;
    const double slack = 0.5 * D * len;
    const bool can_improve_min = std::min(s.fa, s.fb) - slack < fmin - kCert;
    const bool can_improve_max = std::max(s.fa, s.fb) + slack > fmax + kCert;
    if ((!can_improve_min && !can_improve_max) || len < 1e-13 ||
        ++evals > 2000000) {
      continue;
    }
    const double m = 0.5 * (s.a + s.bb);
    const double fm = core_E(b, m);
    fmin = std::min(fmin, fm);
    fmax = std::max(fmax, fm);
    stack.push_back({s.a, s.fa, m, fm});
    stack.push_back({m, fm, s.bb, s.fb});
  }

  out.phi_inf = fmin;
  out.phi_sup = fmax;
  return out;
}

}  // namespace fpl
