#pragma once

#include <vector>

#include "fpl/size_spectrum.hpp"

namespace fpl {

// Precomputed view of a finite-support initial spectrum v(0) for transform
// evaluation. All member functions of the kit are const and reentrant, so a
// bundle may be shared across threads.
//
// With V(x) = sum v_k(0) e^{-kx} and w(x) = 1 / (sum k v_k(0) e^{-kx}), the
// kit evaluates the three scalar functions that determine every solution
// regime from the initial data alone:
//   F0(w) = m0(0) - V(x(w))          (burnt-mass generator)
//   G0(w) = w F0(w) - x(w)           (its primitive: dG0/dw = F0)
//   E0(w) = (sum k v e^{-kx})^3 / (sum k^2 v e^{-kx})   (critical core,
//            the second derivative of G0; evolves by pure translation)
struct TransformBundle {
  SizeSpectrum spec0;
  Moments mom0;
  double gel_time = 0.0;  // 1/m1(0)
  // flat copies of the support for tight evaluation loops
  std::vector<double> kd, vd;
};

// Validates spec0 (finite support, nonempty) and fills the cached fields.
TransformBundle build_bundle(const SizeSpectrum& spec0);

// Solves sum k v_k(0) e^{-kx} = 1/w for x. The left side is strictly
// decreasing in x, so a doubling bracket plus bisection always converges;
// one Newton step polishes the root. Any w > 0 is feasible for a finite
// support (x may be negative); w <= 0 raises OutOfRange.
double invert_w_to_x(const TransformBundle& b, double w);

double core_E(const TransformBundle& b, double w);

struct FG {
  double F = 0.0;
  double G = 0.0;
};
FG eval_F0_G0(const TransformBundle& b, double w);

// Certified envelope of E(0,.) on [w1, w2]. The derivative bound
// D = 4 m2(0)^2 m3(0) turns sampled values into interval bounds; intervals
// are split until they either cannot contain a better extremum or are
// certified to 1e-9.
struct CoreWindowBounds {
  double phi_inf = 0.0;
  double phi_sup = 0.0;
  double w1 = 0.0, w2 = 0.0;
};
CoreWindowBounds phi_window_bounds(const TransformBundle& b, double w1,
                                   double w2);

}  // namespace fpl
