#include <cmath>
#include <functional>

#include "doctest.h"
#include "fpl/lambert.hpp"
#include "fpl/quadrature.hpp"
#include "fpl/size_spectrum.hpp"
#include "fpl/transform_kit.hpp"

using namespace fpl;

namespace {

const TransformBundle kMono = build_bundle(monodisperse(1.0));
const TransformBundle kPoly =
    build_bundle(make_spectrum({{1, 0.5}, {2, 0.25}}));

}  // namespace

TEST_CASE("lambert w: defining identity on both branches") {
  for (const double z : {-0.35, -0.1, 0.0, 0.5, 3.0, 100.0}) {
    const double w = lambert_w(z, WBranch::principal);
    CHECK(std::fabs(w * std::exp(w) - z) <= 1e-12 * std::max(1.0, std::fabs(z)));
  }
  for (const double z : {-0.36, -0.2, -0.05, -1e-4}) {
    const double w = lambert_w(z, WBranch::lower);
    CHECK(w <= -1.0);
    CHECK(std::fabs(w * std::exp(w) - z) <= 1e-11);
  }
  CHECK_THROWS_AS(lambert_w(-0.5, WBranch::principal), Error);
  CHECK_THROWS_AS(lambert_w(0.1, WBranch::lower), Error);
}

TEST_CASE("gel time is the inverse first moment") {
  CHECK(kMono.gel_time == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(kPoly.gel_time == doctest::Approx(1.0).epsilon(1e-15));
  const TransformBundle half = build_bundle(monodisperse(0.5));
  CHECK(half.gel_time == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("w inversion: monodisperse closed form x = ln w") {
  for (const double w : {0.3, 0.5, 1.0, 2.0, 7.5}) {
    CHECK(invert_w_to_x(kMono, w) ==
          doctest::Approx(std::log(w)).epsilon(1e-12));
  }
  CHECK_THROWS_AS(invert_w_to_x(kMono, 0.0), Error);
  CHECK_THROWS_AS(invert_w_to_x(kMono, -1.0), Error);
}

TEST_CASE("monodisperse F, G, E closed forms") {
  // x(w) = ln w gives F0(w) = 1 - 1/w, G0(w) = w - 1 - ln w, E = 1/w^2.
  const FG fg = eval_F0_G0(kMono, 2.0);
  CHECK(fg.F == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(fg.G == doctest::Approx(0.30685281944).epsilon(1e-10));
  CHECK(core_E(kMono, 2.0) == doctest::Approx(0.25).epsilon(1e-12));
  // G0 vanishes at the gel time w = gt = 1
  CHECK(std::fabs(eval_F0_G0(kMono, 1.0).G) <= 1e-12);
  CHECK(std::fabs(eval_F0_G0(kMono, 1.0).F) <= 1e-12);
}

TEST_CASE("polydisperse F, G, E frozen oracles") {
  // Independent oracle: with support {1,2} the inversion is a quadratic in
  // u = e^{-x}; these values were frozen from that closed form.
  CHECK(core_E(kPoly, 2.0) ==
        doctest::Approx(0.18090169943749473).epsilon(1e-12));
  const FG fg = eval_F0_G0(kPoly, 2.0);
  CHECK(fg.F == doctest::Approx(0.3454915028125263).epsilon(1e-12));
  CHECK(fg.G == doctest::Approx(0.2097711805654492).epsilon(1e-12));
}

TEST_CASE("tree-function bridge: critical shape vs lambert w") {
  // sum_k borel_k e^{-kx} = T(e^{-(1+x)}) = -W0(-e^{-(1+x)})
  const SizeSpectrum borel = borel_spectrum(1.0, 4000);
  for (const double x : {0.2, 0.5, 1.0}) {
    const double lhs = laplace_V(borel, x);
    const double rhs = -lambert_w(-std::exp(-(1.0 + x)), WBranch::principal);
    CHECK(std::fabs(lhs - rhs) <= 1e-10);
  }
}

TEST_CASE("derivative structure: dG0/dw = F0 and dF0/dw = E") {
  const double h = 1e-5;
  for (const TransformBundle* b : {&kMono, &kPoly}) {
    for (const double w : {1.3, 2.0, 3.7}) {
      const FG lo = eval_F0_G0(*b, w - h);
      const FG hi = eval_F0_G0(*b, w + h);
      const FG mid = eval_F0_G0(*b, w);
      CHECK(std::fabs((hi.G - lo.G) / (2 * h) - mid.F) <= 1e-8);
      CHECK(std::fabs((hi.F - lo.F) / (2 * h) - core_E(*b, w)) <= 1e-8);
    }
  }
}

TEST_CASE("integral identities of the core") {
  // int_a^b E = F0(b) - F0(a);  int_a^b y E(y) dy = [y F0(y) - G0(y)]_a^b
  const double a = 1.2, b = 2.5;
  for (const TransformBundle* bun : {&kMono, &kPoly}) {
    const FG fa = eval_F0_G0(*bun, a);
    const FG fb = eval_F0_G0(*bun, b);
    const double i0 = adaptive_simpson(
        [&](double y) { return core_E(*bun, y); }, a, b, 1e-12);
    CHECK(std::fabs(i0 - (fb.F - fa.F)) <= 1e-9);
    const double i1 = adaptive_simpson(
        [&](double y) { return y * core_E(*bun, y); }, a, b, 1e-12);
    CHECK(std::fabs(i1 - (b * fb.F - fa.F * a - (fb.G - fa.G))) <= 1e-9);
  }
}

TEST_CASE("certified window bounds for the core") {
  const CoreWindowBounds mono = phi_window_bounds(kMono, 1.0, 2.0);
  // E = 1/w^2 is decreasing: envelope is exactly [1/4, 1]
  CHECK(mono.phi_inf == doctest::Approx(0.25).epsilon(1e-6));
  CHECK(mono.phi_sup == doctest::Approx(1.0).epsilon(1e-6));

  const CoreWindowBounds poly = phi_window_bounds(kPoly, 1.0, 1.6);
  for (double w = 1.0; w <= 1.6; w += 0.05) {
    const double e = core_E(kPoly, w);
    CHECK(e >= poly.phi_inf - 1e-9);
    CHECK(e <= poly.phi_sup + 1e-9);
  }
  CHECK_THROWS_AS(phi_window_bounds(kMono, 2.0, 1.0), Error);
}
