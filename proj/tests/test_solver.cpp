#include <cmath>
#include <cstdint>
#include <vector>

#include "doctest.h"
#include "fpl/size_spectrum.hpp"
#include "fpl/solver.hpp"
#include "fpl/transform_kit.hpp"

using namespace fpl;

namespace {

const TransformBundle kMono = build_bundle(monodisperse(1.0));

SolverConfig base_cfg(std::int64_t K, double T) {
  SolverConfig cfg;
  cfg.K = K;
  cfg.T = T;
  cfg.sample_dt = 0.01;
  return cfg;
}

const SpectrumSnapshot& snapshot_at(const Trajectory& traj, double t) {
  for (const SpectrumSnapshot& s : traj.spectra) {
    if (s.side == Side::none && std::fabs(s.t - t) <= 1e-9) return s;
  }
  REQUIRE(false);
  return traj.spectra.front();
}

}  // namespace

TEST_CASE("lambda schedule: grammar, lookup, integral") {
  const LambdaSchedule s = LambdaSchedule::parse("0:1.0,2.5:0.1");
  REQUIRE(s.knots.size() == 2);
  CHECK(s.at(1.0) == 1.0);
  CHECK(s.at(2.5) == 0.1);  // right-continuous
  CHECK(s.at(10.0) == 0.1);
  CHECK(s.integral(3.0) == doctest::Approx(2.5 + 0.5 * 0.1).epsilon(1e-15));
  CHECK(s.min_value() == 0.1);
  CHECK(s.max_value() == 1.0);
  CHECK(s.strictly_positive());

  const LambdaSchedule c = LambdaSchedule::parse("0.7");
  CHECK(c.values.size() == 1);
  CHECK(c.at(5.0) == 0.7);

  // string round trip
  const LambdaSchedule back = LambdaSchedule::parse(s.str());
  CHECK(back.knots == s.knots);
  CHECK(back.values == s.values);

  CHECK_THROWS_AS(LambdaSchedule::parse("1:0.5"), Error);     // first knot != 0
  CHECK_THROWS_AS(LambdaSchedule::parse("0:-1"), Error);      // negative rate
  CHECK_THROWS_AS(LambdaSchedule::parse("0:1,0.5:2,0.2:3"), Error);
  CHECK_THROWS_AS(LambdaSchedule::parse(""), Error);
}

TEST_CASE("solver config validation") {
  SolverConfig cfg = base_cfg(10, 1.0);
  cfg.h = 0.0;
  CHECK_THROWS_AS(solve_critical(kMono, cfg), Error);
  cfg = base_cfg(10, -1.0);
  CHECK_THROWS_AS(solve_critical(kMono, cfg), Error);
  cfg = base_cfg(-2, 1.0);
  CHECK_THROWS_AS(solve_critical(kMono, cfg), Error);
}

TEST_CASE("critical spectrum: first two components, closed form pre-gel") {
  // pre-gel sink is the conserved total mass 1: v1 = e^{-t}, v2 = t e^{-2t}
  SolverConfig cfg = base_cfg(30, 1.0);
  cfg.spectrum_times = {0.5, 1.0};
  const Trajectory traj = solve_critical(kMono, cfg);
  for (const double t : {0.5, 1.0}) {
    const SpectrumSnapshot& s = snapshot_at(traj, t);
    CHECK(std::fabs(s.v[1] - std::exp(-t)) <= 1e-10);
    CHECK(std::fabs(s.v[2] - t * std::exp(-2.0 * t)) <= 1e-10);
  }
}

TEST_CASE("critical post-gel: rescaled spectrum is Borel") {
  SolverConfig cfg = base_cfg(30, 2.0);
  cfg.spectrum_times = {2.0};
  const Trajectory traj = solve_critical(kMono, cfg);
  const SpectrumSnapshot& s = snapshot_at(traj, 2.0);
  for (std::int64_t k = 1; k <= 30; ++k) {
    CHECK(std::fabs(2.0 * s.v[k] - borel_mass(k, 1.0)) <= 1e-8);
  }
  // scalar channel: m0(t) = 1 - F0(t) = 1/t for monodisperse
  const TrajPoint* p = traj.find_point(2.0);
  REQUIRE(p != nullptr);
  CHECK(std::fabs(p->m0 - 0.5) <= 1e-10);
  CHECK(std::fabs(p->Phi - 0.5) <= 1e-10);
}

TEST_CASE("pre-gel mass conservation at tight tolerance") {
  SolverConfig cfg = base_cfg(200, 0.5);
  cfg.spectrum_times = {0.5};
  const Trajectory traj = solve_critical(kMono, cfg);
  const SpectrumSnapshot& s = snapshot_at(traj, 0.5);
  double sum = 0.0;
  for (std::int64_t k = 200; k >= 1; --k) sum += s.v[k];
  CHECK(std::fabs(sum - 1.0) <= 1e-9);
}

TEST_CASE("triangular truncation exactness: K=30 vs K=60 prefixes") {
  SolverConfig a = base_cfg(30, 0.7);
  SolverConfig b = base_cfg(60, 0.7);
  a.spectrum_times = b.spectrum_times = {0.7};
  const Trajectory ta = solve_critical(kMono, a);
  const Trajectory tb = solve_critical(kMono, b);
  const SpectrumSnapshot& sa = snapshot_at(ta, 0.7);
  const SpectrumSnapshot& sb = snapshot_at(tb, 0.7);
  for (std::int64_t k = 1; k <= 30; ++k)
    CHECK(std::fabs(sa.v[k] - sb.v[k]) <= 1e-12);
}

TEST_CASE("exp2 scheme agrees with rk4 on a large truncation") {
  SolverConfig a = base_cfg(300, 2.0);
  a.spectrum_times = {2.0};
  SolverConfig b = a;
  b.scheme = Scheme::exp2;
  b.richardson = false;
  const Trajectory ta = solve_critical(kMono, a);
  const Trajectory tb = solve_critical(kMono, b);
  const SpectrumSnapshot& sa = snapshot_at(ta, 2.0);
  const SpectrumSnapshot& sb = snapshot_at(tb, 2.0);
  for (std::int64_t k = 1; k <= 50; ++k)
    CHECK(std::fabs(sa.v[k] - sb.v[k]) <= 1e-5);
}

TEST_CASE("step-halving check rejects a coarse grid") {
  SolverConfig cfg = base_cfg(8, 2.0);
  cfg.h = 0.25;
  REQUIRE(cfg.richardson);
  bool coarse = false;
  try {
    solve_critical(kMono, cfg);
  } catch (const Error& e) {
    coarse = e.code() == Errc::StepSizeTooCoarse;
  }
  CHECK(coarse);
}

TEST_CASE("scaling covariance: doubled masses run twice as fast") {
  // u_k(s) = 2 v_k(2s) solves the doubled-initial-mass system with burns at
  // half the times; exercised through the alternating regime.
  const TransformBundle doubled = build_bundle(monodisperse(2.0));
  SolverConfig unit = base_cfg(30, 2.0);
  unit.spectrum_times = {2.0};
  SolverConfig fast = base_cfg(30, 1.0);
  fast.spectrum_times = {1.0};
  const Trajectory tu = solve_alternating(kMono, {1.4}, unit);
  const Trajectory td = solve_alternating(doubled, {0.7}, fast);
  REQUIRE(tu.burns.size() == 1);
  REQUIRE(td.burns.size() == 1);
  CHECK(std::fabs(td.burns[0].theta - 2.0 * tu.burns[0].theta) <= 1e-8);
  const TrajPoint* pu = tu.find_point(2.0);
  const TrajPoint* pd = td.find_point(1.0);
  REQUIRE(pu != nullptr);
  REQUIRE(pd != nullptr);
  CHECK(std::fabs(pd->Phi - 2.0 * pu->Phi) <= 1e-8);
  const SpectrumSnapshot& su = snapshot_at(tu, 2.0);
  const SpectrumSnapshot& sd = snapshot_at(td, 1.0);
  for (std::int64_t k = 1; k <= 20; ++k)
    CHECK(std::fabs(sd.v[k] - 2.0 * su.v[k]) <= 1e-8);
}

TEST_CASE("subcritical control path: frozen oracles at t=2") {
  // quasi-stationary location of the minimum for constant rates
  struct Row {
    double lambda, wstar, phi;
  };
  const Row rows[] = {{0.1, 0.413315, 0.241946},
                      {0.05, 0.20149304, 0.248148},
                      {0.025, 0.100210, 0.249475}};
  for (const Row& row : rows) {
    const ControlPath path = solve_control_path(
        kMono, LambdaSchedule::constant(row.lambda), 2.0, 1e-3);
    CHECK(std::fabs(path.at(2.0) - row.wstar) <= 2e-5);
    SolverConfig cfg = base_cfg(0, 2.0);
    cfg.lambda = LambdaSchedule::constant(row.lambda);
    const Trajectory traj = solve_subcritical(kMono, cfg);
    const TrajPoint* p = traj.find_point(2.0);
    REQUIRE(p != nullptr);
    CHECK(std::fabs(p->phi - row.phi) <= 2e-5);
    CHECK(std::fabs(p->wstar - row.wstar) <= 2e-5);
    // burnt mass closed form Phi(t) = F0(t + w*(t))
    CHECK(std::fabs(p->Phi - eval_F0_G0(kMono, 2.0 + p->wstar).F) <= 1e-9);
  }
}

TEST_CASE("vanishing rate degenerates subcritical to critical pre-gel") {
  SolverConfig cfg = base_cfg(10, 0.9);
  cfg.lambda = LambdaSchedule::constant(1e-8);
  cfg.spectrum_times = {0.9};
  const Trajectory sub = solve_subcritical(kMono, cfg);
  SolverConfig ccfg = base_cfg(10, 0.9);
  ccfg.spectrum_times = {0.9};
  const Trajectory crit = solve_critical(kMono, ccfg);
  const TrajPoint* ps = sub.find_point(0.9);
  const TrajPoint* pc = crit.find_point(0.9);
  REQUIRE(ps != nullptr);
  REQUIRE(pc != nullptr);
  CHECK(std::fabs(ps->Phi) <= 1e-6);
  CHECK(std::fabs(ps->m0 - pc->m0) <= 1e-6);
  const SpectrumSnapshot& ss = snapshot_at(sub, 0.9);
  const SpectrumSnapshot& sc = snapshot_at(crit, 0.9);
  for (std::int64_t k = 1; k <= 10; ++k)
    CHECK(std::fabs(ss.v[k] - sc.v[k]) <= 1e-6);
}

TEST_CASE("burn formula on explicit windows") {
  // E(0,y) = y^{-2} for monodisperse: theta = 1 - 1/g2, bt = ln(g2)/theta
  const BurnFormula f12 = burn_time_between_gels(kMono, 1.0, 2.0);
  CHECK(std::fabs(f12.bt - 2.0 * std::log(2.0)) <= 1e-9);
  CHECK(std::fabs(f12.theta - 0.5) <= 1e-9);
  const BurnFormula f14 = burn_time_between_gels(kMono, 1.0, 4.0);
  CHECK(std::fabs(f14.theta - 0.75) <= 1e-9);
  CHECK(std::fabs(f14.bt - std::log(4.0) / 0.75) <= 1e-9);
  CHECK_THROWS_AS(burn_time_between_gels(kMono, 2.0, 2.0), Error);
  CHECK_THROWS_AS(burn_time_between_gels(kMono, 3.0, 2.0), Error);
}

TEST_CASE("edge flip root: residual of the defining integral") {
  // For a=1: int_a^b (y-t)/y^2 dy = ln b + t/b - t = 0
  const double b15 = wstar_plus_root(kMono, 1.0, 1.5);
  CHECK(std::fabs(std::log(b15) + 1.5 / b15 - 1.5) <= 1e-8);
  CHECK(b15 == doctest::Approx(2.39700).epsilon(1e-4));
  const double b20 = wstar_plus_root(kMono, 1.0, 2.0);
  CHECK(std::fabs(std::log(b20) + 2.0 / b20 - 2.0) <= 1e-8);
  CHECK(b20 == doctest::Approx(4.921562).epsilon(1e-5));
  CHECK(wstar_plus_root(kMono, 1.0, 1.0) == doctest::Approx(1.0));
}

TEST_CASE("alternating: committed burn, staircase, and no-op") {
  SolverConfig cfg = base_cfg(0, 3.0);
  const Trajectory traj = solve_alternating(kMono, {0.5, 2.0}, cfg);
  // the pre-gel burn hits zero gel mass and is recorded as a no-op
  REQUIRE(traj.noop_burn_times.size() == 1);
  CHECK(traj.noop_burn_times[0] == doctest::Approx(0.5));
  REQUIRE(traj.burns.size() == 1);
  // gel mass at the strike: int_1^{b(2)} y^{-2} dy = 1 - 1/b(2), where the
  // flip root b(2) closes the interval the burn at t=2 sits in
  const double flip = wstar_plus_root(kMono, 1.0, 2.0);
  const double theta = 1.0 - 1.0 / flip;
  CHECK(std::fabs(traj.burns[0].theta - theta) <= 1e-8);
  CHECK(traj.burns[0].gel_before == doctest::Approx(1.0).epsilon(1e-9));
  // consistency with the closed-form burn window: a burn at bt = 2 ln 2
  // would close the interval exactly at 2
  CHECK(wstar_plus_root(kMono, 1.0, 2.0 * std::log(2.0)) ==
        doctest::Approx(2.0).epsilon(1e-8));
  // Phi is a pure staircase: zero before the burn, theta after it
  CHECK(traj.find_point(1.99)->Phi == doctest::Approx(0.0));
  CHECK(traj.find_point(2.0, Side::pre)->Phi == doctest::Approx(0.0));
  CHECK(std::fabs(traj.find_point(2.0, Side::post)->Phi - theta) <= 1e-8);
  CHECK(std::fabs(traj.find_point(3.0)->Phi - theta) <= 1e-8);
  // the burn clears the gel: theta restarts from zero
  CHECK(traj.find_point(2.0, Side::post)->theta == doctest::Approx(0.0));
  CHECK(std::fabs(traj.find_point(2.0, Side::pre)->theta - theta) <= 1e-8);
}

TEST_CASE("random alternating: reproducible, consistent bookkeeping") {
  SolverConfig cfg = base_cfg(0, 3.0);
  const Trajectory a = solve_random_alternating(kMono, 3.0, 3.0, 11, cfg);
  const Trajectory b = solve_random_alternating(kMono, 3.0, 3.0, 11, cfg);
  REQUIRE(a.burns.size() == b.burns.size());
  CHECK(!a.burns.empty());
  double total = 0.0;
  for (std::size_t i = 0; i < a.burns.size(); ++i) {
    CHECK(a.burns[i].bt == b.burns[i].bt);  // bitwise reproducible
    CHECK(a.burns[i].theta == b.burns[i].theta);
    CHECK(a.burns[i].bt > 1.0);  // burns need gel, gel needs t > 1
    CHECK(a.burns[i].bt <= 3.0 + 1e-12);
    CHECK(a.burns[i].theta > 0.0);
    total += a.burns[i].theta;
  }
  CHECK(std::fabs(a.find_point(3.0)->Phi - total) <= 1e-9);
  const Trajectory c = solve_random_alternating(kMono, 3.0, 3.0, 12, cfg);
  const bool differs = c.burns.size() != a.burns.size() ||
                       (!c.burns.empty() && c.burns[0].bt != a.burns[0].bt);
  CHECK(differs);
}
