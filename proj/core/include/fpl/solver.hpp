#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "fpl/size_spectrum.hpp"
#include "fpl/transform_kit.hpp"

namespace fpl {

// Piecewise-constant lightning rate. values[i] applies on
// [knots[i], knots[i+1]) and the last value extends to infinity.
struct LambdaSchedule {
  std::vector<double> knots;   // ascending, knots[0] == 0
  std::vector<double> values;  // same length, each >= 0

  static LambdaSchedule constant(double v);
  // Grammar: comma-separated "t:value" pairs, e.g. "0:1.0,2.5:0.1".
  // A bare number is shorthand for a constant schedule.
  static LambdaSchedule parse(const std::string& text);
  std::string str() const;

  double at(double t) const;        // right-continuous lookup
  double integral(double t) const;  // exact integral over [0, t]
  double min_value() const;
  double max_value() const;
  bool strictly_positive() const;
  void validate() const;  // raises ParseError on structural defects
};

// Integration scheme for the spectrum path. rk4 is the fixed-step default;
// exp2 is an exponential trapezoidal rule that treats the linear sink term
// -k v_k s(t) exactly and therefore stays stable for truncations far beyond
// the rk4 stability bound K*h*s < 2.8. exp2 is second order in time and
// switches the coagulation convolution to FFT above a size threshold.
enum class Scheme { rk4, exp2 };

struct SolverConfig {
  std::int64_t K = 200;        // spectrum truncation; 0 skips spectra entirely
  double h = 1e-3;             // time-step upper bound
  double quad_tol = 1e-10;     // adaptive Simpson absolute tolerance
  std::uint64_t seed = 1;      // random-alternating only
  LambdaSchedule lambda = LambdaSchedule::constant(0.0);
  double T = 3.0;
  double sample_dt = 0.01;     // scalar series sampling period
  std::vector<double> spectrum_times;  // extra spectrum snapshot instants
  Scheme scheme = Scheme::rk4;
  // Step-halving consistency check: every solve is repeated at h/2 (same
  // burn sequence) and a final-state disagreement above 1e-7 raises
  // StepSizeTooCoarse. Disable for large exploratory runs.
  bool richardson = true;

  void validate() const;
};

// Burn instants carry two rows: the pre value (left limit, matching the
// left-continuity of Phi and theta) and the post value.
enum class Side { none, pre, post };
const char* side_name(Side s);

struct TrajPoint {
  double t = 0.0;
  Side side = Side::none;
  double m0 = 0.0;     // sol mass: m0(0) - Phi - theta
  double Phi = 0.0;    // cumulative burnt mass
  double theta = 0.0;  // current gel (giant) mass
  double wstar = 0.0;  // minimizer location; crosses 0 at gel times
  double phi = 0.0;    // dPhi/dt where defined, 0 at jumps
};

struct SpectrumSnapshot {
  double t = 0.0;
  Side side = Side::none;
  std::vector<double> v;  // mass spectrum, v[k] for k = 1..K, v[0] unused

  // tail-cumulative w_k = sum_{l<=k} v_l
  double w(std::int64_t k) const;
};

struct BurnEvent {
  std::int64_t index = 0;
  double bt = 0.0;          // burn instant
  double theta = 0.0;       // mass burnt (the jump of Phi)
  double gel_before = 0.0;  // gel time opening the interval this burn closes
};

struct Trajectory {
  double m0_initial = 0.0;
  double T = 0.0;
  std::int64_t K = 0;
  std::vector<TrajPoint> points;          // ascending t, pre before post
  std::vector<SpectrumSnapshot> spectra;  // at requested times
  std::vector<BurnEvent> burns;           // committed (theta > 0) burns
  std::vector<double> noop_burn_times;    // scheduled burns that hit theta=0
  std::vector<double> gel_times;          // w* zero crossings within [0,T]

  // Exact-time lookup on the sample grid (1e-9 tolerance); prefers the
  // requested side when the instant is duplicated. Null when absent.
  const TrajPoint* find_point(double t, Side side = Side::none) const;
};

// Control path w*(t) of the subcritical equations, solved by fixed-step RK4
// on dw/dt = lambda(t)/(w E(0,t+w)) - 1, w(0) = gel_time, with nodes at
// every step and cubic Hermite evaluation in between. A vanishing lambda
// segment turns the equation into dw/dt = -1 with absorption at w = 0;
// strictly positive schedules keep w positive (ControlSingularity if the
// path still collapses, which signals a step-size bug).
struct ControlPath {
  std::vector<double> t, w, dw;
  double at(double time) const;
  double deriv(double time) const;
};
ControlPath solve_control_path(const TransformBundle& b,
                               const LambdaSchedule& lambda, double T,
                               double h);

// Mass-spectrum path: integrates
//   dv_k/dt = (k/2) sum_{l<k} v_l v_{k-l} - k v_k (m0_path(t) + lambda_path(t))
// for k = 1..K from the bundle's initial spectrum with fixed-step RK4.
// The system is lower-triangular, so the first K components carry no
// truncation error given an exact sink path. Both paths may have step
// discontinuities only at `breaks` (ascending; 0 and T are implied), and the
// grid is aligned with them so each RK4 step sees a smooth right-hand side.
// Snapshots are taken at `snap_times` (ascending, within [0, T]).
std::vector<SpectrumSnapshot> integrate_vk_triangular(
    const TransformBundle& b, const std::function<double(double)>& m0_path,
    const std::function<double(double)>& lambda_path, std::int64_t K,
    const std::vector<double>& breaks, double h, double T,
    const std::vector<double>& snap_times);

// Phi(t) = 1[t >= gel_time] F0(t), theta = 0, w*(t) = max(gel_time - t, 0),
// phi(t) = E(0,t) post-gel; spectra from the triangular path with sink
// m0(t) = m0(0) - Phi(t).
Trajectory solve_critical(const TransformBundle& b, const SolverConfig& cfg);

// Control-ODE route: w* from solve_control_path on cfg.lambda (validated
// strictly positive), Phi(t) = F0(t + w*(t)), phi = lambda(t)/w*(t),
// theta = 0; spectra with sink m0(t) + lambda(t).
Trajectory solve_subcritical(const TransformBundle& b,
                             const SolverConfig& cfg);

// Prescribed burn instants. Between burns the left edge a = t + w*(t) is
// constant; past the interval's gel time the giant holds
// theta(t) = int_a^{b(t)} E(0,y) dy with b(t) = wstar_plus_root(a, t).
// At each burn Phi jumps by theta(bt) and the edge flips to b(bt). A burn
// scheduled while theta = 0 burns nothing and is recorded as a no-op.
// Spectra use the alternating sink: total alive mass m0(0) - Phi, a step
// function constant between burns.
Trajectory solve_alternating(const TransformBundle& b,
                             const std::vector<double>& burn_times,
                             const SolverConfig& cfg);

// Burns arrive at hazard rate lambda_rate * theta(t): Exp(1) clocks against
// the hazard integral accumulated trapezoidally on the step grid, burn
// instants refined by bisection to 1e-9. Fully reproducible from seed.
Trajectory solve_random_alternating(const TransformBundle& b,
                                    double lambda_rate, double T,
                                    std::uint64_t seed,
                                    const SolverConfig& cfg);

// The positive root b > t of int_a^b (y - t) E(0,y) dy = 0 for t > a
// (b = a when t = a), by bracketed bisection on the monotone-in-b integral
// to tolerance 1e-10. Requires t >= a > 0.
double wstar_plus_root(const TransformBundle& b, double a, double t,
                       double quad_tol = 1e-10);

// Burn time and burnt mass of the alternating interval (gt1, gt2):
// bt = int y E(0,y) dy / int E(0,y) dy and theta = int E(0,y) dy over
// [gt1, gt2]. Degenerate windows (gt1 >= gt2) raise InvalidWindow.
struct BurnFormula {
  double bt = 0.0;
  double theta = 0.0;
};
BurnFormula burn_time_between_gels(const TransformBundle& b, double gt1,
                                   double gt2, double quad_tol = 1e-10);

}  // namespace fpl
