#pragma once

#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include "fpl/fenwick.hpp"
#include "fpl/rng.hpp"
#include "fpl/size_spectrum.hpp"
#include "fpl/solver.hpp"

namespace fpl {

// Finite-N stochastic dynamics: components of an N-vertex system merge at
// rate size_i * size_j / N per ordered pair and are removed ("burnt") by
// lightning striking each vertex at rate lambda(t) * N^-alpha.
struct Regime {
  double alpha = 0.0;  // per-vertex strike intensity scales as N^-alpha
  LambdaSchedule lambda = LambdaSchedule::constant(0.0);
};

struct SimConfig {
  std::int64_t N = 100000;
  Regime regime;
  double T = 3.0;                   // simulation horizon
  std::uint64_t seed = 1;
  std::vector<double> sample_times; // ascending, within [0, T]
  std::int64_t k_obs = 50;          // cumulative mass observables for k <= k_obs
  bool record_events = false;       // keep the full event log in the output
  bool debug_rescan = false;        // verify cached aggregates after every event
};

enum class EventKind { merge, burn, reject, none };

// One realised (or truncated) step of the jump chain. `none` means the clock
// was advanced to a time limit without an event; sizes are pre-event values.
struct SimEvent {
  EventKind kind = EventKind::none;
  double t = 0.0;
  std::int64_t size_a = 0;  // merge: first component; burn/reject: the component
  std::int64_t size_b = 0;  // merge: second component
};

struct SamplePoint {
  double t = 0.0;
  double m0 = 0.0;            // alive mass fraction, sum_k v_k = S / N
  double m1 = 0.0;            // sum_k k v_k = Q / N
  double m2 = 0.0;            // sum_k k^2 v_k = C3 / N
  double Phi = 0.0;           // burnt mass fraction
  std::int64_t c_max = 0;     // largest alive component
  std::vector<double> w;      // w[k] = sum_{l<=k} v_l for k = 1..k_obs (w[0] = 0)
};

// Time-ordered burn events (time, component size).
struct FrozenHistogram {
  std::vector<std::pair<double, std::int64_t>> events;
};

// Mass-weighted distribution of burnt component sizes in a time window.
struct FrozenPmf {
  std::vector<std::pair<std::int64_t, double>> probs;  // (size, probability)
  double total_mass = 0.0;  // vertices burnt inside the window
  std::int64_t n_events = 0;
};

// Mutable simulator state. Aggregates (S, Q, C3, counts) are maintained
// incrementally in exact integer arithmetic; the Fenwick tree indexes alive
// components by size for O(log n) size-biased sampling.
struct SimState {
  std::int64_t N = 0;
  double t = 0.0;
  std::int64_t S = 0;            // alive vertices, sum of component sizes
  std::int64_t Q = 0;            // sum of squared component sizes
  __int128 C3 = 0;               // sum of cubed component sizes
  std::int64_t n_alive = 0;      // alive component count
  std::int64_t burnt = 0;        // burnt vertices
  double m0_initial = 0.0;       // S(0) / N after integer rounding
  Regime regime;
  double mu = 1.0;               // N^-alpha, fixed per run

  std::vector<std::int64_t> sizes;      // slot -> component size, 0 when free
  std::vector<std::uint32_t> free_slots;
  FenwickTree tree;

  std::int64_t c_max = 0;
  bool c_max_dirty = false;      // set when the current maximum may have burnt

  std::int64_t k_obs = 0;
  std::vector<std::int64_t> count_small;  // count_small[k] = #components of size k, k <= k_obs

  Xoshiro256pp rng;

  // Piecewise-constant lightning schedule cursor.
  std::size_t knot_idx = 0;
  double lam_cur = 0.0;
  double knot_next = std::numeric_limits<double>::infinity();

  std::uint64_t n_merges = 0, n_burns = 0, n_rejects = 0;
  FrozenHistogram frozen;
  bool record_events = false;
  std::vector<SimEvent> events;

  std::int64_t largest_alive();  // rescans when the cached maximum is stale
};

struct SimOutput {
  std::int64_t N = 0;
  std::uint64_t seed = 0;
  double T = 0.0;
  double m0_initial = 0.0;
  std::vector<SamplePoint> samples;
  FrozenHistogram frozen;
  std::vector<SimEvent> events;  // only when record_events was set
  std::uint64_t n_merges = 0, n_burns = 0, n_rejects = 0;
  double final_Phi = 0.0;
};

// Builds the initial state: floor(N * v_k / k) components of size k per
// spectrum entry. Raises EmptyAfterRounding when no component survives.
SimState init_state(const SizeSpectrum& spec0, std::int64_t N,
                    const Regime& regime, std::uint64_t seed);

// Advances the jump chain by one proposed event, but never past t_limit (the
// clock is memoryless, so truncating at t_limit and redrawing is exact).
// Schedule breakpoints of lambda also truncate and return EventKind::none.
SimEvent step(SimState& st,
              double t_limit = std::numeric_limits<double>::infinity());

// Runs the chain over [0, T], recording a SamplePoint at each sample time.
SimOutput run_simulation(const SizeSpectrum& spec0, const SimConfig& cfg);

// Mass-weighted pmf of burnt component sizes with burn time in (t1, t2].
// Raises InvalidWindow when t1 >= t2 and EmptyWindow when no burn occurred.
FrozenPmf frozen_size_distribution(const FrozenHistogram& h, double t1,
                                   double t2);

}  // namespace fpl
