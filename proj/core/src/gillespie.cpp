#include "fpl/gillespie.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

#include "fpl/errors.hpp"

namespace fpl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Stable integer rounding of N * v / k: floor with a tiny guard so that
// values which are integral up to floating-point noise do not drop a unit.
std::int64_t initial_count(std::int64_t N, double v, std::int64_t k) {
  const double x = static_cast<double>(N) * v / static_cast<double>(k);
  return static_cast<std::int64_t>(std::floor(x + 1e-9));
}

void refresh_lambda_cursor(SimState& st) {
  const auto& knots = st.regime.lambda.knots;
  const auto& values = st.regime.lambda.values;
  while (st.knot_idx + 1 < knots.size() && st.t >= knots[st.knot_idx + 1]) {
    ++st.knot_idx;
  }
  st.lam_cur = values[st.knot_idx];
  st.knot_next =
      st.knot_idx + 1 < knots.size() ? knots[st.knot_idx + 1] : kInf;
}

void remove_component(SimState& st, std::size_t slot, std::int64_t c) {
  st.tree.add(slot, -c);
  st.sizes[slot] = 0;
  st.free_slots.push_back(static_cast<std::uint32_t>(slot));
  --st.n_alive;
  if (c <= st.k_obs) --st.count_small[static_cast<std::size_t>(c)];
}

SamplePoint snapshot(SimState& st, double t) {
  SamplePoint p;
  p.t = t;
  const double n = static_cast<double>(st.N);
  p.m0 = static_cast<double>(st.S) / n;
  p.m1 = static_cast<double>(st.Q) / n;
  p.m2 = static_cast<double>(st.C3) / n;
  p.Phi = static_cast<double>(st.burnt) / n;
  p.c_max = st.largest_alive();
  p.w.assign(static_cast<std::size_t>(st.k_obs) + 1, 0.0);
  double acc = 0.0;
  for (std::int64_t k = 1; k <= st.k_obs; ++k) {
    acc += static_cast<double>(k) *
           static_cast<double>(st.count_small[static_cast<std::size_t>(k)]) / n;
    p.w[static_cast<std::size_t>(k)] = acc;
  }
  return p;
}

// Recomputes every cached aggregate from the slot array and compares.
void rescan_and_verify(const SimState& st) {
  std::int64_t S = 0, Q = 0, n_alive = 0, c_max = 0;
  __int128 C3 = 0;
  std::vector<std::int64_t> small(static_cast<std::size_t>(st.k_obs) + 1, 0);
  for (std::size_t i = 0; i < st.sizes.size(); ++i) {
    const std::int64_t c = st.sizes[i];
    if (c == 0) continue;
    ++n_alive;
    S += c;
    Q += c * c;
    C3 += static_cast<__int128>(c) * c * c;
    c_max = std::max(c_max, c);
    if (c <= st.k_obs) ++small[static_cast<std::size_t>(c)];
    if (st.tree.prefix(i + 1) - st.tree.prefix(i) != c)
      raise(Errc::OutOfDomain, "debug rescan: tree weight mismatch at slot " +
                                   std::to_string(i));
  }
  const bool ok = S == st.S && Q == st.Q && C3 == st.C3 &&
                  n_alive == st.n_alive && st.tree.total() == st.S &&
                  (st.c_max_dirty || c_max == st.c_max) &&
                  small == st.count_small;
  if (!ok) raise(Errc::OutOfDomain, "debug rescan: aggregate mismatch");
}

}  // namespace

std::int64_t SimState::largest_alive() {
  if (c_max_dirty) {
    std::int64_t m = 0;
    for (const std::int64_t c : sizes) m = std::max(m, c);
    c_max = m;
    c_max_dirty = false;
  }
  return c_max;
}

SimState init_state(const SizeSpectrum& spec0, std::int64_t N,
                    const Regime& regime, std::uint64_t seed) {
  if (N < 1) raise(Errc::OutOfRange, "simulation requires N >= 1");
  if (!(regime.alpha >= 0.0) || !std::isfinite(regime.alpha))
    raise(Errc::OutOfRange, "regime exponent alpha must be finite and >= 0");
  regime.lambda.validate();
  if (spec0.entries.empty()) raise(Errc::EmptySpectrum, "initial spectrum");

  SimState st;
  st.N = N;
  st.regime = regime;
  st.mu = std::pow(static_cast<double>(N), -regime.alpha);
  st.rng = Xoshiro256pp::seeded(seed);

  std::size_t slots = 0;
  for (const auto& e : spec0.entries) {
    const std::int64_t n_k = initial_count(N, e.second, e.first);
    if (n_k > 0) slots += static_cast<std::size_t>(n_k);
  }
  if (slots == 0)
    raise(Errc::EmptyAfterRounding,
          "initial spectrum rounds to zero components at N = " +
              std::to_string(N));

  st.sizes.reserve(slots);
  st.tree.init(slots);
  for (const auto& e : spec0.entries) {
    const std::int64_t k = e.first;
    const std::int64_t n_k = initial_count(N, e.second, k);
    for (std::int64_t i = 0; i < n_k; ++i) {
      const std::size_t slot = st.sizes.size();
      st.sizes.push_back(k);
      st.tree.add(slot, k);
      st.S += k;
      st.Q += k * k;
      st.C3 += static_cast<__int128>(k) * k * k;
      ++st.n_alive;
      st.c_max = std::max(st.c_max, k);
    }
  }
  st.m0_initial = static_cast<double>(st.S) / static_cast<double>(N);
  refresh_lambda_cursor(st);
  return st;
}

SimEvent step(SimState& st, double t_limit) {
  if (t_limit < st.t)
    raise(Errc::OutOfRange, "step: time limit lies in the past");
  refresh_lambda_cursor(st);

  SimEvent ev;
  if (st.S == 0) {  // everything burnt: the chain is absorbed
    st.t = std::min(t_limit, kInf);
    ev.t = st.t;
    return ev;
  }

  const double S = static_cast<double>(st.S);
  const double rate_coag = S * S / (2.0 * static_cast<double>(st.N));
  const double rate_burn = st.lam_cur * st.mu * S;
  const double rate = rate_coag + rate_burn;

  const double t_stop = std::min(t_limit, st.knot_next);
  const double t_new = st.t + st.rng.exp1() / rate;
  if (!(t_new <= t_stop)) {  // truncate: memorylessness makes a redraw exact
    st.t = t_stop;
    ev.t = t_stop;
    return ev;
  }
  st.t = t_new;
  ev.t = t_new;

  if (st.rng.u01() * rate < rate_burn) {
    // Lightning hits a uniform vertex; its whole component burns.
    const std::size_t slot =
        st.tree.find(static_cast<std::int64_t>(st.rng.below(
            static_cast<std::uint64_t>(st.S))));
    const std::int64_t c = st.sizes[slot];
    remove_component(st, slot, c);
    st.S -= c;
    st.Q -= c * c;
    st.C3 -= static_cast<__int128>(c) * c * c;
    st.burnt += c;
    if (c == st.c_max) st.c_max_dirty = true;
    st.frozen.events.emplace_back(st.t, c);
    ++st.n_burns;
    ev.kind = EventKind::burn;
    ev.size_a = c;
  } else {
    // Candidate pair: two independent uniform vertices. Landing in the same
    // component rejects the proposal, which thins the self-pair excess of
    // the S^2/(2N) proposal rate down to the exact sum over distinct pairs.
    const std::size_t a = st.tree.find(static_cast<std::int64_t>(
        st.rng.below(static_cast<std::uint64_t>(st.S))));
    const std::size_t b = st.tree.find(static_cast<std::int64_t>(
        st.rng.below(static_cast<std::uint64_t>(st.S))));
    if (a == b) {
      ++st.n_rejects;
      ev.kind = EventKind::reject;
      ev.size_a = st.sizes[a];
    } else {
      const std::int64_t ca = st.sizes[a];
      const std::int64_t cb = st.sizes[b];
      remove_component(st, b, cb);
      st.tree.add(a, cb);
      st.sizes[a] = ca + cb;
      st.Q += 2 * ca * cb;
      st.C3 += static_cast<__int128>(3) * ca * cb * (ca + cb);
      if (ca <= st.k_obs) --st.count_small[static_cast<std::size_t>(ca)];
      if (ca + cb <= st.k_obs)
        ++st.count_small[static_cast<std::size_t>(ca + cb)];
      if (!st.c_max_dirty) st.c_max = std::max(st.c_max, ca + cb);
      ++st.n_merges;
      ev.kind = EventKind::merge;
      ev.size_a = ca;
      ev.size_b = cb;
    }
  }
  if (st.record_events) st.events.push_back(ev);
  return ev;
}

SimOutput run_simulation(const SizeSpectrum& spec0, const SimConfig& cfg) {
  if (!(cfg.T > 0.0) || !std::isfinite(cfg.T))
    raise(Errc::OutOfRange, "simulation horizon T must be positive");
  if (cfg.k_obs < 0) raise(Errc::OutOfRange, "k_obs must be >= 0");
  double prev = 0.0;
  for (const double s : cfg.sample_times) {
    if (!(s >= prev) || s > cfg.T)
      raise(Errc::OutOfRange,
            "sample times must be non-decreasing within [0, T]");
    prev = s;
  }

  SimState st = init_state(spec0, cfg.N, cfg.regime, cfg.seed);
  st.k_obs = cfg.k_obs;
  st.count_small.assign(static_cast<std::size_t>(cfg.k_obs) + 1, 0);
  for (const std::int64_t c : st.sizes)
    if (c >= 1 && c <= cfg.k_obs) ++st.count_small[static_cast<std::size_t>(c)];
  st.record_events = cfg.record_events;

  SimOutput out;
  out.N = cfg.N;
  out.seed = cfg.seed;
  out.T = cfg.T;
  out.m0_initial = st.m0_initial;

  std::vector<double> stops = cfg.sample_times;
  const std::size_t n_samples = stops.size();
  stops.push_back(cfg.T);
  for (std::size_t i = 0; i < stops.size(); ++i) {
    const double target = stops[i];
    while (st.t < target) {
      step(st, target);
      if (cfg.debug_rescan) rescan_and_verify(st);
    }
    if (i < n_samples) out.samples.push_back(snapshot(st, target));
  }

  out.frozen = std::move(st.frozen);
  out.events = std::move(st.events);
  out.n_merges = st.n_merges;
  out.n_burns = st.n_burns;
  out.n_rejects = st.n_rejects;
  out.final_Phi = static_cast<double>(st.burnt) / static_cast<double>(st.N);
  return out;
}

FrozenPmf frozen_size_distribution(const FrozenHistogram& h, double t1,
                                   double t2) {
  if (!(t1 < t2)) raise(Errc::InvalidWindow, "frozen window requires t1 < t2");
  std::vector<std::int64_t> sizes;
  for (const auto& e : h.events)
    if (e.first > t1 && e.first <= t2) sizes.push_back(e.second);
  if (sizes.empty())
    raise(Errc::EmptyWindow, "no burn events in (" + std::to_string(t1) +
                                 ", " + std::to_string(t2) + "]");
  std::sort(sizes.begin(), sizes.end());
  FrozenPmf pmf;
  pmf.n_events = static_cast<std::int64_t>(sizes.size());
  double total = 0.0;
  for (const std::int64_t c : sizes) total += static_cast<double>(c);
  pmf.total_mass = total;
  for (std::size_t i = 0; i < sizes.size();) {
    std::size_t j = i;
    while (j < sizes.size() && sizes[j] == sizes[i]) ++j;
    pmf.probs.emplace_back(
        sizes[i],
        static_cast<double>(sizes[i]) * static_cast<double>(j - i) / total);
    i = j;
  }
  return pmf;
}

}  // namespace fpl
