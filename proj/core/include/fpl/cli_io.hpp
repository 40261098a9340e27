#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "fpl/experiments.hpp"
#include "fpl/gillespie.hpp"
#include "fpl/solver.hpp"

namespace fpl {

// FNV-1a 64-bit hash; the checksum recorded for every output file.
std::uint64_t fnv1a64(const std::string& bytes);
std::string hex64(std::uint64_t v);  // fixed-width lowercase hex

// Fully resolved run configuration. Every field round-trips through the
// flat `key = value` text format: load_config(str()) reproduces the value.
struct CliConfig {
  std::string subcommand;  // solve | simulate | transform | experiment
  std::string mode;        // solve regime or experiment name

  std::string init = "mono:1.0";  // inline mono:<mass> or a k,v CSV path
  std::string lambda = "0";       // schedule text, e.g. "0:1.0,2.5:0.1"
  double alpha = 0.5;
  std::int64_t N = 100000;
  std::int64_t K = 200;
  double T = 3.0;
  double grid = 1e-3;  // solver step upper bound
  double sample_dt = 0.01;
  double quad_tol = 1e-10;
  std::uint64_t seed = 1;
  int replicas = 20;
  int jobs = 0;  // 0: FPL_JOBS, then hardware
  std::string out = ".";
  std::string scheme = "rk4";
  bool richardson = true;
  std::string burns;  // comma list of prescribed burn instants
  std::int64_t k_obs = 50;
  bool record_events = false;
  bool debug_rescan = false;
  std::string spectrum_times;  // comma list of snapshot instants

  // experiment-specific knobs
  double t_measure = 2.0;
  std::string lambdas = "0.1,0.01,0.001";
  double threshold = 0.05;
  std::string times;  // tail-check instants; defaults to t_measure
  std::int64_t K_big = 10000;
  std::string alphas = "0.2,0.6";
  std::string N_list = "10000,100000,1000000";
  std::int64_t min_events = 2000;
  bool sharpness = true;
  std::string w_grid = "1.0:4.0:0.05";  // transform table lo:hi:step

  std::string str() const;  // flat text, fixed key order, full precision
};

// Applies `key = value` lines to cfg. `origin` names the source in
// diagnostics. Unknown keys, malformed values and out-of-range fields raise
// ParseError naming the offending key and line.
void apply_flat_config(CliConfig& cfg, const std::string& text,
                       const std::string& origin);

CliConfig load_config(const std::string& path);

// Structural validation shared by every subcommand; raises ParseError
// naming the field. Subcommand-specific rules are included when
// cfg.subcommand / cfg.mode are set.
void validate_config(const CliConfig& cfg);

struct RunManifest {
  std::string tool_version;
  std::string command_line;
  std::string started, finished;  // UTC ISO-8601
  std::uint64_t root_seed = 0;
  std::string config_echo;  // CliConfig::str() of the resolved config
  std::vector<std::pair<std::string, std::uint64_t>> outputs;

  std::string to_json() const;
};

// Pure serializers (used by the writers below and directly by tests).
// Trajectory rows: t,side,series,k,value with side blank off burns, k blank
// for scalars; rows ordered by t, then pre before post, then series in
// m0,Phi,theta,wstar,phi,v,w order, then k ascending. 17 significant digits.
std::string trajectory_to_csv(const Trajectory& traj);
std::string burns_to_csv(const Trajectory& traj);  // i,bt,theta,gel_before
std::string sim_to_csv(const SimOutput& out);      // same long format
std::string events_to_csv(const SimOutput& out);   // t,type,size (reject: 0)
// Burn-mass histogram over uniform time bins and size bins that are exact
// up to 10^4 and geometric with ratio 1.1 above; masses are per-vertex and
// averaged over the pooled replica count.
std::string histogram_to_csv(const std::vector<FrozenHistogram>& hists,
                             std::int64_t N, double T, int t_bins = 16);

// Writes bytes to path (IoError on failure) and returns fnv1a64(bytes).
std::uint64_t write_file(const std::string& path, const std::string& bytes);

// Long-format trajectory writer; returns the recorded checksum.
std::uint64_t write_trajectory(const Trajectory& traj,
                               const std::string& path);

// Full command dispatcher. Returns the process exit code:
// 0 success, 2 configuration error, 3 numeric failure, 4 failed verdict.
int run_cli(const std::vector<std::string>& args);
int run_cli(int argc, char** argv);

}  // namespace fpl
