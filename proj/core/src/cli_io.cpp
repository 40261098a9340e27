#include "fpl/cli_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "fpl/errors.hpp"
#include "fpl/parallel.hpp"
#include "fpl/transform_kit.hpp"

namespace fpl {

namespace {

constexpr const char* kToolVersion = "fpl 1.0.0";

std::string fmt17(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

double parse_double_field(const std::string& field, const std::string& val) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(val, &pos);
    if (pos != val.size())
      raise(Errc::ParseError, field + ": trailing characters in '" + val + "'");
    return v;
  } catch (const Error&) {
    throw;
  } catch (const std::exception&) {
    raise(Errc::ParseError, field + ": not a number: '" + val + "'");
  }
}

std::int64_t parse_int_field(const std::string& field, const std::string& val) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(val, &pos);
    if (pos != val.size())
      raise(Errc::ParseError, field + ": trailing characters in '" + val + "'");
    return v;
  } catch (const Error&) {
    throw;
  } catch (const std::exception&) {
    raise(Errc::ParseError, field + ": not an integer: '" + val + "'");
  }
}

std::uint64_t parse_uint_field(const std::string& field,
                               const std::string& val) {
  try {
    std::size_t pos = 0;
    const unsigned long long v = std::stoull(val, &pos);
    if (pos != val.size())
      raise(Errc::ParseError, field + ": trailing characters in '" + val + "'");
    return v;
  } catch (const Error&) {
    throw;
  } catch (const std::exception&) {
    raise(Errc::ParseError, field + ": not an unsigned integer: '" + val + "'");
  }
}

bool parse_bool_field(const std::string& field, const std::string& val) {
  if (val == "true" || val == "1") return true;
  if (val == "false" || val == "0") return false;
  raise(Errc::ParseError, field + ": expected true/false, got '" + val + "'");
}

std::vector<double> parse_double_list(const std::string& field,
                                      const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    tok = trim(tok);
    if (tok.empty()) continue;
    out.push_back(parse_double_field(field, tok));
  }
  return out;
}

std::vector<std::int64_t> parse_int_list(const std::string& field,
                                         const std::string& text) {
  std::vector<std::int64_t> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    tok = trim(tok);
    if (tok.empty()) continue;
    out.push_back(parse_int_field(field, tok));
  }
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(Errc::IoError, "cannot read " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::string now_iso() {
  const std::time_t t = std::time(nullptr);
  std::tm g{};
  gmtime_r(&t, &g);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &g);
  return buf;
}

const char* side_text(Side s) {
  switch (s) {
    case Side::pre:
      return "pre";
    case Side::post:
      return "post";
    default:
      return "";
  }
}

int side_rank(Side s) { return s == Side::post ? 1 : 0; }

}  // namespace

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[static_cast<std::size_t>(i)] = digits[v & 0xf];
    v >>= 4;
  }
  return s;
}

std::string CliConfig::str() const {
  std::ostringstream os;
  os << "subcommand = " << subcommand << '\n';
  os << "mode = " << mode << '\n';
  os << "init = " << init << '\n';
  os << "lambda = " << lambda << '\n';
  os << "alpha = " << fmt17(alpha) << '\n';
  os << "N = " << N << '\n';
  os << "K = " << K << '\n';
  os << "T = " << fmt17(T) << '\n';
  os << "grid = " << fmt17(grid) << '\n';
  os << "sample_dt = " << fmt17(sample_dt) << '\n';
  os << "quad_tol = " << fmt17(quad_tol) << '\n';
  os << "seed = " << seed << '\n';
  os << "replicas = " << replicas << '\n';
  os << "jobs = " << jobs << '\n';
  os << "out = " << out << '\n';
  os << "scheme = " << scheme << '\n';
  os << "richardson = " << (richardson ? "true" : "false") << '\n';
  os << "burns = " << burns << '\n';
  os << "k_obs = " << k_obs << '\n';
  os << "record_events = " << (record_events ? "true" : "false") << '\n';
  os << "debug_rescan = " << (debug_rescan ? "true" : "false") << '\n';
  os << "spectrum_times = " << spectrum_times << '\n';
  os << "t_measure = " << fmt17(t_measure) << '\n';
  os << "lambdas = " << lambdas << '\n';
  os << "threshold = " << fmt17(threshold) << '\n';
  os << "times = " << times << '\n';
  os << "K_big = " << K_big << '\n';
  os << "alphas = " << alphas << '\n';
  os << "N_list = " << N_list << '\n';
  os << "min_events = " << min_events << '\n';
  os << "sharpness = " << (sharpness ? "true" : "false") << '\n';
  os << "w_grid = " << w_grid << '\n';
  return os.str();
}

void apply_flat_config(CliConfig& cfg, const std::string& text,
                       const std::string& origin) {
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const std::string where = origin + ":" + std::to_string(lineno);
    std::string body = line;
    const std::size_t hash = body.find('#');
    if (hash != std::string::npos) body = body.substr(0, hash);
    body = trim(body);
    if (body.empty()) continue;
    const std::size_t eq = body.find('=');
    if (eq == std::string::npos)
      raise(Errc::ParseError, where + ": expected key = value");
    const std::string key = trim(body.substr(0, eq));
    const std::string val = trim(body.substr(eq + 1));
    try {
      if (key == "subcommand") cfg.subcommand = val;
      else if (key == "mode") cfg.mode = val;
      else if (key == "init") cfg.init = val;
      else if (key == "lambda") cfg.lambda = val;
      else if (key == "alpha") cfg.alpha = parse_double_field(key, val);
      else if (key == "N") cfg.N = parse_int_field(key, val);
      else if (key == "K") cfg.K = parse_int_field(key, val);
      else if (key == "T") cfg.T = parse_double_field(key, val);
      else if (key == "grid") cfg.grid = parse_double_field(key, val);
      else if (key == "sample_dt") cfg.sample_dt = parse_double_field(key, val);
      else if (key == "quad_tol") cfg.quad_tol = parse_double_field(key, val);
      else if (key == "seed") cfg.seed = parse_uint_field(key, val);
      else if (key == "replicas")
        cfg.replicas = static_cast<int>(parse_int_field(key, val));
      else if (key == "jobs")
        cfg.jobs = static_cast<int>(parse_int_field(key, val));
      else if (key == "out") cfg.out = val;
      else if (key == "scheme") cfg.scheme = val;
      else if (key == "richardson") cfg.richardson = parse_bool_field(key, val);
      else if (key == "burns") cfg.burns = val;
      else if (key == "k_obs") cfg.k_obs = parse_int_field(key, val);
      else if (key == "record_events")
        cfg.record_events = parse_bool_field(key, val);
      else if (key == "debug_rescan")
        cfg.debug_rescan = parse_bool_field(key, val);
      else if (key == "spectrum_times") cfg.spectrum_times = val;
      else if (key == "t_measure") cfg.t_measure = parse_double_field(key, val);
      else if (key == "lambdas") cfg.lambdas = val;
      else if (key == "threshold") cfg.threshold = parse_double_field(key, val);
      else if (key == "times") cfg.times = val;
      else if (key == "K_big") cfg.K_big = parse_int_field(key, val);
      else if (key == "alphas") cfg.alphas = val;
      else if (key == "N_list") cfg.N_list = val;
      else if (key == "min_events") cfg.min_events = parse_int_field(key, val);
      else if (key == "sharpness") cfg.sharpness = parse_bool_field(key, val);
      else if (key == "w_grid") cfg.w_grid = val;
      else
        raise(Errc::ParseError, "unknown key '" + key + "'");
    } catch (const Error& e) {
      raise(Errc::ParseError, where + ": " + e.what());
    }
  }
}

CliConfig load_config(const std::string& path) {
  CliConfig cfg;
  apply_flat_config(cfg, read_file(path), path);
  return cfg;
}

void validate_config(const CliConfig& cfg) {
  auto fail = [](const std::string& field, const std::string& why) {
    raise(Errc::ParseError, field + ": " + why);
  };
  if (cfg.N < 1) fail("N", "must be >= 1, got " + std::to_string(cfg.N));
  if (cfg.K < 0) fail("K", "must be >= 0");
  if (!(cfg.T > 0.0) || !std::isfinite(cfg.T)) fail("T", "must be positive");
  if (!(cfg.grid > 0.0)) fail("grid", "must be positive");
  if (!(cfg.sample_dt > 0.0)) fail("sample_dt", "must be positive");
  if (!(cfg.quad_tol > 0.0)) fail("quad_tol", "must be positive");
  if (cfg.replicas < 1) fail("replicas", "must be >= 1");
  if (cfg.jobs < 0) fail("jobs", "must be >= 0");
  if (cfg.k_obs < 0) fail("k_obs", "must be >= 0");
  if (!(cfg.alpha >= 0.0 && cfg.alpha <= 1.0)) fail("alpha", "must be in [0,1]");
  if (cfg.scheme != "rk4" && cfg.scheme != "exp2")
    fail("scheme", "must be rk4 or exp2");
  if (!(cfg.threshold > 0.0)) fail("threshold", "must be positive");
  if (cfg.min_events < 1) fail("min_events", "must be >= 1");

  LambdaSchedule sched;
  try {
    sched = LambdaSchedule::parse(cfg.lambda);
    sched.validate();
  } catch (const Error& e) {
    fail("lambda", e.what());
  }
  if (cfg.init.rfind("mono:", 0) == 0) {
    const double mass =
        parse_double_field("init", cfg.init.substr(5));
    if (!(mass > 0.0)) fail("init", "monodisperse mass must be positive");
  }
  const std::vector<double> burn_list = parse_double_list("burns", cfg.burns);
  for (std::size_t i = 0; i < burn_list.size(); ++i) {
    if (!(burn_list[i] > 0.0)) fail("burns", "instants must be positive");
    if (i > 0 && !(burn_list[i] > burn_list[i - 1]))
      fail("burns", "instants must be strictly increasing");
  }
  const std::vector<double> snap_list =
      parse_double_list("spectrum_times", cfg.spectrum_times);
  for (std::size_t i = 1; i < snap_list.size(); ++i)
    if (!(snap_list[i] > snap_list[i - 1]))
      fail("spectrum_times", "instants must be ascending");

  if (cfg.subcommand == "solve") {
    if (cfg.mode != "critical" && cfg.mode != "subcritical" &&
        cfg.mode != "alternating" && cfg.mode != "random-alternating")
      fail("mode", "unknown solve regime '" + cfg.mode + "'");
    if (cfg.mode == "subcritical" && !sched.strictly_positive())
      fail("lambda",
           "the subcritical equations require a strictly positive rate");
    if (cfg.mode == "random-alternating" && sched.values.size() != 1)
      fail("lambda", "random-alternating takes a constant rate");
  } else if (cfg.subcommand == "experiment") {
    static const char* names[] = {"gamma",     "rayleigh", "extremum",
                                  "tail",      "beta_scan", "sim_vs_solver"};
    bool known = false;
    for (const char* n : names) known = known || cfg.mode == n;
    if (!known) fail("mode", "unknown experiment '" + cfg.mode + "'");
    if (cfg.mode == "rayleigh" && sched.values.size() != 1)
      fail("lambda", "the rayleigh check takes a constant rate");
  } else if (cfg.subcommand == "transform") {
    const std::vector<double> g = [&] {
      std::vector<double> parts;
      std::stringstream ss(cfg.w_grid);
      std::string tok;
      while (std::getline(ss, tok, ':'))
        parts.push_back(parse_double_field("w_grid", trim(tok)));
      return parts;
    }();
    if (g.size() != 3 || !(g[0] > 0.0) || !(g[1] >= g[0]) || !(g[2] > 0.0))
      fail("w_grid", "expected lo:hi:step with 0 < lo <= hi and step > 0");
  } else if (cfg.subcommand != "simulate" && !cfg.subcommand.empty()) {
    fail("subcommand", "unknown subcommand '" + cfg.subcommand + "'");
  }
}

std::string RunManifest::to_json() const {
  nlohmann::ordered_json j;
  j["tool_version"] = tool_version;
  j["command_line"] = command_line;
  j["started"] = started;
  j["finished"] = finished;
  j["root_seed"] = root_seed;
  nlohmann::ordered_json conf = nlohmann::ordered_json::object();
  std::stringstream ss(config_echo);
  std::string line;
  while (std::getline(ss, line)) {
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) continue;
    conf[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  j["config"] = conf;
  nlohmann::ordered_json outs = nlohmann::ordered_json::array();
  for (const auto& o : outputs)
    outs.push_back({{"file", o.first}, {"fnv1a64", hex64(o.second)}});
  j["outputs"] = outs;
  return j.dump(2) + "\n";
}

std::string trajectory_to_csv(const Trajectory& traj) {
  std::ostringstream os;
  os.precision(17);
  os << "t,side,series,k,value\n";
  const auto scalar_rows = [&](const TrajPoint& p) {
    const char* side = side_text(p.side);
    os << p.t << ',' << side << ",m0,," << p.m0 << '\n';
    os << p.t << ',' << side << ",Phi,," << p.Phi << '\n';
    os << p.t << ',' << side << ",theta,," << p.theta << '\n';
    os << p.t << ',' << side << ",wstar,," << p.wstar << '\n';
    os << p.t << ',' << side << ",phi,," << p.phi << '\n';
  };
  const auto spectrum_rows = [&](const SpectrumSnapshot& s) {
    const char* side = side_text(s.side);
    for (std::size_t k = 1; k < s.v.size(); ++k)
      os << s.t << ',' << side << ",v," << k << ',' << s.v[k] << '\n';
    double acc = 0.0;
    for (std::size_t k = 1; k < s.v.size(); ++k) {
      acc += s.v[k];
      os << s.t << ',' << side << ",w," << k << ',' << acc << '\n';
    }
  };
  std::size_t i = 0, j = 0;
  const std::size_t P = traj.points.size(), S = traj.spectra.size();
  auto before = [](double t1, int r1, double t2, int r2) {
    return t1 < t2 || (t1 == t2 && r1 < r2);
  };
  while (i < P || j < S) {
    const bool have_p = i < P, have_s = j < S;
    if (have_p &&
        (!have_s || !before(traj.spectra[j].t, side_rank(traj.spectra[j].side),
                            traj.points[i].t, side_rank(traj.points[i].side)))) {
      scalar_rows(traj.points[i]);
      if (have_s && traj.spectra[j].t == traj.points[i].t &&
          side_rank(traj.spectra[j].side) == side_rank(traj.points[i].side)) {
        spectrum_rows(traj.spectra[j]);
        ++j;
      }
      ++i;
    } else {
      spectrum_rows(traj.spectra[j]);
      ++j;
    }
  }
  return os.str();
}

std::string burns_to_csv(const Trajectory& traj) {
  std::ostringstream os;
  os.precision(17);
  os << "i,bt,theta,gel_before\n";
  for (const BurnEvent& ev : traj.burns)
    os << ev.index << ',' << ev.bt << ',' << ev.theta << ',' << ev.gel_before
       << '\n';
  return os.str();
}

std::string sim_to_csv(const SimOutput& out) {
  std::ostringstream os;
  os.precision(17);
  os << "t,side,series,k,value\n";
  for (const SamplePoint& p : out.samples) {
    os << p.t << ",,m0,," << p.m0 << '\n';
    os << p.t << ",,m1,," << p.m1 << '\n';
    os << p.t << ",,m2,," << p.m2 << '\n';
    os << p.t << ",,Phi,," << p.Phi << '\n';
    os << p.t << ",,cmax,," << p.c_max << '\n';
    for (std::size_t k = 1; k < p.w.size(); ++k)
      os << p.t << ",,w," << k << ',' << p.w[k] << '\n';
  }
  return os.str();
}

std::string events_to_csv(const SimOutput& out) {
  std::ostringstream os;
  os.precision(17);
  os << "t,type,size\n";
  for (const SimEvent& ev : out.events) {
    switch (ev.kind) {
      case EventKind::merge:
        os << ev.t << ",merge," << ev.size_a + ev.size_b << '\n';
        break;
      case EventKind::burn:
        os << ev.t << ",burn," << ev.size_a << '\n';
        break;
      case EventKind::reject:
        os << ev.t << ",reject,0\n";
        break;
      case EventKind::none:
        break;
    }
  }
  return os.str();
}

std::string histogram_to_csv(const std::vector<FrozenHistogram>& hists,
                             std::int64_t N, double T, int t_bins) {
  if (t_bins < 1) raise(Errc::OutOfRange, "histogram needs t_bins >= 1");
  // size-bin lower edges: every integer up to 1e4, then ratio-1.1 geometric
  static const std::vector<std::int64_t> geo = [] {
    std::vector<std::int64_t> g{10000};
    while (g.back() < (std::int64_t{1} << 62))
      g.push_back(std::max(g.back() + 1,
                           static_cast<std::int64_t>(
                               static_cast<double>(g.back()) * 1.1)));
    return g;
  }();
  auto k_bin = [](std::int64_t c) -> std::int64_t {
    if (c <= 10000) return c;
    const auto it = std::upper_bound(geo.begin(), geo.end(), c);
    return *(it - 1) + 1;  // lower bound of the covering bin
  };
  std::map<std::pair<int, std::int64_t>, double> mass;
  for (const FrozenHistogram& h : hists)
    for (const auto& ev : h.events) {
      int tb = static_cast<int>(std::floor(ev.first / T *
                                           static_cast<double>(t_bins)));
      tb = std::min(std::max(tb, 0), t_bins - 1);
      mass[{tb, k_bin(ev.second)}] += static_cast<double>(ev.second);
    }
  const double denom =
      static_cast<double>(N) * static_cast<double>(std::max<std::size_t>(
                                   1, hists.size()));
  std::ostringstream os;
  os.precision(17);
  os << "t_bin,k_bin,mass\n";
  for (const auto& [key, m] : mass)
    os << (static_cast<double>(key.first + 1) * T /
           static_cast<double>(t_bins))
       << ',' << key.second << ',' << m / denom << '\n';
  return os.str();
}

std::uint64_t write_file(const std::string& path, const std::string& bytes) {
  std::ofstream outf(path, std::ios::binary | std::ios::trunc);
  if (!outf) raise(Errc::IoError, "cannot open " + path + " for writing");
  outf.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  outf.flush();
  if (!outf) raise(Errc::IoError, "short write to " + path);
  return fnv1a64(bytes);
}

std::uint64_t write_trajectory(const Trajectory& traj,
                               const std::string& path) {
  return write_file(path, trajectory_to_csv(traj));
}

namespace {

SizeSpectrum load_init(const std::string& init) {
  if (init.rfind("mono:", 0) == 0)
    return monodisperse(parse_double_field("init", init.substr(5)));
  return spectrum_from_csv(read_file(init));
}

SolverConfig solver_config_from(const CliConfig& cfg) {
  SolverConfig sc;
  sc.K = cfg.K;
  sc.h = cfg.grid;
  sc.quad_tol = cfg.quad_tol;
  sc.seed = cfg.seed;
  sc.lambda = LambdaSchedule::parse(cfg.lambda);
  sc.T = cfg.T;
  sc.sample_dt = cfg.sample_dt;
  sc.spectrum_times = parse_double_list("spectrum_times", cfg.spectrum_times);
  sc.scheme = cfg.scheme == "exp2" ? Scheme::exp2 : Scheme::rk4;
  sc.richardson = cfg.richardson;
  return sc;
}

std::string join_path(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

std::string mean_sim_csv(const std::vector<SimOutput>& outs) {
  std::ostringstream os;
  os.precision(17);
  os << "t,side,series,k,value\n";
  if (outs.empty()) return os.str();
  const std::size_t S = outs[0].samples.size();
  const double R = static_cast<double>(outs.size());
  for (std::size_t s = 0; s < S; ++s) {
    const double t = outs[0].samples[s].t;
    double m0 = 0, m1 = 0, m2 = 0, phi = 0, cmax = 0;
    std::vector<double> w(outs[0].samples[s].w.size(), 0.0);
    for (const SimOutput& o : outs) {
      const SamplePoint& p = o.samples[s];
      m0 += p.m0;
      m1 += p.m1;
      m2 += p.m2;
      phi += p.Phi;
      cmax += static_cast<double>(p.c_max);
      for (std::size_t k = 1; k < w.size(); ++k) w[k] += p.w[k];
    }
    os << t << ",,m0,," << m0 / R << '\n';
    os << t << ",,m1,," << m1 / R << '\n';
    os << t << ",,m2,," << m2 / R << '\n';
    os << t << ",,Phi,," << phi / R << '\n';
    os << t << ",,cmax,," << cmax / R << '\n';
    for (std::size_t k = 1; k < w.size(); ++k)
      os << t << ",,w," << k << ',' << w[k] / R << '\n';
  }
  return os.str();
}

std::string report_to_json(const ExperimentReport& r) {
  nlohmann::ordered_json j;
  j["name"] = r.name;
  nlohmann::ordered_json params = nlohmann::ordered_json::object();
  for (const auto& p : r.params) params[p.first] = p.second;
  j["params"] = params;
  nlohmann::ordered_json stats = nlohmann::ordered_json::object();
  for (const auto& s : r.stats) stats[s.first] = s.second;
  j["stats"] = stats;
  j["verdict"] = r.pass ? "pass" : "fail";
  j["exploratory"] = r.exploratory;
  j["seeds"] = r.seeds;
  nlohmann::ordered_json files = nlohmann::ordered_json::array();
  for (const auto& a : r.artifacts) files.push_back(a.first);
  j["artifact_files"] = files;
  j["runtime_seconds"] = r.runtime_seconds;
  j["notes"] = r.notes;
  return j.dump(2) + "\n";
}

ExperimentReport dispatch_experiment(const CliConfig& cfg,
                                     const SizeSpectrum& spec0) {
  ExperimentOptions opts;
  opts.solver = solver_config_from(cfg);
  opts.seed = cfg.seed;
  opts.jobs = cfg.jobs;
  const LambdaSchedule sched = LambdaSchedule::parse(cfg.lambda);
  if (cfg.mode == "gamma") {
    const TransformBundle b = build_bundle(spec0);
    return gamma_limit_check(b, cfg.t_measure,
                             parse_double_list("lambdas", cfg.lambdas),
                             cfg.threshold, opts);
  }
  if (cfg.mode == "rayleigh") {
    const TransformBundle b = build_bundle(spec0);
    return rayleigh_limit_check(b, cfg.t_measure, sched.values[0],
                                cfg.replicas, cfg.threshold, opts,
                                cfg.min_events);
  }
  if (cfg.mode == "extremum") {
    const TransformBundle b = build_bundle(spec0);
    return extremum_check(b, cfg.T, cfg.replicas, cfg.sharpness, opts);
  }
  if (cfg.mode == "tail") {
    const TransformBundle b = build_bundle(spec0);
    std::vector<double> ts = parse_double_list("times", cfg.times);
    if (ts.empty()) ts = {cfg.t_measure};
    return tail_and_selfsimilarity_check(b, ts, cfg.K_big, opts);
  }
  if (cfg.mode == "beta_scan") {
    return beta_alpha_scan(spec0, parse_double_list("alphas", cfg.alphas),
                           parse_int_list("N_list", cfg.N_list), cfg.T,
                           cfg.replicas, opts);
  }
  if (cfg.mode == "sim_vs_solver") {
    return sim_vs_solver_check(spec0, cfg.N, Regime{cfg.alpha, sched}, cfg.T,
                               cfg.replicas, cfg.k_obs, cfg.threshold, opts);
  }
  raise(Errc::ParseError, "unknown experiment '" + cfg.mode + "'");
}

int dispatch(const CliConfig& cfg, const SizeSpectrum& spec0,
             const std::string& cmdline) {
  RunManifest mf;
  mf.tool_version = kToolVersion;
  mf.command_line = cmdline;
  mf.root_seed = cfg.seed;
  mf.started = now_iso();
  std::error_code ec;
  std::filesystem::create_directories(cfg.out, ec);
  if (ec) raise(Errc::IoError, "cannot create output directory " + cfg.out);
  auto emit = [&](const std::string& name, const std::string& bytes) {
    mf.outputs.emplace_back(name, write_file(join_path(cfg.out, name), bytes));
  };

  int code = 0;
  if (cfg.subcommand == "solve") {
    const TransformBundle b = build_bundle(spec0);
    const SolverConfig sc = solver_config_from(cfg);
    Trajectory traj;
    if (cfg.mode == "critical") {
      traj = solve_critical(b, sc);
    } else if (cfg.mode == "subcritical") {
      traj = solve_subcritical(b, sc);
    } else if (cfg.mode == "alternating") {
      traj = solve_alternating(b, parse_double_list("burns", cfg.burns), sc);
    } else {
      traj = solve_random_alternating(b, sc.lambda.values[0], cfg.T, cfg.seed,
                                      sc);
    }
    emit("trajectory.csv", trajectory_to_csv(traj));
    if (cfg.mode == "alternating" || cfg.mode == "random-alternating")
      emit("burns.csv", burns_to_csv(traj));
    const TrajPoint* last = traj.points.empty() ? nullptr : &traj.points.back();
    std::cout << "solve " << cfg.mode << ": " << traj.points.size()
              << " points, " << traj.burns.size() << " burns, final Phi = "
              << (last ? last->Phi : 0.0) << "\n";
  } else if (cfg.subcommand == "simulate") {
    SimConfig sim;
    sim.N = cfg.N;
    sim.regime = Regime{cfg.alpha, LambdaSchedule::parse(cfg.lambda)};
    sim.T = cfg.T;
    sim.k_obs = cfg.k_obs;
    sim.record_events = cfg.record_events;
    sim.debug_rescan = cfg.debug_rescan;
    for (double t = 0.0; t < cfg.T + 1e-12; t += cfg.sample_dt)
      sim.sample_times.push_back(std::min(t, cfg.T));
    if (sim.sample_times.back() < cfg.T - 1e-12)
      sim.sample_times.push_back(cfg.T);
    std::vector<SimOutput> outs(static_cast<std::size_t>(cfg.replicas));
    parallel_for(outs.size(), resolve_jobs(cfg.jobs), [&](std::size_t r) {
      SimConfig c = sim;
      c.seed = cfg.seed ^ (0x9E3779B97F4A7C15ull * (r + 1));
      outs[r] = run_simulation(spec0, c);
    });
    emit("trajectory.csv", sim_to_csv(outs[0]));
    if (cfg.replicas > 1) emit("trajectory_mean.csv", mean_sim_csv(outs));
    std::vector<FrozenHistogram> hists;
    hists.reserve(outs.size());
    for (SimOutput& o : outs) hists.push_back(std::move(o.frozen));
    emit("histogram.csv", histogram_to_csv(hists, cfg.N, cfg.T));
    if (cfg.record_events) emit("events.csv", events_to_csv(outs[0]));
    std::cout << "simulate: " << cfg.replicas << " replica(s), N = " << cfg.N
              << ", final Phi (replica 0) = " << outs[0].final_Phi << "\n";
  } else if (cfg.subcommand == "transform") {
    const TransformBundle b = build_bundle(spec0);
    std::vector<double> g;
    {
      std::stringstream ss(cfg.w_grid);
      std::string tok;
      while (std::getline(ss, tok, ':'))
        g.push_back(parse_double_field("w_grid", trim(tok)));
    }
    std::ostringstream os;
    os.precision(17);
    os << "w,E,F,G\n";
    for (double w = g[0]; w <= g[1] + 1e-12; w += g[2]) {
      const FG fg = eval_F0_G0(b, w);
      os << w << ',' << core_E(b, w) << ',' << fg.F << ',' << fg.G << '\n';
    }
    emit("transform.csv", os.str());
    std::cout << "transform: table on [" << g[0] << ", " << g[1] << "]\n";
  } else {  // experiment
    const ExperimentReport rep = dispatch_experiment(cfg, spec0);
    emit("report.json", report_to_json(rep));
    for (const auto& a : rep.artifacts) emit(a.first, a.second);
    std::cout << "experiment " << rep.name << ": "
              << (rep.pass ? "pass" : "fail")
              << (rep.exploratory ? " (exploratory)" : "") << " in "
              << rep.runtime_seconds << " s\n";
    if (!rep.pass) code = 4;
  }

  mf.finished = now_iso();
  mf.config_echo = cfg.str();
  write_file(join_path(cfg.out, "manifest.json"), mf.to_json());
  return code;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  std::string cmdline = "fpl";
  for (const std::string& a : args) cmdline += " " + a;

  CliConfig cfg;
  SizeSpectrum spec0;
  try {
    // resolve the config file first so explicit flags override its values
    for (std::size_t i = 0; i + 1 < args.size(); ++i)
      if (args[i] == "--config") cfg = load_config(args[i + 1]);

    CLI::App app{"mean-field coagulation with lightning: deterministic "
                 "solvers, exact finite-N simulator, statistical checks"};
    app.require_subcommand(1);
    std::string config_path;
    auto add_common = [&](CLI::App* sub) {
      sub->add_option("--config", config_path, "flat key=value config file");
      sub->add_option("--init", cfg.init, "mono:<mass> or k,v CSV path");
      sub->add_option("--lambda", cfg.lambda, "rate schedule, e.g. 0:1.0,2.5:0.1");
      sub->add_option("--alpha", cfg.alpha, "strike-intensity exponent");
      sub->add_option("--N", cfg.N, "vertex count");
      sub->add_option("--K", cfg.K, "spectrum truncation");
      sub->add_option("--T", cfg.T, "horizon");
      sub->add_option("--grid", cfg.grid, "solver step upper bound");
      sub->add_option("--sample-dt", cfg.sample_dt, "sampling period");
      sub->add_option("--quad-tol", cfg.quad_tol, "quadrature tolerance");
      sub->add_option("--seed", cfg.seed, "root seed");
      sub->add_option("--replicas", cfg.replicas, "replica count");
      sub->add_option("--jobs", cfg.jobs, "worker threads (0: FPL_JOBS/auto)");
      sub->add_option("--out", cfg.out, "output directory");
      sub->add_option("--scheme", cfg.scheme, "rk4 or exp2");
      sub->add_flag("--richardson,!--no-richardson", cfg.richardson,
                    "step-halving consistency check");
      sub->add_option("--burns", cfg.burns, "burn instants, comma list");
      sub->add_option("--k-obs", cfg.k_obs, "small-size observable cut");
      sub->add_flag("--record-events", cfg.record_events, "write events.csv");
      sub->add_flag("--debug-rescan", cfg.debug_rescan,
                    "verify simulator aggregates after every event");
      sub->add_option("--spectrum-times", cfg.spectrum_times,
                      "snapshot instants, comma list");
      sub->add_option("--t", cfg.t_measure, "experiment measure time");
      sub->add_option("--lambdas", cfg.lambdas, "rate list, comma separated");
      sub->add_option("--threshold", cfg.threshold, "verdict threshold");
      sub->add_option("--times", cfg.times, "tail-check times, comma list");
      sub->add_option("--K-big", cfg.K_big, "tail-check truncation");
      sub->add_option("--alphas", cfg.alphas, "scan exponents, comma list");
      sub->add_option("--N-list", cfg.N_list, "scan sizes, comma list");
      sub->add_option("--min-events", cfg.min_events,
                      "pooled-event floor for the rayleigh check");
      sub->add_flag("--sharp,!--no-sharp", cfg.sharpness,
                    "include the sharp construction in extremum");
      sub->add_option("--w-grid", cfg.w_grid, "transform grid lo:hi:step");
    };
    CLI::App* solve = app.add_subcommand("solve", "deterministic equations");
    solve->add_option("regime", cfg.mode,
                      "critical | subcritical | alternating | "
                      "random-alternating");
    CLI::App* simulate =
        app.add_subcommand("simulate", "exact finite-N event simulation");
    CLI::App* transform =
        app.add_subcommand("transform", "initial-data transform tables");
    CLI::App* experiment =
        app.add_subcommand("experiment", "statistical verification runs");
    experiment->add_option("name", cfg.mode,
                           "gamma | rayleigh | extremum | tail | beta_scan | "
                           "sim_vs_solver");
    for (CLI::App* sub : {solve, simulate, transform, experiment})
      add_common(sub);

    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
      app.parse(rev);
    } catch (const CLI::CallForHelp&) {
      std::cout << app.help();
      return 0;
    } catch (const CLI::CallForAllHelp&) {
      std::cout << app.help("", CLI::AppFormatMode::All);
      return 0;
    } catch (const CLI::ParseError& e) {
      std::cerr << e.what() << "\n";
      return 2;
    }
    if (solve->parsed()) cfg.subcommand = "solve";
    if (simulate->parsed()) cfg.subcommand = "simulate";
    if (transform->parsed()) cfg.subcommand = "transform";
    if (experiment->parsed()) cfg.subcommand = "experiment";

    validate_config(cfg);
    spec0 = load_init(cfg.init);
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }

  try {
    return dispatch(cfg, spec0, cmdline);
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return 3;
  }
}

int run_cli(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_cli(args);
}

}  // namespace fpl
