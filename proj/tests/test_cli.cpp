#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "fpl/cli_io.hpp"
#include "json.hpp"

using namespace fpl;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& tag) {
  const fs::path p = fs::temp_directory_path() / ("fpl_cli_" + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

TEST_CASE("fnv1a64: canonical vectors and hex rendering") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ull);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cull);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ull);
  CHECK(hex64(0) == "0000000000000000");
  CHECK(hex64(0xdeadbeefull) == "00000000deadbeef");
}

TEST_CASE("flat config round trip is lossless") {
  CliConfig cfg;
  cfg.subcommand = "experiment";
  cfg.mode = "gamma";
  cfg.init = "mono:0.75";
  cfg.lambda = "0:1.0,2.5:0.1";
  cfg.alpha = 1.0 / 3.0;
  cfg.N = 123457;
  cfg.T = 0.1;  // not exactly representable; must survive the trip
  cfg.grid = 2e-3;
  cfg.seed = 0xdeadbeefcafeull;
  cfg.richardson = false;
  cfg.burns = "0.5,1.25";
  cfg.out = "/tmp/some where/with spaces";
  cfg.lambdas = "0.1,0.01";
  CliConfig back;
  apply_flat_config(back, cfg.str(), "mem");
  CHECK(back.str() == cfg.str());
  CHECK(back.alpha == cfg.alpha);
  CHECK(back.T == cfg.T);
  CHECK(back.seed == cfg.seed);
  CHECK(back.out == cfg.out);
}

TEST_CASE("flat config rejects unknown keys and bad values with location") {
  CliConfig cfg;
  bool threw = false;
  try {
    apply_flat_config(cfg, "T = 1.0\nbogus_key = 3\n", "test.cfg");
  } catch (const Error& e) {
    threw = true;
    const std::string what = e.what();
    CHECK(what.find("test.cfg:2") != std::string::npos);
    CHECK(what.find("bogus_key") != std::string::npos);
  }
  CHECK(threw);
  CHECK_THROWS_AS(apply_flat_config(cfg, "T = soon\n", "m"), Error);
  CHECK_THROWS_AS(apply_flat_config(cfg, "just a line\n", "m"), Error);
  // comments and blanks are fine
  apply_flat_config(cfg, "# comment\n\nT = 2.0 # trailing\n", "m");
  CHECK(cfg.T == 2.0);
}

TEST_CASE("validation names the offending field") {
  CliConfig cfg;
  cfg.subcommand = "simulate";
  cfg.N = -5;
  bool threw = false;
  try {
    validate_config(cfg);
  } catch (const Error& e) {
    threw = true;
    CHECK(std::string(e.what()).find("N") != std::string::npos);
  }
  CHECK(threw);

  cfg = CliConfig{};
  cfg.subcommand = "solve";
  cfg.mode = "subcritical";
  cfg.lambda = "0";
  bool lam = false;
  try {
    validate_config(cfg);
  } catch (const Error& e) {
    lam = true;
    CHECK(std::string(e.what()).find("lambda") != std::string::npos);
  }
  CHECK(lam);
}

TEST_CASE("exit code 2: configuration-phase failures") {
  CHECK(run_cli(std::vector<std::string>{}) == 2);
  CHECK(run_cli({"solve"}) == 2);  // no regime given
  CHECK(run_cli({"solve", "nonsense"}) == 2);
  CHECK(run_cli({"solve", "subcritical", "--lambda", "0"}) == 2);
  CHECK(run_cli({"solve", "critical", "--N", "-5"}) == 2);
  CHECK(run_cli({"solve", "critical", "--unknown-flag"}) == 2);
  CHECK(run_cli({"solve", "critical", "--init", "/nonexistent_fpl.csv"}) == 2);
  CHECK(run_cli({"experiment", "unheard_of"}) == 2);
}

TEST_CASE("solve critical: outputs, checksums, golden shape") {
  const fs::path dir = fresh_dir("solve");
  const int rc = run_cli({"solve", "critical", "--K", "8", "--T", "1.2",
                          "--sample-dt", "0.2", "--spectrum-times", "1.0",
                          "--out", dir.string()});
  CHECK(rc == 0);
  const std::string traj = slurp(dir / "trajectory.csv");
  CHECK(traj.rfind("t,side,series,k,value\n", 0) == 0);
  CHECK(traj.find(",m0,,") != std::string::npos);
  CHECK(traj.find(",v,1,") != std::string::npos);  // snapshot at t=1.0
  CHECK(traj.find(",w,8,") != std::string::npos);

  const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
  CHECK(manifest["tool_version"] == "fpl 1.0.0");
  CHECK(manifest["config"]["T"] == "1.2");
  bool traj_listed = false;
  for (const auto& o : manifest["outputs"]) {
    const std::string name = o["file"];
    const std::string sum = o["fnv1a64"];
    CHECK(hex64(fnv1a64(slurp(dir / name))) == sum);  // checksums verify
    traj_listed = traj_listed || name == "trajectory.csv";
  }
  CHECK(traj_listed);

  // byte-identical rerun: same seed, same grid, same files
  const fs::path dir2 = fresh_dir("solve_again");
  run_cli({"solve", "critical", "--K", "8", "--T", "1.2", "--sample-dt",
           "0.2", "--spectrum-times", "1.0", "--out", dir2.string()});
  CHECK(slurp(dir2 / "trajectory.csv") == traj);
}

TEST_CASE("config file merging: explicit flags win") {
  const fs::path dir = fresh_dir("merge");
  const fs::path cfgfile = dir / "run.cfg";
  {
    std::ofstream out(cfgfile);
    out << "T = 2.5\nK = 0\n";
  }
  int rc = run_cli({"solve", "critical", "--config", cfgfile.string(),
                    "--T", "1.5", "--out", (dir / "a").string()});
  CHECK(rc == 0);
  auto m1 = nlohmann::json::parse(slurp(dir / "a" / "manifest.json"));
  CHECK(m1["config"]["T"] == "1.5");  // flag overrides file
  CHECK(m1["config"]["K"] == "0");    // file overrides default

  rc = run_cli({"solve", "critical", "--config", cfgfile.string(), "--out",
                (dir / "b").string()});
  CHECK(rc == 0);
  auto m2 = nlohmann::json::parse(slurp(dir / "b" / "manifest.json"));
  CHECK(m2["config"]["T"] == "2.5");
}

TEST_CASE("simulate: replica outputs and the pooled histogram") {
  const fs::path dir = fresh_dir("simulate");
  const int rc = run_cli({"simulate", "--N", "300", "--alpha", "0.5",
                          "--lambda", "1", "--T", "1", "--sample-dt", "0.5",
                          "--replicas", "2", "--k-obs", "3",
                          "--record-events", "--out", dir.string()});
  CHECK(rc == 0);
  CHECK(fs::exists(dir / "trajectory.csv"));
  CHECK(fs::exists(dir / "trajectory_mean.csv"));
  CHECK(fs::exists(dir / "histogram.csv"));
  CHECK(fs::exists(dir / "events.csv"));
  const std::string events = slurp(dir / "events.csv");
  CHECK(events.rfind("t,type,size\n", 0) == 0);
  CHECK(events.find(",merge,") != std::string::npos);
  const std::string hist = slurp(dir / "histogram.csv");
  CHECK(hist.rfind("t_bin,k_bin,mass\n", 0) == 0);
}

TEST_CASE("transform: table of the initial-data functions") {
  const fs::path dir = fresh_dir("transform");
  const int rc = run_cli({"transform", "--init", "mono:1.0", "--w-grid",
                          "1.0:2.0:0.5", "--out", dir.string()});
  CHECK(rc == 0);
  const std::string table = slurp(dir / "transform.csv");
  CHECK(table.rfind("w,E,F,G\n", 0) == 0);
  // last row: E(2) = 1/4, F(2) = 1/2, G(2) = 1 - ln 2 for the mono start
  const std::size_t row = table.find("\n2,");
  REQUIRE(row != std::string::npos);
  double Ev = 0.0, Fv = 0.0, Gv = 0.0;
  REQUIRE(std::sscanf(table.c_str() + row, "\n2,%lf,%lf,%lf", &Ev, &Fv,
                      &Gv) == 3);
  CHECK(Ev == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(Fv == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(Gv == doctest::Approx(1.0 - std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("exit code 3: a numeric failure inside a well-formed run") {
  const fs::path dir = fresh_dir("exit3");
  const int rc = run_cli({"experiment", "rayleigh", "--lambda", "50", "--t",
                          "2", "--replicas", "2", "--min-events", "100000",
                          "--out", dir.string()});
  CHECK(rc == 3);
}

TEST_CASE("exit code 4: experiment that runs but fails its verdict") {
  const fs::path dir = fresh_dir("exit4");
  const int rc = run_cli({"experiment", "sim_vs_solver", "--N", "1000",
                          "--alpha", "0.5", "--lambda", "1", "--T", "1",
                          "--replicas", "2", "--k-obs", "5", "--threshold",
                          "1e-9", "--out", dir.string()});
  CHECK(rc == 4);
  const auto report = nlohmann::json::parse(slurp(dir / "report.json"));
  CHECK(report["verdict"] == "fail");
  CHECK(report["name"] == "sim_vs_solver");
  CHECK(fs::exists(dir / "manifest.json"));
}

TEST_CASE("experiment pass: report and artifacts are written") {
  const fs::path dir = fresh_dir("exp_pass");
  const int rc = run_cli({"experiment", "extremum", "--T", "2", "--replicas",
                          "3", "--no-sharp", "--out", dir.string()});
  CHECK(rc == 0);
  const auto report = nlohmann::json::parse(slurp(dir / "report.json"));
  CHECK(report["verdict"] == "pass");
  CHECK(report["stats"]["crit_dev"].get<double>() <= 1e-8);
  for (const auto& f : report["artifact_files"]) {
    CHECK(fs::exists(dir / f.get<std::string>()));
  }
}

TEST_CASE("histogram serialization: synthetic golden") {
  FrozenHistogram h;
  h.events = {{0.1, 2}, {0.1, 2}, {3.9, 20000}};
  const std::string csv = histogram_to_csv({h}, 100, 4.0, 4);
  // two events of size 2 in the first quarter, one deep bin above 1e4
  std::istringstream is(csv);
  std::string line;
  std::getline(is, line);
  CHECK(line == "t_bin,k_bin,mass");
  std::getline(is, line);
  CHECK(line.rfind("1,2,0.04", 0) == 0);  // mass 4/(100*1)
  std::getline(is, line);
  CHECK(line.rfind("4,", 0) == 0);
  CHECK(line.find(",20000,") == std::string::npos);  // geometric bin label
}
