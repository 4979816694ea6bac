#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "sldg/cli.hpp"

using namespace sldg;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("sldg_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int run_args(const std::vector<std::string>& args, std::string* err_text = nullptr) {
  std::vector<const char*> argv{"sldg_vp"};
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int rc = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  if (err_text) *err_text = err.str();
  return rc;
}

std::vector<std::string> read_lines(const fs::path& p) {
  std::ifstream f(p);
  std::vector<std::string> lines;
  for (std::string s; std::getline(f, s);) lines.push_back(s);
  return lines;
}

std::vector<double> split_csv(const std::string& line) {
  std::vector<double> out;
  std::stringstream ss(line);
  for (std::string tok; std::getline(ss, tok, ',');) out.push_back(std::stod(tok));
  return out;
}

}  // namespace

TEST(ParseConfig, ReproductionFlags) {
  const CliOptions o = parse_cli({"--problem", "strong-landau", "--nx", "160", "--nv", "160", "--degree", "2", "--qc",
                                  "--time-order", "3", "--efficient", "--cfl", "10", "--tmax", "40"});
  EXPECT_EQ(o.sim.problem, "strong-landau");
  EXPECT_EQ(o.sim.nx, 160);
  EXPECT_EQ(o.sim.nv, 160);
  EXPECT_EQ(o.sim.degree, 2);
  EXPECT_TRUE(o.sim.qc);
  EXPECT_EQ(o.sim.time_order, 3);
  EXPECT_TRUE(o.sim.efficient);
  EXPECT_EQ(o.sim.cfl, 10.0);
  EXPECT_EQ(o.sim.t_max, 40.0);
  EXPECT_TRUE(o.sim.pp_limiter);
  EXPECT_FALSE(o.sim.reverse_at.has_value());
}

TEST(ParseConfig, FlagsOverrideFile) {
  const fs::path dir = scratch_dir("precedence");
  const fs::path file = dir / "run.cfg";
  std::ofstream(file) << "cfl = 1\nnx = 24\npp-limiter = off\n";
  const CliOptions o = parse_cli({"--config", file.string(), "--cfl", "10"});
  EXPECT_EQ(o.sim.cfl, 10.0);
  EXPECT_EQ(o.sim.nx, 24);
  EXPECT_FALSE(o.sim.pp_limiter);
}

TEST(ParseConfig, ContradictionsAreUsageErrors) {
  EXPECT_THROW(parse_cli({"--qc", "--degree", "1"}), ConfigError);
  EXPECT_THROW(parse_cli({"--time-order", "3", "--degree", "0"}), ConfigError);
  EXPECT_THROW(parse_cli({"--degree", "3"}), CLI::ParseError);
  EXPECT_THROW(parse_cli({"--problem", "nonsense"}), CLI::ParseError);
  EXPECT_THROW(parse_cli({"--study", "spatial", "--meshes", "16"}), ConfigError);
  EXPECT_EQ(run_args({"--qc", "--degree", "1"}), exit_usage);
}

TEST(ParseConfig, UnknownProblemListsValidIds) {
  std::string err;
  EXPECT_EQ(run_args({"--problem", "nonsense"}, &err), exit_usage);
  for (const std::string& id : problem_ids()) EXPECT_NE(err.find(id), std::string::npos) << id;
  EXPECT_THROW(problem_library("nonsense"), UnknownProblemError);
}

TEST(ConfigEcho, RoundTrips) {
  const fs::path dir = scratch_dir("echo");
  std::vector<SimConfig> configs(3);
  configs[1].problem = "bump-on-tail";
  configs[1].nx = 40;
  configs[1].nv = 56;
  configs[1].qc = true;
  configs[1].time_order = 3;
  configs[1].efficient = true;
  configs[1].cfl = 0.1;
  configs[1].t_max = 2.0 / 3.0;
  configs[1].pp_limiter = false;
  configs[1].diag_every = 0.05;
  configs[1].reverse_at = 1.0 / 3.0;
  configs[2].degree = 1;
  configs[2].snapshot_times = {0.0, 0.1, 1.0 / 7.0};
  for (const SimConfig& c : configs) {
    const fs::path file = dir / "echo.cfg";
    std::ofstream(file) << config_echo(c);
    const CliOptions o = parse_cli({"--config", file.string()});
    EXPECT_TRUE(o.sim == c) << config_echo(c) << "---\n" << config_echo(o.sim);
  }
}

TEST(Outputs, DiagnosticsAndSnapshots) {
  const fs::path dir = scratch_dir("outputs");
  ASSERT_EQ(run_args({"--problem", "weak-landau", "--nx", "32", "--nv", "32", "--cfl", "5", "--tmax", "1",
                      "--snapshot-times", "0,0.5", "--out", dir.string()}),
            exit_ok);

  const auto csv = read_lines(dir / "diagnostics.csv");
  ASSERT_GE(csv.size(), 3u);
  EXPECT_EQ(csv[0], diagnostics_header());
  const std::vector<double> row0 = split_csv(csv[1]);
  ASSERT_EQ(row0.size(), 12u);
  EXPECT_EQ(row0[0], 0.0);
  EXPECT_NEAR(row0[1], 0.0501, 1e-4);
  for (int k = 7; k < 12; ++k) EXPECT_EQ(row0[k], 0.0);
  EXPECT_NEAR(split_csv(csv.back())[0], 1.0, 1e-12);

  for (const char* name : {"f_t0.dat", "f_t0.5.dat"}) {
    const auto lines = read_lines(dir / name);
    ASSERT_FALSE(lines.empty()) << name;
    EXPECT_EQ(lines[0][0], '#');
    EXPECT_EQ(lines.size() - 1, 32u * 32u) << name;
  }
  // The first sample is the center of cell (0, 0).
  std::istringstream first(read_lines(dir / "f_t0.dat")[1]);
  double x, v, f;
  first >> x >> v >> f;
  EXPECT_NEAR(x, 2.0 * std::numbers::pi / 32.0, 1e-14);
  EXPECT_NEAR(v, -2.0 * std::numbers::pi + std::numbers::pi / 16.0, 1e-14);
  EXPECT_GT(f, 0.0);

  const auto echo = read_lines(dir / "config.txt");
  EXPECT_FALSE(echo.empty());
}

TEST(Outputs, UnwritableDirectoryFailsBeforeRunning) {
  const fs::path dir = scratch_dir("blocked");
  const fs::path blocker = dir / "file";
  std::ofstream(blocker) << "not a directory\n";
  std::string err;
  EXPECT_EQ(run_args({"--out", (blocker / "sub").string(), "--nx", "8", "--nv", "8"}, &err), exit_usage);
  EXPECT_NE(err.find("output directory"), std::string::npos);
  EXPECT_FALSE(fs::exists(blocker / "sub"));
}

TEST(Outputs, DistortedCellsExitWithBreakdownCode) {
  const fs::path dir = scratch_dir("breakdown");
  std::string err;
  EXPECT_EQ(run_args({"--problem", "strong-landau", "--nx", "16", "--nv", "16", "--qc", "--time-order", "3", "--cfl",
                      "50", "--tmax", "10", "--out", dir.string()},
                     &err),
            exit_breakdown);
  EXPECT_NE(err.find("smaller time step"), std::string::npos);
}

TEST(Outputs, RatesFile) {
  const fs::path dir = scratch_dir("rates");
  ASSERT_EQ(run_args({"--problem", "weak-landau", "--nx", "32", "--nv", "32", "--degree", "2", "--qc", "--time-order",
                      "3", "--efficient", "--cfl", "5", "--tmax", "40", "--diag-every", "0.05", "--fit-rates", "--out",
                      dir.string()}),
            exit_ok);
  const auto lines = read_lines(dir / "rates.txt");
  ASSERT_GE(lines.size(), 2u);
  EXPECT_EQ(lines[0].rfind("gamma1 ", 0), 0u);
  EXPECT_EQ(lines[1].rfind("gamma2 ", 0), 0u);

  // Too short a run to contain sixteen peaks.
  std::string err;
  EXPECT_EQ(run_args({"--nx", "16", "--nv", "16", "--tmax", "2", "--fit-rates", "--out", dir.string()}, &err),
            exit_failure);
  EXPECT_NE(err.find("found"), std::string::npos);
}

TEST(Outputs, IdenticalRunsAreBitwiseIdentical) {
  const fs::path a = scratch_dir("det_a"), b = scratch_dir("det_b");
  const std::vector<std::string> args{"--problem", "two-stream-1", "--nx", "16", "--nv", "16", "--qc", "--time-order",
                                      "3", "--cfl", "3", "--tmax", "1"};
  auto with_out = [&](const fs::path& d) {
    auto v = args;
    v.push_back("--out");
    v.push_back(d.string());
    return v;
  };
  ASSERT_EQ(run_args(with_out(a)), exit_ok);
  ASSERT_EQ(run_args(with_out(b)), exit_ok);
  EXPECT_EQ(read_lines(a / "diagnostics.csv"), read_lines(b / "diagnostics.csv"));
}

TEST(ConvergenceStudy, FreeStreamingSpatialOrders) {
  SimConfig c;
  c.problem = "free-streaming";
  c.degree = 1;
  c.cfl = 3.0;
  c.t_max = 1.0;
  const auto rows = convergence_study(c, problem_library("free-streaming"), StudyMode::spatial, {16, 32, 64});
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_TRUE(std::isnan(rows[0].order_l2));
  for (std::size_t k = 1; k < rows.size(); ++k) {
    EXPECT_LT(rows[k].l2, rows[k - 1].l2);
    EXPECT_GE(rows[k].order_l2, 1.8) << "n = " << rows[k].param;
  }
}

TEST(ConvergenceStudy, TemporalOrdersAgainstSmallCflReference) {
  SimConfig c;
  c.problem = "strong-landau";
  c.nx = c.nv = 16;
  c.degree = 2;
  c.time_order = 2;
  c.t_max = 0.5;
  const auto rows = convergence_study(c, problem_library("strong-landau"), StudyMode::temporal, {4.0, 2.0}, 0.1);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_LT(rows[1].l2, rows[0].l2);
  EXPECT_GT(rows[1].order_l2, 1.5);
}

TEST(ConvergenceStudy, CliWritesTable) {
  const fs::path dir = scratch_dir("study");
  ASSERT_EQ(run_args({"--problem", "free-streaming", "--degree", "1", "--cfl", "3", "--tmax", "1", "--study",
                      "spatial", "--meshes", "16,32", "--out", dir.string()}),
            exit_ok);
  const auto lines = read_lines(dir / "study.txt");
  ASSERT_EQ(lines.size(), 3u);
  EXPECT_EQ(lines[0][0], '#');
}
