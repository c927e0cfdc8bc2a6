#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <sys/wait.h>
#include <unistd.h>

#include <gtest/gtest.h>

#include "vlab/config.hpp"

using namespace vlab;
namespace fs = std::filesystem;

namespace {

fs::path scratch() {
  static const fs::path dir = [] {
    fs::path p = fs::temp_directory_path() / ("vlab_cli_test_" + std::to_string(::getpid()));
    fs::create_directories(p);
    return p;
  }();
  return dir;
}

fs::path write_file(const std::string& name, const std::string& text) {
  const fs::path p = scratch() / name;
  std::ofstream(p) << text;
  return p;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(VLAB_CLI_PATH) + " " + args + " > " + (scratch() / "stdout.txt").string() +
                          " 2> " + (scratch() / "stderr.txt").string();
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Config, ParsesMinimalDocument) {
  const RunConfig c = parse_config(json::parse(R"({"experiment": "x"})"));
  EXPECT_EQ(c.experiment, "x");
  EXPECT_EQ(c.dimension, 4);
  EXPECT_EQ(c.mode, Symmetrization::identical_bosons);
  EXPECT_TRUE(c.coupling.relative);
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
  EXPECT_THROW(parse_config(json::parse(R"({"experiment": "x", "dimensions": 4})")), validation_error);
  EXPECT_THROW(parse_config(json::parse(R"({"experiment": "x", "grids": {"p_mx": 3}})")), validation_error);
  EXPECT_THROW(parse_config(json::parse(R"({"dimension": 4})")), validation_error);
  EXPECT_THROW(parse_config(json::parse(R"({"experiment": "x", "dimension": "four"})")), validation_error);
  EXPECT_THROW(parse_config(json::parse(R"({"experiment": "x", "potential": {"range": -1}})")), validation_error);
  EXPECT_THROW(parse_config(json::parse(R"({"experiment": "x", "masses": [1, 2]})")), validation_error);
  EXPECT_THROW(parse_config(json::parse(R"({"experiment": "x", "symmetrization": "fermions"})")), validation_error);
  EXPECT_THROW(parse_config(json::parse(R"({"experiment": "x", "z_schedule": [-1, 0.5]})")), validation_error);
  EXPECT_THROW(parse_config(json::parse(R"({"experiment": "x", "channel": {"ell": 0, "sector": "antisymmetric"}})"))
                   .channel(),
               validation_error);
}

TEST(Config, GeometricSchedule) {
  const RunConfig c =
      parse_config(json::parse(R"({"experiment": "x", "z_schedule": {"from": -1e-2, "to": -1e-8, "points": 7}})"));
  ASSERT_EQ(c.schedule.values.size(), 7u);
  EXPECT_EQ(c.schedule.values.front(), -1e-2);
  EXPECT_EQ(c.schedule.values.back(), -1e-8);
  EXPECT_NEAR(c.schedule.values[3], -1e-5, 1e-18);
}

TEST(Config, EmptyFileIsRejected) {
  EXPECT_THROW(load_config(write_file("empty.json", "").string()), validation_error);
  EXPECT_THROW(load_config(write_file("broken.json", "{\"experiment\": ").string()), validation_error);
  EXPECT_THROW(load_config((scratch() / "missing.json").string()), validation_error);
}

TEST(Config, ShippedConfigsParse) {
  int n = 0;
  for (const auto& e : fs::directory_iterator(VLAB_CONFIG_DIR)) {
    if (e.path().extension() != ".json") continue;
    EXPECT_NO_THROW(load_config(e.path().string())) << e.path();
    ++n;
  }
  EXPECT_GE(n, 9);
}

TEST(Cli, JacobiCheckSucceedsAndWritesArtifacts) {
  const fs::path out = scratch() / "jacobi";
  ASSERT_EQ(run_cli("jacobi-check --config " + std::string(VLAB_CONFIG_DIR) + "/jacobi.json --out " + out.string()), 0);
  EXPECT_TRUE(fs::exists(out / "jacobi_coefficients.csv"));
  EXPECT_TRUE(fs::exists(out / "manifest.json"));
  std::ifstream in(out / "jacobi_check.json");
  const json j = json::parse(in);
  EXPECT_LT(j.at("max_relative_deviation").get<double>(), 1e-12);
}

TEST(Cli, CriticalCouplingSucceeds) {
  const fs::path out = scratch() / "critical";
  ASSERT_EQ(
      run_cli("critical-coupling --config " + std::string(VLAB_CONFIG_DIR) + "/critical_coupling.json --out " + out.string()),
      0);
  std::ifstream in(out / "critical_coupling.json");
  const json j = json::parse(in);
  EXPECT_FALSE(j.at("bound_below").get<bool>());
  EXPECT_TRUE(j.at("bound_above").get<bool>());
}

TEST(Cli, ValidationErrorsExitTwo) {
  const fs::path bad = write_file("unknown.json", R"({"experiment": "x", "colour": "red"})");
  EXPECT_EQ(run_cli("critical-coupling --config " + bad.string() + " --out " + (scratch() / "o1").string()), 2);
  const fs::path empty = write_file("empty2.json", "   \n");
  EXPECT_EQ(run_cli("critical-coupling --config " + empty.string()), 2);
  EXPECT_EQ(run_cli("critical-coupling"), 2);
  EXPECT_EQ(run_cli("no-such-command"), 2);
  EXPECT_EQ(run_cli(""), 2);
  const fs::path ok = write_file("tau3.json", R"({"experiment": "x", "dimension": 3})");
  EXPECT_EQ(run_cli("tau --config " + ok.string() + " --out " + (scratch() / "o2").string()), 2);
}

TEST(Cli, HelpExitsZero) { EXPECT_EQ(run_cli("--help"), 0); }

TEST(Cli, NumericalFailureExitsThree) {
  // A bound pair at about -0.8 makes I - BS singular for z = -1e-3.
  const fs::path cfg = write_file("bound.json", R"({
    "experiment": "above-threshold",
    "dimension": 4,
    "coupling": {"mode": "critical-multiple", "value": 1.5},
    "grids": {"x_panels": 1, "x_order": 8, "p_min": 1e-2, "p_max": 5, "p_order": 4, "angular_order": 8},
    "z_schedule": [-1e-3]
  })");
  EXPECT_EQ(run_cli("faddeev-count --config " + cfg.string() + " --out " + (scratch() / "o3").string()), 3);
}
