#include <gtest/gtest.h>

#include <cstdlib>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cli.hpp"
#include "ergmeter/report.hpp"
#include "test_util.hpp"

using ergmeter::cli::run_cli;
using nlohmann::json;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

const std::string kData = ERGMETER_DATA_DIR;

}  // namespace

TEST(Cli, OpticsCompareJson) {
  const auto r = run({"optics", "compare", "--config", kData + "/optalysys-2018.json", "--pairs",
                      "525", "--grid", "540x450", "--json"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out.rfind("{\"delta_t_s\":1.96875,\"delta_e_j\":129.9375,", 0), 0u) << r.out;
  const auto j = json::parse(r.out);
  EXPECT_EQ(j["packed"], 8);
}

TEST(Cli, RooflineJson) {
  const auto r = run({"roofline", "--params", kData + "/roofline-example.json", "--json"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = json::parse(r.out);
  EXPECT_NEAR(j["b_tau"].get<double>(), 3.6, 1e-9);
  EXPECT_NEAR(j["b_eps"].get<double>(), 14.0, 1e-9);
  EXPECT_NEAR(j["gap"].get<double>(), 3.8889, 1e-4);
  EXPECT_EQ(r.out.find("{\"b_tau\":"), 0u);
}

TEST(Cli, RooflineClassifyAndCurve) {
  const auto r = run({"roofline", "--params", kData + "/roofline-example.json", "--intensity", "10", "--json"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = json::parse(r.out);
  EXPECT_EQ(j["time_bound"], "compute");
  EXPECT_EQ(j["energy_bound"], "memory");
  EXPECT_EQ(j["in_balance_gap"], true);

  const auto c = run({"roofline", "--params", kData + "/roofline-example.json", "--curve", "--points", "5"});
  ASSERT_EQ(c.code, 0) << c.err;
  EXPECT_EQ(c.out.substr(0, c.out.find('\n')), "intensity,perf_flops,efficiency_flops_per_j");

  const auto both = run({"roofline", "--params", kData + "/roofline-example.json", "--curve", "--intensity", "3"});
  EXPECT_EQ(both.code, 1);
}

TEST(Cli, MeasureSyntheticSleep) {
  const auto r = run({"measure", "--backend", "synthetic", "--script",
                      kData + "/constant-300w.json", "--json", "--", "sleep", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = json::parse(r.out);
  EXPECT_GE(j["energy_j"].get<double>(), 570.0);
  EXPECT_LE(j["energy_j"].get<double>(), 630.0);
  EXPECT_EQ(j["exit_status"], 0);
  EXPECT_FALSE(r.err.empty());
}

TEST(Cli, MeasureFailingCommandStillSucceeds) {
  const auto r = run({"measure", "--backend", "synthetic", "--script",
                      kData + "/constant-300w.json", "--json", "--", "sh", "-c", "exit 3"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(json::parse(r.out)["exit_status"], 3);
}

TEST(Cli, MeasureInvalidatedExitsTwo) {
  testutil::TempDir dir;
  testutil::write_file(dir / "s.json", R"({"segments":[{"duration_s":3600,"power_w":100}],
    "startup_events":[0.05,0.5,1.0,1.5,2.0,2.5,3.0,3.5,4.0,4.5,5.0,5.5,6.0],"update_hz":10})");
  const auto r = run({"measure", "--backend", "synthetic", "--script", (dir / "s.json").string(),
                      "--retries", "1", "--", "sleep", "0.7"});
  EXPECT_EQ(r.code, ergmeter::cli::kExitInvalidated) << r.err;
  EXPECT_NE(r.err.find("StartupChanged"), std::string::npos) << r.err;
}

TEST(Cli, MeasurePmDirFromConfigFile) {
  testutil::TempDir dir;
  std::filesystem::create_directories(dir / "node0");
  testutil::write_file(dir / "node0" / "energy", "1000\n");
  testutil::write_file(dir / "node0" / "startup", "5\n");
  testutil::write_file(dir / "cfg.json", json{{"backend", {{"kind", "pm-dir"},
                                                           {"paths", {(dir / "node0").string()}}}},
                                              {"min_duration_warn_s", 0.0}}
                                             .dump());
  const auto r = run({"--config", (dir / "cfg.json").string(), "measure", "--json", "--", "true"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = json::parse(r.out);
  EXPECT_EQ(j["energy_j"], 0.0);
  EXPECT_TRUE(j["warnings"].empty());

  setenv("ERGMETER_CONFIG", (dir / "cfg.json").string().c_str(), 1);
  const auto env = run({"measure", "--json", "--", "true"});
  unsetenv("ERGMETER_CONFIG");
  EXPECT_EQ(env.code, 0) << env.err;
}

TEST(Cli, MissingBackendPathIsError) {
  const auto r = run({"measure", "--backend", "pm-dir", "--", "true"});
  EXPECT_EQ(r.code, 1);
}

TEST(Cli, UsageErrorsPrintSynopsis) {
  auto r = run({});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("Usage"), std::string::npos);
  EXPECT_TRUE(r.out.empty());
  r = run({"optics", "compare"});
  EXPECT_EQ(r.code, 1);
  r = run({"report", "--format", "png", "-o", "x", kData + "/roofline-example.json"});
  EXPECT_EQ(r.code, 1);
  r = run({"--help"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("measure"), std::string::npos);
}

TEST(Cli, StudyAnalyzeJsonIsDeterministic) {
  const std::vector<std::string> args = {"study", "analyze", kData + "/sample-study.csv",
                                         "--idle-power", "95", "--json"};
  const auto a = run(args);
  const auto b = run(args);
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
  const auto j = json::parse(a.out);
  EXPECT_EQ(j["energy_minimum"]["label"], "36x1");
  EXPECT_TRUE(j["time_model"].is_object());
  EXPECT_TRUE(j["power_summary"].is_object());
  EXPECT_EQ(a.out.find('\n'), a.out.size() - 1);
}

TEST(Cli, StudyPlotThenReport) {
  testutil::TempDir dir;
  const auto plot = dir / "plot.json";
  auto r = run({"study", "plot", kData + "/sample-study.csv", "--idle-power", "95",
                "--iso-power", "300,1000", "--optics-point", "1.96875,129.9375", "-o",
                plot.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto spec = ergmeter::report::load_plot(plot);
  EXPECT_EQ(spec.overlays.size(), 4u);

  for (const std::string fmt : {"svg", "csv", "json"}) {
    const auto out = dir / ("out." + fmt);
    r = run({"report", plot.string(), "--format", fmt, "-o", out.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(std::filesystem::exists(out));
  }
  EXPECT_EQ(testutil::read_file(dir / "out.json"), testutil::read_file(plot));
}

TEST(Cli, AttributeOutputs) {
  testutil::TempDir dir;
  const auto r = run({"attribute", kData + "/attribution-example.json", "--pie-csv",
                      (dir / "pie.csv").string(), "--plot-out", (dir / "pie.json").string(),
                      "--json"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = json::parse(r.out);
  EXPECT_NEAR(j["remainder_j"].get<double>(), 19100.0, 1e-6);
  EXPECT_EQ(testutil::read_file(dir / "pie.csv").substr(0, 14), "name,fraction\n");
  EXPECT_EQ(ergmeter::report::load_plot(dir / "pie.json").kind, ergmeter::report::PlotKind::pie);
}

TEST(Cli, OpticsOpsTable) {
  const auto r = run({"optics", "ops", "--config", kData + "/optalysys-2018.json", "--json"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = json::parse(r.out);
  ASSERT_EQ(j.size(), 4u);
  EXPECT_EQ(j[0]["op"], "c2r_ft");
  EXPECT_EQ(j[0]["energy_mj"], 660.0);
  EXPECT_NEAR(j[3]["digital_equivalent"]["per_op_time_ms"].get<double>(), 0.105, 1e-12);
}

TEST(Cli, BadInputFiles) {
  testutil::TempDir dir;
  testutil::write_file(dir / "bad.json", "{not json");
  const auto r = run({"roofline", "--params", (dir / "bad.json").string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("ParseError"), std::string::npos) << r.err;
}
