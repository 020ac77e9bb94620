#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "vodsim/config_io.hpp"
#include "vodsim/experiment.hpp"

using namespace vodsim;

namespace {

ExperimentPlan plan_from(const std::string& text) {
  std::istringstream in(text);
  return parse_plan(in);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("vodsim_test_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

const char* kSmallPlan =
    "name = small\n"
    "box_count = 60\n"
    "content_count = 20\n"
    "storage_per_box = 4\n"
    "repetitions = 2\n"
    "horizon = 4\n"
    "sweep.load = 0.5, 1.5\n"
    "sweep.storage_per_box_unused = 1\n";

}  // namespace

TEST(Plan, ParsesKeysAndSweepsInOrder) {
  auto plan = plan_from(
      "name = demo\n"
      "box_count = 100\n"
      "sweep.load = 0.5, 1\n"
      "sweep.zipf_alpha = 0.2, 0.5, 0.8\n"
      "strategies = UNIF, SAMP, Optimal\n"
      "per_content = 3\n"
      "format = json\n");
  EXPECT_EQ(plan.name, "demo");
  EXPECT_EQ(plan.base.at("box_count"), "100");
  ASSERT_EQ(plan.sweeps.size(), 2u);
  EXPECT_EQ(plan.sweeps[0].key, "load");
  EXPECT_EQ(plan.sweeps[1].values.size(), 3u);
  EXPECT_EQ(plan.point_count(), 6u);
  EXPECT_EQ(plan.run_count(), 18u);
  EXPECT_EQ(plan.per_content, 3u);
  EXPECT_EQ(plan.format, "json");
}

TEST(Plan, ErrorsNameTheLine) {
  try {
    plan_from("name = x\n\nbogus = 1\n");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
  EXPECT_THROW(plan_from("sweep.nope = 1\n"), ConfigError);
  EXPECT_THROW(plan_from("strategies = UNIF, BOGUS\n"), ConfigError);
  EXPECT_THROW(plan_from("format = xml\n"), ConfigError);
  EXPECT_THROW(plan_from("per_content = -1\n"), ConfigError);
  EXPECT_THROW(plan_from("load = 1\nsweep.load = 1, 2\n"), ConfigError);
  EXPECT_THROW(plan_from(kSmallPlan), ConfigError);
}

TEST(Plan, ClassSweepsUseSemicolons) {
  auto plan = plan_from("catalogue_spec = classes\nsweep.classes = 0.2:8,0.8:2; 0.5:4,0.5:4\n");
  ASSERT_EQ(plan.sweeps[0].values.size(), 2u);
  EXPECT_EQ(plan.sweeps[0].values[0], "0.2:8,0.8:2");
}

TEST(Expand, CrossProductWithLastAxisFastest) {
  auto plan = plan_from(
      "box_count = 50\ncontent_count = 20\n"
      "sweep.load = 0.5, 1\nsweep.storage_per_box = 2, 3, 4\n");
  auto points = expand(plan);
  ASSERT_EQ(points.size(), 6u);
  EXPECT_EQ(points[0].config.load, 0.5);
  EXPECT_EQ(points[0].config.storage_per_box, 2u);
  EXPECT_EQ(points[1].config.storage_per_box, 3u);
  EXPECT_EQ(points[3].config.load, 1.0);
  EXPECT_EQ(points[5].overrides.at("storage_per_box"), "4");
}

TEST(Expand, NoAxesIsOnePointAndEmptyAxisIsNone) {
  EXPECT_EQ(expand(plan_from("box_count = 10\n")).size(), 1u);
  auto empty = plan_from("sweep.load =\n");
  EXPECT_EQ(empty.point_count(), 0u);
  EXPECT_TRUE(expand(empty).empty());
}

TEST(Expand, InvalidPointNamesTheOverride) {
  auto plan = plan_from("sweep.load = 1, -2\n");
  try {
    expand(plan);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("load=-2"), std::string::npos) << e.what();
  }
}

TEST(Recipe, ReferenceDefaultsAndScale) {
  auto fig2 = recipe("fig2");
  EXPECT_EQ(fig2.base.at("box_count"), "4000");
  EXPECT_EQ(fig2.base.at("content_count"), "500");
  EXPECT_EQ(fig2.sweeps[0].values.size(), 7u);
  EXPECT_EQ(fig2.run_count(), 28u);
  auto points = expand(fig2);
  EXPECT_EQ(points[0].config.repetitions, 10u);
  EXPECT_EQ(points[0].config.horizon, 10.0);
  EXPECT_DOUBLE_EQ(points[0].config.warmup_fraction, 0.2);

  auto fig5 = recipe("fig5", 0.1);
  EXPECT_EQ(fig5.sweeps[0].key, "box_count");
  EXPECT_EQ(fig5.sweeps[0].values, (std::vector<std::string>{"100", "200", "400", "800"}));
  EXPECT_EQ(recipe("fig6").per_content, 500u);
  EXPECT_EQ(recipe("fig4").point_count(), 12u);
  for (const auto& name : recipe_names()) EXPECT_NO_THROW(expand(recipe(name, 0.05)));
  EXPECT_THROW(recipe("fig9"), ConfigError);
  EXPECT_THROW(recipe("fig2", 0.0), ConfigError);
}

TEST(Csv, FormatsRowsExactly) {
  ResultRow row{"SAMP", 4000, "C=500", 10, 4, 1.25, "0.8", "unlimited", 7, "system_loss",
                0.1, 0.0};
  EXPECT_EQ(csv_line(row), "SAMP,4000,C=500,10,4,1.25,0.8,unlimited,7,system_loss,0.1,0");
  EXPECT_EQ(csv_header(), "strategy,B,catalogue,M,U,rho,alpha,t_r_max,seed,metric,mean,stdev");
}

TEST(Evaluate, AnalyticRows) {
  auto points = expand(plan_from("load = 2\n"));
  auto rows = evaluate(points[0], "Optimal", 0, 1);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].metric, "system_loss");
  EXPECT_DOUBLE_EQ(rows[0].mean, 0.5);

  auto pp2pn = expand(plan_from(
      "network_mode = pp2pn\npopularity = 0.4,0.3,0.2,0.1\nstorage_per_box = 2\nload = 10\n"));
  rows = evaluate(pp2pn[0], "Optimal", 0, 1);
  EXPECT_EQ(rows[0].metric, "absorbed_fraction");
  EXPECT_NEAR(rows[0].mean, 0.775, 1e-12);
  EXPECT_EQ(rows[0].alpha, "custom");

  auto classes = expand(plan_from(
      "catalogue_spec = classes\nclasses = 0.2:8,0.8:2\nload = 0.8\nbox_count = 100\n"
      "storage_per_box = 4\nacceptance_policy = counter\n"));
  rows = evaluate(classes[0], "Floor", 0, 1);
  EXPECT_EQ(rows[0].catalogue, "classes=0.2:8;0.8:2");
  EXPECT_EQ(rows[0].t_r_max, "counter");
  EXPECT_GE(rows[0].mean, 0.0);
  EXPECT_THROW(evaluate(points[0], "Floor", 0, 1), ConfigError);
}

TEST(Evaluate, SimulatedRowsIncludePerContent) {
  auto points = expand(plan_from(
      "box_count = 40\ncontent_count = 10\nstorage_per_box = 3\nrepetitions = 3\nhorizon = 3\n"
      "t_r_max = 1\n"));
  auto rows = evaluate(points[0], "SAMP", 4, 1);
  ASSERT_EQ(rows.size(), 5u + 4u);
  EXPECT_EQ(rows[0].metric, "system_loss");
  EXPECT_EQ(rows[5].metric, "content_loss:0");
  EXPECT_EQ(rows[8].metric, "content_loss:3");
  EXPECT_EQ(rows[0].t_r_max, "1");
  for (const auto& r : rows) {
    EXPECT_GE(r.mean, 0.0);
    EXPECT_LE(r.mean, 1.0);
  }
}

TEST(ExecutePlan, ByteIdenticalAcrossRunsAndJobCounts) {
  const std::string text =
      "name = rerun\nbox_count = 60\ncontent_count = 20\nstorage_per_box = 4\n"
      "repetitions = 3\nhorizon = 4\nsweep.load = 0.5, 1.5\nstrategies = UNIF, CU, Optimal\n"
      "per_content = 2\n";
  auto a = scratch("a");
  auto b = scratch("b");
  std::ostringstream log;
  RunSettings first{1, a.string(), "", &log};
  RunSettings second{3, b.string(), "", nullptr};
  auto out_a = execute_plan(plan_from(text), first);
  auto out_b = execute_plan(plan_from(text), second);
  EXPECT_EQ(read_file(out_a.csv_path), read_file(out_b.csv_path));
  EXPECT_NE(log.str().find("2 point(s) x 3 strategie(s) = 6 run(s)"), std::string::npos);
  // 2 points x (2 simulated x (5 + 2) + 1 analytic) rows, plus the header.
  auto csv = read_file(out_a.csv_path);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 2 * (2 * 7 + 1));
  auto json = read_file(out_a.json_path);
  EXPECT_NE(json.find("\"status\": \"complete\""), std::string::npos);
  EXPECT_NE(json.find("\"generated_at\""), std::string::npos);
  EXPECT_NE(json.find("\"cache_update\": \"none\""), std::string::npos);
  std::filesystem::remove_all(a);
  std::filesystem::remove_all(b);
}

TEST(ExecutePlan, EmptySweepWritesHeaderOnly) {
  auto dir = scratch("empty");
  auto out = execute_plan(plan_from("name = e\nsweep.load =\nstrategies = SAMP\n"),
                          RunSettings{1, dir.string(), "", nullptr});
  EXPECT_TRUE(out.rows.empty());
  EXPECT_EQ(read_file(out.csv_path), csv_header() + "\n");
  std::filesystem::remove_all(dir);
}

TEST(ExecutePlan, FailureKeepsCompletedRows) {
  // Floor needs a class catalogue; it fails after UNIF finished.
  auto dir = scratch("fail");
  auto plan = plan_from(
      "name = f\nbox_count = 30\ncontent_count = 10\nstorage_per_box = 2\nrepetitions = 1\n"
      "horizon = 2\nstrategies = UNIF, Floor\n");
  EXPECT_THROW(execute_plan(plan, RunSettings{1, dir.string(), "", nullptr}), ConfigError);
  auto csv = read_file((dir / "f.csv").string());
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 5);
  auto json = read_file((dir / "f.json").string());
  EXPECT_NE(json.find("\"status\": \"failed\""), std::string::npos);
  std::filesystem::remove_all(dir);
}

TEST(ExecutePlan, JsonFormatSkipsCsv) {
  auto dir = scratch("json");
  auto out = execute_plan(plan_from("name = j\nstrategies = Optimal\n"),
                          RunSettings{1, dir.string(), "json", nullptr});
  EXPECT_TRUE(out.csv_path.empty());
  EXPECT_FALSE(std::filesystem::exists(dir / "j.csv"));
  EXPECT_NE(read_file(out.json_path).find("\"rows\""), std::string::npos);
  std::filesystem::remove_all(dir);
}
