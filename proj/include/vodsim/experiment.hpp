#pragma once

// Experiment plans: a base config plus sweep axes and strategies, expanded
// into a cross product and written out as CSV rows and a JSON summary.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "vodsim/core.hpp"

namespace vodsim {

struct SweepAxis {
  std::string key;  // a config key
  std::vector<std::string> values;
};

/// Plan document keys: any config key (base values), `sweep.<config key>`
/// (comma-separated list; `;` for popularity and classes), `strategies`, `name`, `output_dir`, `format`,
/// `per_content` (number of top contents to report individually).
/// Strategies are simulator strategies (UNIF, SAMP, BERN, CU, HWC, MP2P) or
/// analytic rows: `Optimal` (DSN: (1-1/rho)^+; PP2PN: the water-filling
/// absorbed fraction) and `Floor` (class catalogues: the Erlang floor).
struct ExperimentPlan {
  std::string name = "plan";
  std::map<std::string, std::string> base;
  std::vector<SweepAxis> sweeps;
  std::vector<std::string> strategies;
  std::string output_dir = ".";
  std::string format = "csv";
  std::size_t per_content = 0;

  std::size_t point_count() const;
  std::size_t run_count() const { return point_count() * strategies.size(); }
};

ExperimentPlan parse_plan(std::istream& in);

/// Built-in recipes fig2 .. fig6 at the reference defaults; `scale` multiplies every
/// box count.
ExperimentPlan recipe(const std::string& name, double scale = 1.0);
std::vector<std::string> recipe_names();

struct SweepPoint {
  std::map<std::string, std::string> overrides;
  SystemConfig config;
};

/// Cross product of the sweep axes (first axis varies slowest). Every point
/// is validated before anything runs.
std::vector<SweepPoint> expand(const ExperimentPlan& plan);

struct ResultRow {
  std::string strategy;
  std::size_t box_count = 0;
  std::string catalogue;
  std::size_t storage = 0;
  std::size_t slots = 0;
  double load = 0.0;
  std::string alpha;
  std::string t_r_max;
  std::uint64_t seed = 0;
  std::string metric;
  double mean = 0.0;
  double stdev = 0.0;
};

std::string csv_header();
std::string csv_line(const ResultRow& row);

/// Rows for one (point, strategy): one per statistic, plus per-content loss
/// rows when requested.
std::vector<ResultRow> evaluate(const SweepPoint& point, const std::string& strategy,
                                std::size_t per_content, std::size_t jobs);

struct RunSettings {
  std::size_t jobs = 1;
  std::string output_dir;     // overrides plan.output_dir when non-empty
  std::string format;         // overrides plan.format when non-empty
  std::ostream* log = nullptr;
};

struct PlanOutput {
  std::vector<ResultRow> rows;
  std::string csv_path;   // empty when not written
  std::string json_path;
};

/// Runs every (point, strategy) pair. CSV rows are flushed as they complete,
/// so a failure keeps the finished rows; the error is rethrown after the
/// JSON summary records it.
PlanOutput execute_plan(const ExperimentPlan& plan, const RunSettings& settings);

}  // namespace vodsim
