#include "vodsim/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <istream>
#include <nlohmann/json.hpp>
#include <ostream>
#include <sstream>

#include "vodsim/analysis.hpp"
#include "vodsim/config_io.hpp"
#include "vodsim/engine.hpp"

namespace vodsim {

namespace {

const std::vector<std::string> kPlanKeys{"name", "strategies", "output_dir", "format",
                                         "per_content"};

bool is_config_key(const std::string& key) {
  const auto& keys = config_keys();
  return std::find(keys.begin(), keys.end(), key) != keys.end();
}

bool is_analytic(const std::string& s) { return s == "Optimal" || s == "Floor"; }

void check_strategy(const std::string& s) {
  if (!is_analytic(s)) parse_strategy(s);
}

std::string number(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string line_prefix(std::size_t line) {
  return "line " + std::to_string(line) + ": ";
}

}  // namespace

std::size_t ExperimentPlan::point_count() const {
  std::size_t n = 1;
  for (const auto& axis : sweeps) n *= axis.values.size();
  return n;
}

ExperimentPlan parse_plan(std::istream& in) {
  auto doc = parse_key_values(in);
  // Keep sweep axes in declaration order.
  std::vector<std::pair<std::string, KeyValueEntry>> entries(doc.begin(), doc.end());
  std::sort(entries.begin(), entries.end(),
            [](const auto& a, const auto& b) { return a.second.line < b.second.line; });

  ExperimentPlan plan;
  for (const auto& [key, entry] : entries) {
    const std::string& value = entry.value;
    try {
      if (key == "name") {
        plan.name = value;
      } else if (key == "strategies") {
        plan.strategies = split_list(value);
        for (const auto& s : plan.strategies) check_strategy(s);
      } else if (key == "output_dir") {
        plan.output_dir = value;
      } else if (key == "format") {
        if (value != "csv" && value != "json") {
          throw ConfigError("format must be csv or json");
        }
        plan.format = value;
      } else if (key == "per_content") {
        std::size_t n = 0;
        auto res = std::from_chars(value.data(), value.data() + value.size(), n);
        if (res.ec != std::errc{} || res.ptr != value.data() + value.size()) {
          throw ConfigError("per_content must be a nonnegative integer");
        }
        plan.per_content = n;
      } else if (key.rfind("sweep.", 0) == 0) {
        std::string target = key.substr(6);
        if (!is_config_key(target)) throw ConfigError("cannot sweep unknown key '" + target + "'");
        // Popularity and class lists contain commas themselves; sweep them
        // with ';' between alternatives.
        char sep = (target == "popularity" || target == "classes") ? ';' : ',';
        plan.sweeps.push_back({target, split_list(value, sep)});
      } else if (is_config_key(key)) {
        plan.base[key] = value;
      } else {
        throw ConfigError("unknown key '" + key + "'");
      }
    } catch (const ConfigError& e) {
      throw ConfigError(line_prefix(entry.line) + e.what());
    }
  }
  for (const auto& axis : plan.sweeps) {
    if (plan.base.count(axis.key)) {
      throw ConfigError("'" + axis.key + "' is both fixed and swept");
    }
  }
  return plan;
}

std::vector<std::string> recipe_names() { return {"fig2", "fig3", "fig4", "fig5", "fig6"}; }

ExperimentPlan recipe(const std::string& name, double scale) {
  if (!(scale > 0.0) || scale > 1e3) throw ConfigError("scale must lie in (0, 1000]");
  auto boxes = [scale](std::size_t b) {
    auto scaled = static_cast<std::size_t>(std::llround(static_cast<double>(b) * scale));
    return std::to_string(std::max<std::size_t>(scaled, 1));
  };
  ExperimentPlan plan;
  plan.name = name;
  plan.base = {{"box_count", boxes(4000)},  {"content_count", "500"},
               {"storage_per_box", "10"},   {"uplink_slots", "4"},
               {"zipf_alpha", "0.8"},       {"repetitions", "10"},
               {"horizon", "10"},           {"warmup_fraction", "0.2"},
               {"rng_seed", "1"}};
  const std::vector<std::string> all{"UNIF", "SAMP", "CU", "Optimal"};
  if (name == "fig2") {
    plan.sweeps = {{"load", {"0.5", "0.75", "1", "1.25", "1.5", "1.75", "2"}}};
    plan.strategies = all;
  } else if (name == "fig3") {
    plan.base["load"] = "1";
    plan.base.erase("zipf_alpha");
    plan.sweeps = {{"zipf_alpha", {"0.2", "0.5", "0.8", "1.1"}}};
    plan.strategies = all;
  } else if (name == "fig4") {
    plan.sweeps = {{"t_r_max", {"0", "1", "unlimited"}},
                   {"load", {"0.5", "1", "1.5", "2"}}};
    plan.strategies = {"SAMP", "CU", "Optimal"};
  } else if (name == "fig5") {
    plan.base["load"] = "1";
    plan.base.erase("box_count");
    plan.sweeps = {{"box_count", {boxes(1000), boxes(2000), boxes(4000), boxes(8000)}}};
    plan.strategies = all;
  } else if (name == "fig6") {
    plan.base["load"] = "1";
    plan.base.erase("box_count");
    plan.sweeps = {{"box_count", {boxes(4000), boxes(8000)}}};
    plan.strategies = {"UNIF", "SAMP", "CU"};
    plan.per_content = 500;
  } else {
    throw ConfigError("unknown recipe '" + name + "' (expected fig2 .. fig6)");
  }
  return plan;
}

std::vector<SweepPoint> expand(const ExperimentPlan& plan) {
  std::vector<SweepPoint> points;
  if (plan.point_count() == 0) return points;
  std::vector<std::size_t> index(plan.sweeps.size(), 0);
  while (true) {
    SweepPoint point;
    auto values = plan.base;
    for (std::size_t a = 0; a < plan.sweeps.size(); ++a) {
      const auto& axis = plan.sweeps[a];
      point.overrides[axis.key] = axis.values[index[a]];
      values[axis.key] = axis.values[index[a]];
    }
    try {
      point.config = build_config(values);
    } catch (const ConfigError& e) {
      std::string where;
      for (const auto& [k, v] : point.overrides) where += " " + k + "=" + v;
      throw ConfigError("sweep point" + (where.empty() ? std::string(" (base)") : where) +
                        ": " + e.what());
    }
    points.push_back(std::move(point));
    // Last axis varies fastest.
    std::size_t a = plan.sweeps.size();
    while (a > 0) {
      --a;
      if (++index[a] < plan.sweeps[a].values.size()) break;
      index[a] = 0;
      if (a == 0) return points;
    }
    if (plan.sweeps.empty()) return points;
  }
}

std::string csv_header() {
  return "strategy,B,catalogue,M,U,rho,alpha,t_r_max,seed,metric,mean,stdev";
}

std::string csv_line(const ResultRow& r) {
  std::ostringstream os;
  os << r.strategy << ',' << r.box_count << ',' << r.catalogue << ',' << r.storage << ','
     << r.slots << ',' << number(r.load) << ',' << r.alpha << ',' << r.t_r_max << ','
     << r.seed << ',' << r.metric << ',' << number(r.mean) << ',' << number(r.stdev);
  return os.str();
}

namespace {

ResultRow row_template(const SystemConfig& cfg, const std::string& strategy) {
  ResultRow row;
  row.strategy = strategy;
  row.box_count = cfg.box_count;
  row.storage = cfg.storage_per_box;
  row.slots = cfg.uplink_slots;
  row.load = cfg.load;
  row.seed = cfg.rng_seed;
  if (const auto* fixed = std::get_if<FixedCatalogue>(&cfg.catalogue)) {
    row.catalogue = "C=" + std::to_string(fixed->content_count());
    row.alpha = fixed->zipf_alpha ? number(*fixed->zipf_alpha) : "custom";
  } else {
    std::string text = "classes=";
    const auto& classes = std::get<ClassCatalogue>(cfg.catalogue).classes;
    for (std::size_t i = 0; i < classes.size(); ++i) {
      if (i) text += ';';
      text += number(classes[i].scale) + ":" + number(classes[i].rate);
    }
    row.catalogue = text;
  }
  if (const auto* rp = std::get_if<RepackingPolicy>(&cfg.acceptance_policy)) {
    row.t_r_max = rp->t_r_max ? std::to_string(*rp->t_r_max) : "unlimited";
  } else {
    row.t_r_max = "counter";
  }
  return row;
}

}  // namespace

std::vector<ResultRow> evaluate(const SweepPoint& point, const std::string& strategy,
                                std::size_t per_content, std::size_t jobs) {
  const SystemConfig& cfg = point.config;
  std::vector<ResultRow> rows;
  auto add = [&](const std::string& metric, double mean, double stdev) {
    auto row = row_template(cfg, strategy);
    row.metric = metric;
    row.mean = mean;
    row.stdev = stdev;
    rows.push_back(std::move(row));
  };

  if (strategy == "Optimal") {
    if (cfg.network_mode == NetworkMode::DSN) {
      add("system_loss", optimal_loss(cfg.load), 0.0);
    } else {
      auto pop = cfg.normalized_popularity();
      std::sort(pop.rbegin(), pop.rend());
      auto wf = solve_water_filling(pop, cfg.load, cfg.storage_per_box);
      add("absorbed_fraction", wf.absorbed_fraction(), 0.0);
    }
    return rows;
  }
  if (strategy == "Floor") {
    const auto* classes = std::get_if<ClassCatalogue>(&cfg.catalogue);
    if (!classes) throw ConfigError("Floor rows need a class catalogue");
    add("overall_loss",
        large_catalogue_loss_floor(cfg.storage_per_box, classes->total_scale(),
                                   classes->min_rate(), cfg.uplink_slots),
        0.0);
    return rows;
  }

  auto result = run_experiment(cfg, parse_strategy(strategy), cfg.repetitions,
                               cfg.rng_seed, jobs);
  for (const auto& [name, stat] : result.statistics()) add(name, stat.mean, stat.stdev);
  std::size_t shown = std::min(per_content, cfg.content_count());
  for (std::size_t c = 0; c < shown; ++c) {
    std::vector<double> values;
    for (const auto& run : result.runs) values.push_back(run.content_loss(static_cast<ContentId>(c)));
    auto stat = summarize(values);
    add("content_loss:" + std::to_string(c), stat.mean, stat.stdev);
  }
  return rows;
}

namespace {

std::string utc_timestamp() {
  auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

nlohmann::json config_json(const SystemConfig& cfg) {
  std::istringstream text(format_config(cfg));
  nlohmann::json out = nlohmann::json::object();
  for (const auto& [k, v] : parse_key_values(text)) out[k] = v.value;
  return out;
}

nlohmann::json row_json(const ResultRow& r) {
  return {{"strategy", r.strategy}, {"B", r.box_count}, {"catalogue", r.catalogue},
          {"M", r.storage},         {"U", r.slots},     {"rho", r.load},
          {"alpha", r.alpha},       {"t_r_max", r.t_r_max}, {"seed", r.seed},
          {"metric", r.metric},     {"mean", r.mean},   {"stdev", r.stdev}};
}

}  // namespace

PlanOutput execute_plan(const ExperimentPlan& plan, const RunSettings& settings) {
  const std::string format = settings.format.empty() ? plan.format : settings.format;
  if (format != "csv" && format != "json") throw ConfigError("format must be csv or json");
  const std::filesystem::path dir =
      settings.output_dir.empty() ? plan.output_dir : settings.output_dir;

  auto points = expand(plan);
  if (settings.log) {
    *settings.log << "plan " << plan.name << ": " << points.size() << " point(s) x "
                  << plan.strategies.size() << " strategie(s) = "
                  << points.size() * plan.strategies.size() << " run(s)\n";
  }

  std::filesystem::create_directories(dir);
  PlanOutput out;
  std::ofstream csv;
  if (format == "csv") {
    out.csv_path = (dir / (plan.name + ".csv")).string();
    csv.open(out.csv_path);
    if (!csv) throw std::runtime_error("cannot write " + out.csv_path);
    csv << csv_header() << '\n' << std::flush;
  }
  out.json_path = (dir / (plan.name + ".json")).string();

  nlohmann::json summary;
  summary["name"] = plan.name;
  summary["generated_at"] = utc_timestamp();
  summary["strategies"] = plan.strategies;
  summary["per_content"] = plan.per_content;
  summary["class_size_rounding"] = "ceil";
  nlohmann::json sweeps = nlohmann::json::array();
  for (const auto& axis : plan.sweeps) sweeps.push_back({{"key", axis.key}, {"values", axis.values}});
  summary["sweeps"] = sweeps;
  summary["base"] = plan.base;
  nlohmann::json point_list = nlohmann::json::array();
  for (const auto& p : points) {
    point_list.push_back({{"overrides", p.overrides}, {"config", config_json(p.config)}});
  }
  summary["points"] = point_list;

  auto write_summary = [&](const std::string& status, const std::string& error) {
    summary["status"] = status;
    if (!error.empty()) summary["error"] = error;
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : out.rows) rows.push_back(row_json(r));
    summary["rows"] = rows;
    std::ofstream js(out.json_path);
    js << summary.dump(2) << '\n';
  };

  try {
    std::size_t done = 0;
    for (const auto& point : points) {
      for (const auto& strategy : plan.strategies) {
        auto rows = evaluate(point, strategy, plan.per_content, settings.jobs);
        for (const auto& r : rows) {
          if (csv.is_open()) csv << csv_line(r) << '\n';
          out.rows.push_back(r);
        }
        if (csv.is_open()) csv.flush();
        ++done;
        if (settings.log) {
          *settings.log << "  [" << done << "/" << points.size() * plan.strategies.size()
                        << "] " << strategy;
          for (const auto& [k, v] : point.overrides) *settings.log << ' ' << k << '=' << v;
          *settings.log << '\n';
        }
      }
    }
  } catch (const std::exception& e) {
    write_summary("failed", e.what());
    throw;
  }
  write_summary("complete", "");
  return out;
}

}  // namespace vodsim
