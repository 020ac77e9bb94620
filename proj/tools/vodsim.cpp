// vodsim: simulate plans and recipes, evaluate formulas, run oracle checks,
// and print placements.

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "vodsim/analysis.hpp"
#include "vodsim/config_io.hpp"
#include "vodsim/engine.hpp"
#include "vodsim/experiment.hpp"
#include "vodsim/validation.hpp"

namespace {

using namespace vodsim;

constexpr int kValidationFailure = 1;
constexpr int kUsageError = 2;

std::map<std::string, std::string> parse_overrides(const std::vector<std::string>& items) {
  std::map<std::string, std::string> out;
  for (const auto& item : items) {
    auto eq = item.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + item + "'");
    out[trim(item.substr(0, eq))] = trim(item.substr(eq + 1));
  }
  return out;
}

ExperimentPlan load_plan(const std::string& source, double scale) {
  std::ifstream in(source);
  if (in) {
    if (scale != 1.0) throw ConfigError("--scale only applies to built-in recipes");
    return parse_plan(in);
  }
  auto names = recipe_names();
  if (std::find(names.begin(), names.end(), source) != names.end()) return recipe(source, scale);
  throw ConfigError("'" + source + "' is neither a readable plan file nor a recipe");
}

void print_values(const std::vector<std::pair<std::string, double>>& values,
                  const std::string& format) {
  std::cout << std::setprecision(12);
  if (format == "csv") {
    std::cout << "name,value\n";
    for (const auto& [k, v] : values) std::cout << k << ',' << v << '\n';
  } else {
    for (const auto& [k, v] : values) std::cout << k << " = " << v << '\n';
  }
}

std::vector<double> parse_reals(const std::string& text) {
  std::vector<double> out;
  for (const auto& item : split_list(text)) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size() || item.empty()) throw ConfigError("not a number: '" + item + "'");
    out.push_back(v);
  }
  return out;
}

void print_waterfill(const std::vector<double>& popularity, double load, std::size_t storage,
                     const std::string& format) {
  auto wf = solve_water_filling(popularity, load, storage);
  std::cout << std::setprecision(12);
  const char sep = format == "csv" ? ',' : '\t';
  std::cout << "c" << sep << "nu" << sep << "rho_c" << sep << "m" << sep << "lambda" << sep
            << "x\n";
  for (std::size_t c = 0; c < popularity.size(); ++c) {
    std::cout << c + 1 << sep << popularity[c] << sep << wf.content_load[c] << sep
              << wf.cache_fraction[c] << sep << wf.bandwidth_fraction[c] << sep
              << wf.served_load[c] << '\n';
  }
  if (format != "csv") {
    std::cout << "c* = " << wf.threshold << '\n'
              << "rho_tilde = " << wf.absorbed_load << '\n'
              << "absorbed_fraction = " << wf.absorbed_fraction() << '\n';
    if (wf.storage_slack > 0.0) std::cout << "storage_slack = " << wf.storage_slack << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Loss-network simulator and analytics for P2P video-on-demand placement"};
  app.require_subcommand(1);

  std::uint64_t seed = 1;
  std::size_t jobs = 1;
  double scale = 1.0;
  std::string out_dir;
  std::string format;
  bool seed_given = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--format", format, "Output format")->check(CLI::IsMember({"csv", "json"}));
  };

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Run an experiment plan or a recipe (fig2..fig6)");
  std::string plan_source;
  std::vector<std::string> plan_sets;
  simulate->add_option("plan", plan_source, "Plan file or recipe name")->required();
  simulate->add_option("--seed", seed, "Base seed (rng_seed) for every sweep point")
      ->each([&](const std::string&) { seed_given = true; });
  simulate->add_option("--jobs", jobs, "Worker threads for repetitions")->check(CLI::PositiveNumber);
  simulate->add_option("--scale", scale, "Multiply recipe box counts")->check(CLI::PositiveNumber);
  simulate->add_option("--out", out_dir, "Output directory");
  simulate->add_option("--set", plan_sets, "Override a base config key (key=value)");
  add_common(simulate);

  // analyze
  auto* analyze = app.add_subcommand("analyze", "Evaluate closed-form results");
  analyze->require_subcommand(1);
  analyze->fallthrough();
  add_common(analyze);
  double erlang_load = 0.0;
  std::size_t erlang_servers = 0;
  auto* erlang = analyze->add_subcommand("erlang", "Erlang-B blocking");
  erlang->add_option("--load", erlang_load, "Offered load nu")->required();
  erlang->add_option("--servers", erlang_servers, "Number of servers")->required();

  double optimum_load = 0.0;
  auto* optimum = analyze->add_subcommand("optimum", "Optimal DSN loss (1 - 1/rho)^+");
  optimum->add_option("--load", optimum_load, "Normalized load rho")->required();

  std::string wf_popularity;
  double wf_alpha = 0.0;
  std::size_t wf_contents = 0;
  double wf_load = 0.0;
  std::size_t wf_storage = 0;
  auto* waterfill = analyze->add_subcommand("waterfill", "Water-filling solution of the P2P LP");
  auto* pop_opt = waterfill->add_option("--popularity", wf_popularity,
                                        "Comma-separated popularity (renormalized, sorted)");
  auto* alpha_opt = waterfill->add_option("--zipf", wf_alpha, "Zipf exponent");
  waterfill->add_option("--contents", wf_contents, "Catalogue size for --zipf")->needs(alpha_opt);
  pop_opt->excludes(alpha_opt);
  waterfill->add_option("--load", wf_load, "Normalized load rho")->required();
  waterfill->add_option("--storage", wf_storage, "Storage per box M")->required();

  std::size_t floor_storage = 0;
  std::string floor_classes;
  std::size_t floor_slots = 0;
  auto* floor = analyze->add_subcommand("floor", "Loss floor for a large class catalogue");
  floor->add_option("--storage", floor_storage, "Storage per box M")->required();
  floor->add_option("--classes", floor_classes, "scale:rate pairs, e.g. 0.2:8,0.8:2")->required();
  floor->add_option("--slots", floor_slots, "Upload slots per box U")->required();

  // validate
  auto* validate = app.add_subcommand("validate", "Run oracle cross-checks");
  std::string suite;
  validate->add_option("suite", suite, "hall, ctmc, product-form, lp or all")->required();
  validate->add_option("--seed", seed, "Seed for randomized checks");

  // placement
  auto* placement = app.add_subcommand("placement", "Print an initial placement, one box per line");
  std::string placement_strategy;
  std::string config_path;
  std::vector<std::string> placement_sets;
  std::string placement_out;
  placement->add_option("strategy", placement_strategy, "UNIF, SAMP, BERN, CU, HWC or MP2P")
      ->required();
  placement->add_option("--config", config_path, "Config file")->check(CLI::ExistingFile);
  placement->add_option("--set", placement_sets, "Override a config key (key=value)");
  placement->add_option("--seed", seed, "Placement seed")
      ->each([&](const std::string&) { seed_given = true; });
  placement->add_option("--out", placement_out, "Write to a file instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageError;
  }

  try {
    if (*simulate) {
      auto plan = load_plan(plan_source, scale);
      for (const auto& [k, v] : parse_overrides(plan_sets)) {
        if (std::none_of(plan.sweeps.begin(), plan.sweeps.end(),
                         [&](const SweepAxis& a) { return a.key == k; })) {
          plan.base[k] = v;
        } else {
          throw ConfigError("--set " + k + " conflicts with a sweep axis");
        }
      }
      if (seed_given) plan.base["rng_seed"] = std::to_string(seed);
      RunSettings settings;
      settings.jobs = jobs;
      settings.output_dir = out_dir;
      settings.format = format;
      settings.log = &std::cerr;
      auto result = execute_plan(plan, settings);
      if (!result.csv_path.empty()) std::cout << result.csv_path << '\n';
      std::cout << result.json_path << '\n';
      return 0;
    }

    if (*analyze) {
      if (*erlang) {
        print_values({{"erlang_b", erlang_b(erlang_load, erlang_servers)}}, format);
      } else if (*optimum) {
        print_values({{"optimal_loss", optimal_loss(optimum_load)}}, format);
      } else if (*waterfill) {
        std::vector<double> pop;
        if (!wf_popularity.empty()) {
          pop = renormalize(parse_reals(wf_popularity));
        } else if (*alpha_opt) {
          if (wf_contents == 0) throw ConfigError("--zipf needs --contents");
          pop = zipf_popularity(wf_contents, wf_alpha);
        } else {
          throw ConfigError("waterfill needs --popularity or --zipf");
        }
        std::sort(pop.rbegin(), pop.rend());
        print_waterfill(pop, wf_load, wf_storage, format);
      } else if (*floor) {
        ClassCatalogue cat;
        for (const auto& item : split_list(floor_classes)) {
          auto parts = split_list(item, ':');
          if (parts.size() != 2) throw ConfigError("class must be scale:rate, got '" + item + "'");
          auto values = parse_reals(parts[0] + "," + parts[1]);
          cat.classes.push_back({values[0], values[1]});
        }
        print_values({{"loss_floor", large_catalogue_loss_floor(floor_storage, cat.total_scale(),
                                                                cat.min_rate(), floor_slots)}},
                     format);
      }
      return 0;
    }

    if (*validate) {
      auto results = run_validation_suite(suite, seed);
      bool ok = true;
      for (const auto& r : results) {
        std::cout << (r.passed ? "PASS" : "FAIL") << ' ' << r.name << ": " << r.detail << '\n';
        ok = ok && r.passed;
      }
      return ok ? 0 : kValidationFailure;
    }

    if (*placement) {
      std::map<std::string, std::string> values;
      if (!config_path.empty()) {
        std::ifstream in(config_path);
        for (const auto& [k, v] : parse_key_values(in)) values[k] = v.value;
      }
      for (const auto& [k, v] : parse_overrides(placement_sets)) values[k] = v;
      auto strategy = parse_strategy(placement_strategy);
      auto config = configure_for(build_config(values), strategy);
      Rng rng(seed_given ? seed : config.rng_seed);
      auto p = make_placement(config, strategy, rng);
      if (placement_out.empty()) {
        p.write_text(std::cout);
      } else {
        std::ofstream out(placement_out);
        if (!out) throw std::runtime_error("cannot write " + placement_out);
        p.write_text(out);
      }
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidationFailure;
  }
  return 0;
}
