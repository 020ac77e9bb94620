// Python bindings: configs are built from keyword arguments using the same
// keys as config files; placements travel as lists of per-box content lists.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "vodsim/analysis.hpp"
#include "vodsim/config_io.hpp"
#include "vodsim/engine.hpp"
#include "vodsim/experiment.hpp"
#include "vodsim/feasibility.hpp"
#include "vodsim/validation.hpp"

namespace py = pybind11;
using namespace vodsim;

namespace {

using Caches = std::vector<std::vector<ContentId>>;

std::string to_value(const py::handle& v) {
  if (py::isinstance<py::bool_>(v)) return v.cast<bool>() ? "enabled" : "none";
  if (py::isinstance<py::str>(v)) return v.cast<std::string>();
  if (v.is_none()) return "default";
  if (py::isinstance<py::list>(v) || py::isinstance<py::tuple>(v)) {
    std::string out;
    for (auto item : v) {
      if (!out.empty()) out += ',';
      out += to_value(item);
    }
    return out;
  }
  return py::str(v).cast<std::string>();
}

SystemConfig config_from_kwargs(const py::kwargs& kwargs) {
  std::map<std::string, std::string> values;
  for (auto [k, v] : kwargs) values[k.cast<std::string>()] = to_value(v);
  return build_config(values);
}

Caches caches_of(const Placement& p) {
  Caches out;
  for (BoxId b = 0; b < p.box_count(); ++b) {
    auto cache = p.cache(b);
    out.emplace_back(cache.begin(), cache.end());
  }
  return out;
}

py::dict metrics_dict(const Metrics& m) {
  py::dict d;
  d["arrivals"] = m.arrivals;
  d["acceptances"] = m.acceptances;
  d["rejections"] = m.rejections;
  d["local_services"] = m.local_services;
  d["interrupted"] = m.interrupted;
  d["system_loss"] = m.system_loss();
  d["overall_loss"] = m.overall_loss();
  d["absorbed_fraction"] = m.absorbed_fraction();
  d["local_fraction"] = m.local_fraction();
  return d;
}

py::dict row_dict(const ResultRow& r) {
  py::dict d;
  d["strategy"] = r.strategy;
  d["B"] = r.box_count;
  d["catalogue"] = r.catalogue;
  d["M"] = r.storage;
  d["U"] = r.slots;
  d["rho"] = r.load;
  d["alpha"] = r.alpha;
  d["t_r_max"] = r.t_r_max;
  d["seed"] = r.seed;
  d["metric"] = r.metric;
  d["mean"] = r.mean;
  d["stdev"] = r.stdev;
  return d;
}

}  // namespace

PYBIND11_MODULE(_vodsim, m) {
  m.doc() = "Loss-network simulator and placement analytics for P2P video-on-demand";

  py::class_<SystemConfig>(m, "Config")
      .def(py::init(&config_from_kwargs),
           "Build a validated config from config-file keys, e.g. "
           "Config(box_count=400, load=1.2, zipf_alpha=0.8)")
      .def_readonly("box_count", &SystemConfig::box_count)
      .def_readonly("storage_per_box", &SystemConfig::storage_per_box)
      .def_readonly("uplink_slots", &SystemConfig::uplink_slots)
      .def_readonly("load", &SystemConfig::load)
      .def_readonly("repetitions", &SystemConfig::repetitions)
      .def_readonly("horizon", &SystemConfig::horizon)
      .def_readonly("rng_seed", &SystemConfig::rng_seed)
      .def_property_readonly("content_count", &SystemConfig::content_count)
      .def_property_readonly("popularity", &SystemConfig::normalized_popularity)
      .def("to_text", &format_config)
      .def_static("from_text", [](const std::string& text) {
        std::istringstream in(text);
        return parse_config(in);
      })
      .def("__repr__", [](const SystemConfig& c) {
        return "<Config B=" + std::to_string(c.box_count) + " C=" +
               std::to_string(c.content_count()) + " M=" + std::to_string(c.storage_per_box) +
               " U=" + std::to_string(c.uplink_slots) + ">";
      });

  m.def("zipf_popularity", &zipf_popularity, py::arg("content_count"), py::arg("alpha"),
        py::arg("shift") = 0.0);
  m.def("erlang_b", &erlang_b, py::arg("load"), py::arg("servers"));
  m.def("optimal_loss", &optimal_loss, py::arg("load"));
  m.def("loss_floor", &large_catalogue_loss_floor, py::arg("storage"), py::arg("total_scale"),
        py::arg("min_rate"), py::arg("uplink_slots"));
  m.def(
      "water_filling",
      [](const std::vector<double>& popularity, double load, std::size_t storage) {
        auto wf = solve_water_filling(popularity, load, storage);
        py::dict d;
        d["m"] = wf.cache_fraction;
        d["lam"] = wf.bandwidth_fraction;
        d["x"] = wf.served_load;
        d["rho_c"] = wf.content_load;
        d["threshold"] = wf.threshold;
        d["absorbed_load"] = wf.absorbed_load;
        d["absorbed_fraction"] = wf.absorbed_fraction();
        d["objective"] = wf.objective;
        d["storage_slack"] = wf.storage_slack;
        return d;
      },
      py::arg("popularity"), py::arg("load"), py::arg("storage"),
      "Water-filling solution; popularity must be sorted descending.");

  m.def(
      "placement",
      [](const SystemConfig& config, const std::string& strategy, std::uint64_t seed) {
        auto s = parse_strategy(strategy);
        Rng rng(seed);
        return caches_of(make_placement(configure_for(config, s), s, rng));
      },
      py::arg("config"), py::arg("strategy"), py::arg("seed"));

  m.def(
      "is_feasible",
      [](const std::vector<std::size_t>& requests, const Caches& caches,
         std::size_t uplink_slots) {
        Placement p(requests.size(), caches);
        return is_feasible_matching(RequestVector{requests}, p, uplink_slots);
      },
      py::arg("requests"), py::arg("caches"), py::arg("uplink_slots"));
  m.def(
      "hall_check",
      [](const std::vector<std::size_t>& requests, const Caches& caches,
         std::size_t uplink_slots) {
        Placement p(requests.size(), caches);
        auto r = hall_check(RequestVector{requests}, p, uplink_slots);
        return py::make_tuple(r.feasible, r.witness);
      },
      py::arg("requests"), py::arg("caches"), py::arg("uplink_slots"),
      "Returns (feasible, witness content set).");

  m.def(
      "simulate",
      [](const SystemConfig& config, const Caches& caches, std::uint64_t seed) {
        Placement p(config.content_count(), caches);
        Metrics metrics;
        {
          py::gil_scoped_release release;
          metrics = run_simulation(config, p, seed);
        }
        return metrics_dict(metrics);
      },
      py::arg("config"), py::arg("caches"), py::arg("seed"),
      "One run on a fixed placement (apply the strategy's config first for CU).");

  m.def(
      "run_experiment",
      [](const SystemConfig& config, const std::string& strategy,
         std::optional<std::size_t> repetitions, std::optional<std::uint64_t> seed,
         std::size_t jobs) {
        auto s = parse_strategy(strategy);
        ExperimentResult r;
        {
          py::gil_scoped_release release;
          r = run_experiment(config, s, repetitions.value_or(config.repetitions),
                             seed.value_or(config.rng_seed), jobs);
        }
        py::dict d;
        for (const auto& [name, stat] : r.statistics()) {
          d[py::str(name)] = py::make_tuple(stat.mean, stat.stdev);
        }
        d["content_loss"] = r.mean_content_loss();
        d["seeds"] = r.seeds;
        return d;
      },
      py::arg("config"), py::arg("strategy"), py::arg("repetitions") = py::none(),
      py::arg("seed") = py::none(), py::arg("jobs") = 1,
      "Statistics are (mean, sample stdev) tuples.");

  m.def(
      "exact_ctmc_loss",
      [](const SystemConfig& config, const Caches& caches, std::size_t max_states) {
        return exact_ctmc_loss(config, Placement(config.content_count(), caches), max_states);
      },
      py::arg("config"), py::arg("caches"), py::arg("max_states") = 200000);

  m.def(
      "validate",
      [](const std::string& suite, std::uint64_t seed) {
        std::vector<CheckResult> results;
        {
          py::gil_scoped_release release;
          results = run_validation_suite(suite, seed);
        }
        py::list out;
        for (const auto& r : results) out.append(py::make_tuple(r.name, r.passed, r.detail));
        return out;
      },
      py::arg("suite"), py::arg("seed") = 1,
      "Oracle checks as (name, passed, detail) tuples.");

  m.def(
      "run_plan",
      [](const std::string& text, const std::string& output_dir, std::size_t jobs,
         const std::string& format) {
        std::istringstream in(text);
        auto plan = parse_plan(in);
        PlanOutput out;
        {
          py::gil_scoped_release release;
          out = execute_plan(plan, RunSettings{jobs, output_dir, format, nullptr});
        }
        py::list rows;
        for (const auto& r : out.rows) rows.append(row_dict(r));
        return rows;
      },
      py::arg("plan"), py::arg("output_dir"), py::arg("jobs") = 1, py::arg("format") = "",
      "Runs a plan document, writes its CSV/JSON files and returns the rows.");
  m.def("recipe_names", &recipe_names);
}
