#include "vodsim/config_io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <sstream>

namespace vodsim {
namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char ch) { return std::tolower(ch); });
  return s;
}

double parse_real(const std::string& key, const std::string& text) {
  std::istringstream in(text);
  double value = 0.0;
  in >> value;
  if (!in || !(in >> std::ws).eof()) {
    throw ConfigError(key + ": expected a number, got '" + text + "'");
  }
  return value;
}

std::uint64_t parse_unsigned(const std::string& key, const std::string& text) {
  std::uint64_t value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw ConfigError(key + ": expected a nonnegative integer, got '" + text +
                      "'");
  }
  return value;
}

bool is_default(const std::string& text) {
  auto v = lower(text);
  return v == "default" || v == "auto";
}

std::string format_real(double v) {
  std::ostringstream out;
  out << std::setprecision(17) << v;
  return out.str();
}

}  // namespace

std::string trim(const std::string& text) {
  auto begin = text.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return {};
  auto end = text.find_last_not_of(" \t\r\n");
  return text.substr(begin, end - begin + 1);
}

std::vector<std::string> split_list(const std::string& text, char sep) {
  std::vector<std::string> items;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, sep)) {
    item = trim(item);
    if (!item.empty()) items.push_back(item);
  }
  return items;
}

KeyValueDocument parse_key_values(std::istream& in) {
  KeyValueDocument doc;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) +
                        ": expected 'key = value'");
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    }
    if (doc.count(key)) {
      throw ConfigError("line " + std::to_string(lineno) + ": duplicate key '" +
                        key + "'");
    }
    doc.emplace(key, KeyValueEntry{value, lineno});
  }
  return doc;
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      "box_count",          "storage_per_box",  "uplink_slots",
      "load",               "catalogue_spec",   "content_count",
      "zipf_alpha",         "zipf_shift",       "popularity",
      "classes",            "network_mode",     "acceptance_policy",
      "t_r_max",            "counter_L",        "eligibility_exponent",
      "service_time_model", "warmup_fraction",  "repetitions",
      "horizon",            "cache_update",     "cache_update_epsilon",
      "initial_placement",  "rng_seed"};
  return keys;
}

SystemConfig build_config(const std::map<std::string, std::string>& values) {
  const auto& known = config_keys();
  for (const auto& [key, value] : values) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
  auto get = [&](const std::string& key) -> const std::string* {
    auto it = values.find(key);
    return it == values.end() ? nullptr : &it->second;
  };

  SystemConfig cfg;
  if (auto v = get("box_count")) cfg.box_count = parse_unsigned("box_count", *v);
  if (auto v = get("storage_per_box")) {
    cfg.storage_per_box = parse_unsigned("storage_per_box", *v);
  }
  if (auto v = get("uplink_slots")) {
    cfg.uplink_slots = parse_unsigned("uplink_slots", *v);
  }
  if (auto v = get("load")) cfg.load = parse_real("load", *v);

  std::string spec = "fixed";
  if (auto v = get("catalogue_spec")) spec = lower(*v);
  if (spec == "fixed") {
    for (const char* key : {"classes"}) {
      if (get(key)) throw ConfigError(std::string(key) + " requires catalogue_spec = classes");
    }
    if (auto v = get("popularity")) {
      if (get("zipf_alpha") || get("zipf_shift")) {
        throw ConfigError("popularity and zipf_* keys are mutually exclusive");
      }
      std::vector<double> weights;
      for (const auto& item : split_list(*v)) {
        weights.push_back(parse_real("popularity", item));
      }
      for (double w : weights) {
        if (!(w > 0.0)) throw ConfigError("popularity entries must be positive");
      }
      FixedCatalogue cat;
      cat.popularity = renormalize(weights);
      if (auto n = get("content_count")) {
        if (parse_unsigned("content_count", *n) != cat.popularity.size()) {
          throw ConfigError("content_count disagrees with popularity length");
        }
      }
      cfg.catalogue = std::move(cat);
    } else {
      std::size_t count = 500;
      double alpha = 0.8;
      double shift = 0.0;
      if (auto n = get("content_count")) count = parse_unsigned("content_count", *n);
      if (auto a = get("zipf_alpha")) alpha = parse_real("zipf_alpha", *a);
      if (auto s = get("zipf_shift")) shift = parse_real("zipf_shift", *s);
      cfg.catalogue = FixedCatalogue::zipf(count, alpha, shift);
    }
  } else if (spec == "classes") {
    for (const char* key : {"content_count", "zipf_alpha", "zipf_shift", "popularity"}) {
      if (get(key)) throw ConfigError(std::string(key) + " requires catalogue_spec = fixed");
    }
    auto v = get("classes");
    if (!v) throw ConfigError("catalogue_spec = classes needs a 'classes' key");
    ClassCatalogue cat;
    for (const auto& item : split_list(*v)) {
      auto parts = split_list(item, ':');
      if (parts.size() != 2) {
        throw ConfigError("classes: expected 'scale:rate', got '" + item + "'");
      }
      cat.classes.push_back({parse_real("classes", parts[0]),
                             parse_real("classes", parts[1])});
    }
    cfg.catalogue = std::move(cat);
  } else {
    throw ConfigError("catalogue_spec must be 'fixed' or 'classes'");
  }

  if (auto v = get("network_mode")) {
    auto mode = lower(*v);
    if (mode == "dsn") cfg.network_mode = NetworkMode::DSN;
    else if (mode == "pp2pn") cfg.network_mode = NetworkMode::PP2PN;
    else throw ConfigError("network_mode must be DSN or PP2PN");
  }

  std::string policy = "repacking";
  if (auto v = get("acceptance_policy")) policy = lower(*v);
  if (policy == "repacking") {
    if (get("counter_L") || get("eligibility_exponent")) {
      throw ConfigError("counter_L/eligibility_exponent require acceptance_policy = counter");
    }
    RepackingPolicy rp;
    if (auto v = get("t_r_max")) {
      auto text = lower(*v);
      if (text != "unlimited" && text != "inf" && !is_default(text)) {
        rp.t_r_max = parse_unsigned("t_r_max", *v);
      }
    }
    cfg.acceptance_policy = rp;
  } else if (policy == "counter") {
    if (get("t_r_max")) throw ConfigError("t_r_max requires acceptance_policy = repacking");
    CounterPolicy cp;
    if (auto v = get("counter_L"); v && !is_default(*v)) {
      cp.boxes_per_request = parse_unsigned("counter_L", *v);
    }
    if (auto v = get("eligibility_exponent")) {
      cp.eligibility_exponent = parse_real("eligibility_exponent", *v);
    }
    cfg.acceptance_policy = cp;
  } else {
    throw ConfigError("acceptance_policy must be 'repacking' or 'counter'");
  }

  if (auto v = get("service_time_model")) {
    auto model = lower(*v);
    if (model == "exponential") cfg.service_time_model = ServiceModel::Exponential;
    else if (model == "deterministic") cfg.service_time_model = ServiceModel::Deterministic;
    else throw ConfigError("service_time_model must be exponential or deterministic");
  }
  if (auto v = get("warmup_fraction")) {
    cfg.warmup_fraction = parse_real("warmup_fraction", *v);
  }
  if (auto v = get("repetitions")) cfg.repetitions = parse_unsigned("repetitions", *v);
  if (auto v = get("horizon")) cfg.horizon = parse_real("horizon", *v);

  std::string update = "none";
  if (auto v = get("cache_update")) update = lower(*v);
  if (update == "enabled") {
    CacheUpdatePolicy cu;
    if (auto v = get("cache_update_epsilon"); v && !is_default(*v)) {
      cu.epsilon = parse_real("cache_update_epsilon", *v);
    }
    if (auto v = get("initial_placement")) {
      auto init = lower(*v);
      if (init == "unif") cu.initial = InitialPlacement::Uniform;
      else if (init == "samp") cu.initial = InitialPlacement::Sampling;
      else throw ConfigError("initial_placement must be UNIF or SAMP");
    }
    cfg.cache_update = cu;
  } else if (update == "none") {
    if (get("cache_update_epsilon") || get("initial_placement")) {
      throw ConfigError("cache update keys require cache_update = enabled");
    }
  } else {
    throw ConfigError("cache_update must be 'none' or 'enabled'");
  }
  if (auto v = get("rng_seed")) cfg.rng_seed = parse_unsigned("rng_seed", *v);

  cfg.validate();
  return cfg;
}

SystemConfig parse_config(std::istream& in) {
  auto doc = parse_key_values(in);
  std::map<std::string, std::string> values;
  const auto& known = config_keys();
  for (const auto& [key, entry] : doc) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ConfigError("line " + std::to_string(entry.line) +
                        ": unknown config key '" + key + "'");
    }
    values.emplace(key, entry.value);
  }
  return build_config(values);
}

std::string format_config(const SystemConfig& cfg) {
  std::ostringstream out;
  out << "box_count = " << cfg.box_count << '\n'
      << "storage_per_box = " << cfg.storage_per_box << '\n'
      << "uplink_slots = " << cfg.uplink_slots << '\n'
      << "load = " << format_real(cfg.load) << '\n';
  if (const auto* fixed = std::get_if<FixedCatalogue>(&cfg.catalogue)) {
    out << "catalogue_spec = fixed\n";
    if (fixed->zipf_alpha) {
      out << "content_count = " << fixed->content_count() << '\n'
          << "zipf_alpha = " << format_real(*fixed->zipf_alpha) << '\n'
          << "zipf_shift = " << format_real(fixed->zipf_shift) << '\n';
    } else {
      out << "popularity = ";
      for (std::size_t c = 0; c < fixed->popularity.size(); ++c) {
        if (c) out << ", ";
        out << format_real(fixed->popularity[c]);
      }
      out << '\n';
    }
  } else {
    const auto& classes = std::get<ClassCatalogue>(cfg.catalogue);
    out << "catalogue_spec = classes\nclasses = ";
    for (std::size_t i = 0; i < classes.classes.size(); ++i) {
      if (i) out << ", ";
      out << format_real(classes.classes[i].scale) << ':'
          << format_real(classes.classes[i].rate);
    }
    out << '\n';
  }
  out << "network_mode = "
      << (cfg.network_mode == NetworkMode::DSN ? "DSN" : "PP2PN") << '\n';
  if (const auto* rp = std::get_if<RepackingPolicy>(&cfg.acceptance_policy)) {
    out << "acceptance_policy = repacking\nt_r_max = ";
    if (rp->t_r_max) out << *rp->t_r_max;
    else out << "unlimited";
    out << '\n';
  } else {
    const auto& cp = std::get<CounterPolicy>(cfg.acceptance_policy);
    out << "acceptance_policy = counter\ncounter_L = ";
    if (cp.boxes_per_request) out << *cp.boxes_per_request;
    else out << "default";
    out << "\neligibility_exponent = " << format_real(cp.eligibility_exponent)
        << '\n';
  }
  out << "service_time_model = "
      << (cfg.service_time_model == ServiceModel::Exponential ? "exponential"
                                                              : "deterministic")
      << '\n'
      << "warmup_fraction = " << format_real(cfg.warmup_fraction) << '\n'
      << "repetitions = " << cfg.repetitions << '\n'
      << "horizon = " << format_real(cfg.horizon) << '\n';
  if (cfg.cache_update) {
    out << "cache_update = enabled\ncache_update_epsilon = ";
    if (cfg.cache_update->epsilon) out << format_real(*cfg.cache_update->epsilon);
    else out << "default";
    out << "\ninitial_placement = "
        << (cfg.cache_update->initial == InitialPlacement::Uniform ? "UNIF" : "SAMP")
        << '\n';
  } else {
    out << "cache_update = none\n";
  }
  out << "rng_seed = " << cfg.rng_seed << '\n';
  return out.str();
}

}  // namespace vodsim
