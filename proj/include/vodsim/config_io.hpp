#pragma once

// Flat key-value configuration documents.
//
//   # comment
//   box_count = 4000
//   catalogue_spec = fixed
//   zipf_alpha = 0.8
//
// Keys mirror SystemConfig field names. Unknown or repeated keys are
// errors. See README.md for the full key list.

#include <cstddef>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "vodsim/core.hpp"

namespace vodsim {

struct KeyValueEntry {
  std::string value;
  std::size_t line = 0;
};

using KeyValueDocument = std::map<std::string, KeyValueEntry>;

KeyValueDocument parse_key_values(std::istream& in);

/// Keys accepted by build_config.
const std::vector<std::string>& config_keys();

/// Builds and validates a config from key/value strings. Keys absent from
/// the map keep their defaults.
SystemConfig build_config(const std::map<std::string, std::string>& values);

/// Parses a whole config document; any key not in config_keys() is an error.
SystemConfig parse_config(std::istream& in);

/// Renders a config as a document accepted by parse_config. Explicit
/// popularity vectors are written out in full.
std::string format_config(const SystemConfig& config);

std::vector<std::string> split_list(const std::string& text, char sep = ',');
std::string trim(const std::string& text);

}  // namespace vodsim
