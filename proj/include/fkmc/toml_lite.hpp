#pragma once

#include <string>

#include "json.hpp"

namespace fkmc::toml {

/// Parse a TOML subset into a JSON object. Supported: `[table]` and
/// `[dotted.table]` headers, `key = value` pairs with bare or dotted keys,
/// basic "..." strings (\\, \", \n, \t escapes), booleans, integers,
/// floats, and (possibly multi-line) arrays of those. Comments start at an
/// unquoted '#'. Duplicate keys and anything outside the subset raise
/// std::runtime_error with the line number.
nlohmann::json parse(const std::string& text);

/// parse() applied to a file's contents; missing file raises.
nlohmann::json parse_file(const std::string& path);

}  // namespace fkmc::toml
