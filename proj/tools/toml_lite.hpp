#pragma once

#include <string>

#include <json.hpp>

namespace hfr::cli {

/// Parses the TOML subset used by experiment configs into a JSON tree:
/// comments, `key = value`, [table], [a.b] and [[array-of-tables]] headers,
/// basic strings, integers, floats, booleans and (nested) arrays. Inline
/// tables, dates and multi-line strings are rejected.
///
/// Throws hfr::Error (config kind) with the offending line number.
nlohmann::json parse_toml(const std::string& text);

nlohmann::json parse_toml_file(const std::string& path);

}  // namespace hfr::cli
