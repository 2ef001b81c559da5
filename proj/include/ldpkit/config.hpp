#pragma once

#include <string>

#include "json.hpp"

namespace ldpkit {

using json = nlohmann::json;

// Experiment configs are TOML (the hand-edited format) or JSON; both normalize
// to one json tree. The TOML subset: [section] / [dotted.section] headers,
// dotted keys, strings ("..." with escapes, '...' literal), booleans, integers,
// floats, nested arrays (may span lines), # comments. Errors carry
// file:line/field diagnostics and throw config_error.
json parse_config_text(const std::string& text, const std::string& name);
json load_config(const std::string& path);

// Serialize the tree back to TOML (round-trips through parse_config_text).
std::string to_toml(const json& tree);

// Apply a CLI override "a.b.c" = value_text (parsed like a TOML value; bare
// words become strings). Creates intermediate tables as needed.
void apply_override(json& tree, const std::string& dotted_key, const std::string& value_text);

// Field access with path diagnostics ("missing field 'model.nu'").
const json* find_path(const json& tree, const std::string& dotted_path);
json require_path(const json& tree, const std::string& dotted_path);
double require_number(const json& tree, const std::string& dotted_path);
std::string require_string(const json& tree, const std::string& dotted_path);
double number_or(const json& tree, const std::string& dotted_path, double fallback);
long long integer_or(const json& tree, const std::string& dotted_path, long long fallback);
std::string string_or(const json& tree, const std::string& dotted_path,
                      const std::string& fallback);
bool bool_or(const json& tree, const std::string& dotted_path, bool fallback);

// FNV-1a over the canonical (sorted-key) dump; the manifest's config hash.
std::uint64_t config_hash(const json& tree);

}  // namespace ldpkit
