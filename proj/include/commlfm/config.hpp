#pragma once

#include <filesystem>
#include <string_view>

#include <json.hpp>

namespace commlfm {

// Parses flat TOML-style configuration into JSON:
//
//   # comment
//   seed = 7
//   mode = ["F", "X"]
//   [sbm]
//   p_in = 0.1
//
// Values are quoted strings, numbers, true/false, or one-line arrays of
// those. Bare words are taken as strings. A [section] header nests the keys
// that follow under that name.
nlohmann::json parse_key_value_config(std::string_view text);

// .json files are parsed as JSON, anything else as key/value text.
nlohmann::json load_config_file(const std::filesystem::path& path);

}  // namespace commlfm
