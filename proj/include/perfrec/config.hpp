#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "perfrec/perform.hpp"

namespace perfrec {

/// Flat `key = value` experiment file; `#` starts a comment. `setting` and
/// `method` accept comma-separated lists, giving one config per combination.
/// Relative paths resolve against `base_dir`. Errors are InputErrors naming
/// the line or the field.
std::vector<ExperimentConfig> parse_config(std::string_view text, const std::filesystem::path& base_dir = {});
std::vector<ExperimentConfig> load_config(const std::filesystem::path& path);

/// Resolved key/value pairs in file order; `to_conf` renders them so that
/// parsing the output reproduces the config.
std::vector<std::pair<std::string, std::string>> config_entries(const ExperimentConfig& config);
std::string to_conf(const ExperimentConfig& config);

/// "40-44", "40,41,45" or a mix.
std::vector<std::uint64_t> parse_seed_list(std::string_view text);

}  // namespace perfrec
