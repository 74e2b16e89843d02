#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "safer/solvers.hpp"

namespace safer::app {

inline constexpr int kConfigSchema = 1;

/// Everything one run needs. Read from a line-oriented `[section]` /
/// `key = value` file; lists are comma separated.
struct RunConfig {
  // [data]
  std::filesystem::path interactions;  ///< raw triplet log, split in-process
  std::string format = "tsv";
  std::optional<double> min_rating;
  std::filesystem::path split_dir;     ///< a written split bundle; wins over `interactions`

  // [split]
  std::size_t holdout_users = 50;
  double foldin_fraction = 0.8;
  std::uint64_t split_seed = 0;

  // [solver]
  SolverConfig solver;

  // [eval]
  std::vector<std::size_t> ks{10, 20, 50};
  std::vector<double> tail_alphas{0.3, 1.0};
  std::string validation_metric = "recall@20";
  double validation_alpha = 1.0;       ///< 1.0 selects by the mean

  // [run]
  std::uint64_t seed = 0;              ///< drives initialization and xi subsampling
  int threads = 0;                     ///< 0 means hardware parallelism
  bool deterministic = true;
  std::filesystem::path out = "out";
  int checkpoint_every = 0;            ///< 0 writes only the final checkpoint

  void validate(bool check_paths = true) const;
};

/// Applies one `section.key = value` setting. Throws ConfigError on unknown
/// keys or malformed values.
void apply_setting(RunConfig& config, const std::string& key, const std::string& value,
                   const std::filesystem::path& base_dir = {});

/// Parsed `section.key -> raw value` pairs, in file order.
std::vector<std::pair<std::string, std::string>> parse_key_values(const std::string& text);

RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);
std::string serialize_config(const RunConfig& config);

/// FNV-1a 64 of the serialized config.
std::uint64_t config_hash(const RunConfig& config);
std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t value);

std::vector<std::string> split_list(const std::string& value);

}  // namespace safer::app
