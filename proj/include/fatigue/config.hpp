#pragma once

#include "fatigue/ingest.hpp"
#include "fatigue/models.hpp"
#include "fatigue/train.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace fatigue {

struct GridConfig {
  std::vector<Task> tasks{kAllTasks.begin(), kAllTasks.end()};
  std::vector<ModelKind> models{kAllModels.begin(), kAllModels.end()};
  std::vector<int> windows{kWindowDurations.begin(), kWindowDurations.end()};
  int workers = 1;
  /// Stop after training this many new cells; 0 means no limit.
  std::size_t max_new_cells = 0;
};

/// Everything a run needs. Loaded from JSON; absent keys keep their defaults.
struct RunConfig {
  std::filesystem::path data_dir;
  std::filesystem::path metadata;
  std::filesystem::path cache_dir = "cache";
  std::filesystem::path results_dir = "results";
  ColumnSchema schema;
  MetadataSchema metadata_schema;
  TrainConfig train;
  GridConfig grid;

  /// Hash over the settings that determine results (schema, channels,
  /// training); paths and grid selection are excluded.
  std::string config_hash() const;
  nlohmann::json to_json() const;
};

RunConfig run_config_from_json(const nlohmann::json& j);
/// Reads a JSON config file, then applies FATIGUE_CACHE_DIR and
/// FATIGUE_RESULTS_DIR when set. Throws Errc::InvalidConfig / Errc::Io.
RunConfig load_run_config(const std::filesystem::path& path);
void apply_env_overrides(RunConfig& cfg);

inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace fatigue
