#pragma once

#include "fatigue/config.hpp"
#include "fatigue/ingest.hpp"
#include "fatigue/train.hpp"

#include <json.hpp>

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace fatigue {

struct CellId {
  Task task = Task::VRG;
  ModelKind model = ModelKind::EKYT;
  int window_s = 5;

  /// "PUR_EKYT_10s"
  std::string str() const;
  auto operator<=>(const CellId&) const = default;
};

struct DatasetFingerprint {
  std::size_t file_count = 0;
  std::size_t total_rows = 0;
  std::uint64_t checksum = 0;

  static DatasetFingerprint of(const Dataset& ds) {
    return {ds.file_count, ds.total_rows, ds.checksum};
  }
  bool operator==(const DatasetFingerprint&) const = default;
};

struct RunManifest {
  std::string config_hash;
  DatasetFingerprint dataset;
  std::vector<std::string> completed;  // sorted cell ids
  std::map<std::string, std::string> failed;
  std::string tool_version = kToolVersion;
  std::string created;
  std::string updated;
  nlohmann::json config;

  nlohmann::json to_json() const;
  static RunManifest from_json(const nlohmann::json& j);
  bool is_completed(const std::string& id) const;
};

std::optional<RunManifest> read_manifest(const std::filesystem::path& results_dir);
void write_manifest(const std::filesystem::path& results_dir, const RunManifest& m);

/// Training and test windows of one (task, window length), split by
/// participant and normalized with statistics of the training windows.
struct CellData {
  Task task = Task::VRG;
  int window_s = 5;
  UserSplit split;
  Normalizer normalizer;
  std::vector<Window> train;
  std::vector<Window> test;
};

/// Splits the participants that own at least one window. Throws
/// EmptyTrainingSet / EmptyTestSet / TooFewParticipants, and InvalidSpec if a
/// participant would land on both sides.
CellData split_windows(std::vector<Window> windows, Task task, int window_s,
                       const TrainConfig& cfg);

/// Raw windows for (task, window), read from `cache_dir` when a cache with
/// a matching key exists, otherwise built from `index` and cached. An empty
/// cache_dir disables caching.
std::vector<Window> load_or_build_windows(const SessionIndex& index, Task task, int window_s,
                                          const RunConfig& cfg, std::uint64_t dataset_checksum);
std::uint64_t window_cache_key(const RunConfig& cfg, Task task, int window_s,
                               std::uint64_t dataset_checksum);
std::filesystem::path window_cache_path(const std::filesystem::path& cache_dir, Task task,
                                        int window_s);

struct CellOutput {
  EvalResult result;
  double train_accuracy = 0.0;
  std::size_t n_train_windows = 0;
  std::size_t n_train_participants = 0;
  nlohmann::json checkpoint;  // null unless requested
};

using ProgressFn = std::function<void(const std::string&)>;

/// Builds, trains and evaluates one model on prepared data.
CellOutput run_cell(const CellData& data, ModelKind model, const TrainConfig& cfg,
                    const std::string& config_hash, bool keep_checkpoint = false,
                    const EpochCallback& on_epoch = {});

nlohmann::json eval_to_json(const EvalResult& r);
EvalResult eval_from_json(const nlohmann::json& j);

struct GridOptions {
  /// Start from scratch when the stored manifest's hash or dataset differ,
  /// deleting previous cell files; otherwise such a mismatch is an error.
  bool restart = false;
  ProgressFn log;
};

struct GridSummary {
  std::size_t trained = 0;
  std::size_t skipped = 0;  // already complete
  std::size_t failed = 0;
  bool stopped_early = false;  // max_new_cells reached
  std::vector<std::string> failures;
};

/// Runs every (task, model, window) cell of cfg.grid not yet recorded in the
/// manifest. Each finished cell is written to cells/<id>.json and then the
/// manifest is updated atomically, so an interrupted run resumes where it
/// stopped. results.csv is rewritten from all completed cells at the end.
/// Throws InvalidConfig on a manifest mismatch unless opts.restart.
GridSummary run_grid(const SessionIndex& index, const RunConfig& cfg,
                     const DatasetFingerprint& fingerprint, const GridOptions& opts = {});

/// Completed cells in canonical order (task, model table order, window).
std::vector<EvalResult> load_results(const std::filesystem::path& results_dir);
std::string results_csv(const std::vector<EvalResult>& results);

}  // namespace fatigue
