#pragma once

#include "fatigue/ingest.hpp"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace fatigue {

/// Generator for GazeBaseVR-shaped recordings with a known fatigue signal:
/// fatigued participants carry a slow sinusoidal drift and 1.5x the
/// positional noise, which shows up as 1.5x velocity noise.
struct SyntheticConfig {
  int participants = 40;
  double fatigued_fraction = 0.5;
  double duration_s = 20.0;
  std::vector<Task> tasks{kAllTasks.begin(), kAllTasks.end()};
  std::uint64_t seed = 1;

  double noise_dva = 0.1;           // per-sample positional noise sd
  double noise_jitter = 0.1;        // participant-level relative spread of the noise sd
  double fatigue_noise_scale = 1.5;
  double drift_dva = 1.5;           // drift amplitude, fatigued only
  double drift_hz_min = 0.05;
  double drift_hz_max = 0.2;
  double blink_rate_hz = 0.1;       // expected blinks per second
  int blink_min_samples = 10;
  int blink_max_samples = 20;
  bool with_positions = true;
  bool with_directions = false;
};

struct SyntheticDataset {
  std::vector<Recording> recordings;
  std::vector<SessionMeta> metas;
};

/// Deterministic for a given config. Participant ids are "1".."N"; the first
/// round(fatigued_fraction * N) after a seeded shuffle are fatigued.
SyntheticDataset generate_synthetic(const SyntheticConfig& cfg);

/// Writes S_<pid>_S1_<task>.csv files into `data_dir` and a metadata CSV.
void write_synthetic(const SyntheticDataset& ds, const std::filesystem::path& data_dir,
                     const std::filesystem::path& metadata_path);

}  // namespace fatigue
