#pragma once

#include "fatigue/ingest.hpp"
#include "fatigue/types.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace fatigue {

/// 3D gaze direction, z forward. Need not be unit length.
using GazeVector = Eigen::Vector3d;

struct GazeAngles {
  double horizontal = 0.0;  // dva
  double vertical = 0.0;    // dva
};

/// horizontal = deg(atan2(x, hypot(y, z))), vertical = deg(atan2(y, z)).
/// Throws Errc::ZeroVector for a zero or non-finite vector.
GazeAngles vector_to_angles(const GazeVector& v);

/// Unit vector whose angles are `a`; inverse of vector_to_angles for |angles| < 90.
GazeVector angles_to_vector(const GazeAngles& a);

enum class ChannelMode { CyclopeanPosVel, Binocular };
enum class Normalization { ZScoreTrainStats, None };

struct ChannelConfig {
  ChannelMode mode = ChannelMode::CyclopeanPosVel;
  Normalization normalization = Normalization::ZScoreTrainStats;
  double max_gap_interp_ms = 100.0;
  double max_missing_fraction = 0.25;

  static constexpr Index kChannels = 4;

  /// Throws Errc::InvalidConfig.
  void validate() const;
};

std::string_view to_string(ChannelMode m);
std::string_view to_string(Normalization n);

struct Window {
  std::string participant_id;
  Task task = Task::VRG;
  bool label = false;
  double start_ms = 0.0;
  int duration_s = 0;
  Eigen::MatrixXd data;  // 4 x (duration_s * 250), one row per channel

  Index length() const { return data.cols(); }
};

inline Index window_length(int duration_s) {
  return static_cast<Index>(duration_s) * static_cast<Index>(kSampleRateHz);
}

/// Linearly interpolates runs of missing angles no longer than
/// cfg.max_gap_interp_ms (run length x nominal interval). Runs touching either
/// end of the recording, or longer runs, stay missing. Filled samples are
/// flagged `repaired`.
Recording repair_gaps(const Recording& rec, const ChannelConfig& cfg);

/// Non-overlapping windows from the start of `rec` (expected to be repaired).
/// A window is dropped when it still holds a missing sample or when more than
/// cfg.max_missing_fraction of it was repaired; a trailing partial window is
/// dropped. Returns nothing when `meta` has no fatigue label.
std::vector<Window> make_windows(const Recording& rec, const SessionMeta& meta, int duration_s,
                                 const ChannelConfig& cfg);

/// repair_gaps + make_windows over every labelled recording of `task`,
/// restricted to `participants` when non-empty.
std::vector<Window> windows_for_task(const SessionIndex& index, Task task, int duration_s,
                                     const ChannelConfig& cfg,
                                     std::span<const std::string> participants = {});

struct Normalizer {
  Eigen::Vector4d mean = Eigen::Vector4d::Zero();
  Eigen::Vector4d stddev = Eigen::Vector4d::Ones();
};

inline constexpr double kStdFloor = 1e-8;

/// Per-channel mean and population standard deviation over every sample of
/// every window; stddev is floored at kStdFloor.
Normalizer fit_normalizer(std::span<const Window> train_windows);
Window apply_normalizer(const Window& w, const Normalizer& nrm);
void apply_normalizer_inplace(std::span<Window> windows, const Normalizer& nrm);

/// Binary window cache, little-endian:
///   char[8]  magic "GFWCACHE"
///   u32      version (1)
///   u32      dtype (8 = float64)
///   u64      config hash
///   u64      window count
///   u32      channels
///   per window:
///     u32 id length, id bytes, u8 task, u8 label, u32 duration_s,
///     f64 start_ms, u64 length, channels x length f64 (row-major)
struct WindowCache {
  std::uint64_t config_hash = 0;
  std::vector<Window> windows;
};

void write_window_cache(const std::filesystem::path& path, const WindowCache& cache);
WindowCache read_window_cache(const std::filesystem::path& path);

}  // namespace fatigue
