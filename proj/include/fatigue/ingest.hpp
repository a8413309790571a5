#pragma once

#include "fatigue/types.hpp"

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace fatigue {

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

/// One row of a recording. Angles are in degrees of visual angle; a missing
/// angle is NaN, never zero.
struct GazeSample {
  double n = 0.0;  // ms
  double x = kMissing;
  double y = kMissing;
  double lx = kMissing;
  double ly = kMissing;
  double rx = kMissing;
  double ry = kMissing;
  std::optional<Eigen::Vector3d> pos_l, pos_r;  // meters
  std::optional<Eigen::Vector3d> dir_l, dir_r;  // unit vectors
  bool repaired = false;

  bool gap() const {
    return std::isnan(x) || std::isnan(y) || std::isnan(lx) || std::isnan(ly) ||
           std::isnan(rx) || std::isnan(ry);
  }
};

struct Recording {
  std::string participant_id;
  std::string session_id;
  Task task = Task::VRG;
  double sample_rate_hz = kSampleRateHz;
  std::vector<GazeSample> samples;

  double duration_ms() const {
    return samples.empty() ? 0.0 : samples.back().n - samples.front().n + 1000.0 / sample_rate_hz;
  }
  std::size_t gap_count() const;
};

/// Maps CSV header names onto sample roles. Defaults follow the public
/// GazeBaseVR release.
struct ColumnSchema {
  std::string n = "n";
  std::string x = "x", y = "y";
  std::string lx = "lx", ly = "ly";
  std::string rx = "rx", ry = "ry";
  std::array<std::string, 3> pos_l = {"clx", "cly", "clz"};
  std::array<std::string, 3> pos_r = {"crx", "cry", "crz"};
  std::array<std::string, 3> dir_l = {"dlx", "dly", "dlz"};
  std::array<std::string, 3> dir_r = {"drx", "dry", "drz"};
  /// Capture groups: participant, session, task.
  std::string filename_pattern = R"(S_(\d+)_S(\d+)_(?:\d+_)?(VRG|PUR|VID|TEX|RAN)\.csv)";
  double sample_rate_hz = kSampleRateHz;
};

struct ParseReport {
  std::string path;
  std::size_t rows = 0;
  std::size_t gaps = 0;
  std::size_t duplicates_dropped = 0;
  std::vector<std::string> warnings;
  std::vector<std::string> errors;

  /// One JSON object on a single line.
  std::string to_json_line() const;
};

struct RecordingKey {
  std::string participant_id;
  std::string session_id;
  Task task = Task::VRG;
};

std::optional<RecordingKey> key_from_filename(const std::string& filename,
                                              const ColumnSchema& schema);

Recording parse_recording(std::istream& in, const RecordingKey& key, const ColumnSchema& schema,
                          ParseReport& report);
Recording parse_recording(const std::filesystem::path& path, const ColumnSchema& schema,
                          ParseReport& report);

/// Writes the columns present in `rec` using the schema's header names.
/// Values are printed in shortest round-trip form.
void write_recording_csv(const Recording& rec, std::ostream& out,
                         const ColumnSchema& schema = {});

enum class Gender { Female, Male, Other, Unknown };

/// Closed ranges of the five subjective scales.
enum class Measure { Sleepiness, NeckFatigue, PhysicalComfort, MentalEffort, PhysicalEffort };
inline constexpr std::array<Measure, 5> kAllMeasures = {
    Measure::Sleepiness, Measure::NeckFatigue, Measure::PhysicalComfort, Measure::MentalEffort,
    Measure::PhysicalEffort};
std::string_view to_string(Measure m);
std::pair<double, double> measure_range(Measure m);

struct Rating {
  std::optional<double> pre;
  std::optional<double> post;
};

struct SessionMeta {
  std::string participant_id;
  std::string session_id;
  std::optional<double> age;
  Gender gender = Gender::Unknown;
  std::optional<bool> fatigue_label;
  std::optional<double> hours_slept;
  std::array<Rating, 5> subjective{};

  const Rating& rating(Measure m) const { return subjective[static_cast<std::size_t>(m)]; }
};

struct MetadataSchema {
  std::string participant_id = "participant_id";
  std::string session_id = "session_id";
  std::string age = "age";
  std::string gender = "gender";
  std::string fatigue = "fatigue";
  std::string hours_slept = "hours_slept";
  /// Pre/post column names, indexed by Measure.
  std::array<std::pair<std::string, std::string>, 5> ratings = {{
      {"sleepiness_pre", "sleepiness_post"},
      {"neck_fatigue_pre", "neck_fatigue_post"},
      {"physical_comfort_pre", "physical_comfort_post"},
      {"mental_effort_pre", "mental_effort_post"},
      {"physical_effort_pre", "physical_effort_post"},
  }};
};

/// Rows without a usable fatigue label are kept with `fatigue_label` unset and
/// a warning appended. Out-of-range ratings are dropped with a warning.
std::vector<SessionMeta> load_metadata(std::istream& in, const MetadataSchema& schema,
                                       std::vector<std::string>& warnings);
std::vector<SessionMeta> load_metadata(const std::filesystem::path& path,
                                       const MetadataSchema& schema,
                                       std::vector<std::string>& warnings);

/// Recordings joined to metadata, bucketed by (participant, task).
class SessionIndex {
 public:
  struct Entry {
    std::size_t recording;
    std::optional<std::size_t> meta;
  };

  SessionIndex() = default;
  SessionIndex(std::vector<Recording> recordings, std::vector<SessionMeta> metas);

  std::vector<Entry> lookup(const std::string& participant_id, Task task) const;
  const Recording& recording(std::size_t i) const { return recordings_[i]; }
  const SessionMeta* meta(const Entry& e) const {
    return e.meta ? &metas_[*e.meta] : nullptr;
  }
  const std::vector<Recording>& recordings() const { return recordings_; }
  const std::vector<SessionMeta>& metas() const { return metas_; }

  /// Participants with at least one recording of `task`, sorted.
  std::vector<std::string> participants(Task task) const;
  /// Metadata for a participant (first session on record), if any.
  const SessionMeta* participant_meta(const std::string& participant_id) const;

  std::size_t size() const { return buckets_.size(); }
  bool empty() const { return buckets_.empty(); }
  const std::map<std::pair<std::string, Task>, std::vector<Entry>>& buckets() const {
    return buckets_;
  }
  /// Recording indices whose participant has no metadata row.
  const std::vector<std::size_t>& orphans() const { return orphans_; }

 private:
  std::vector<Recording> recordings_;
  std::vector<SessionMeta> metas_;
  std::map<std::pair<std::string, Task>, std::vector<Entry>> buckets_;
  std::vector<std::size_t> orphans_;
};

SessionIndex index_sessions(std::vector<Recording> recordings, std::vector<SessionMeta> metas);

struct Dataset {
  SessionIndex index;
  std::vector<ParseReport> reports;
  std::vector<std::string> warnings;
  std::size_t failed_files = 0;
  /// file count, total rows and FNV-1a checksum of the file bytes
  std::size_t file_count = 0;
  std::size_t total_rows = 0;
  std::uint64_t checksum = 0;
};

/// Parses every `*.csv` under `data_dir` whose name matches the schema's
/// filename pattern. Unparseable files are recorded and skipped.
Dataset load_dataset(const std::filesystem::path& data_dir,
                     const std::filesystem::path& metadata_path, const ColumnSchema& schema,
                     const MetadataSchema& meta_schema);

}  // namespace fatigue
