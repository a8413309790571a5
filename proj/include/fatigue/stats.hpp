#pragma once

#include "fatigue/ingest.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace fatigue::stats {

enum class TestKind { PairedT, TwoSampleT };
enum class VarianceForm { Welch, Pooled };

struct StatResult {
  TestKind kind = TestKind::TwoSampleT;
  double t = 0.0;
  double p = 1.0;  // two-sided
  double df = 0.0;
  std::size_t n1 = 0;
  std::size_t n2 = 0;
};

/// n - 1 denominator, two-pass. NaNs are not skipped. Needs n >= 2.
double sample_variance(std::span<const double> v);
double mean(std::span<const double> v);

/// Two-sided p-value of Student's t with `df` degrees of freedom.
double t_two_sided_p(double t, double df);

/// Paired t on d = a - b. Throws LengthMismatch, DegenerateTest.
StatResult paired_t(std::span<const double> a, std::span<const double> b);
/// t on mean(a) - mean(b); Welch by default. Throws DegenerateTest.
StatResult two_sample_t(std::span<const double> a, std::span<const double> b,
                        VarianceForm form = VarianceForm::Welch);

enum class Eye { Left, Right };
enum class Signal { Position, Orientation };
std::string_view to_string(Eye e);
std::string_view to_string(Signal s);

/// Sum of component sample variances over the recording: (lx, ly) or (rx, ry)
/// in dva^2 for orientation, the eye's 3D position in m^2 for position.
/// Missing samples are skipped. Throws MissingSignal when fewer than two
/// samples carry the signal.
double gaze_variance(const Recording& rec, Signal signal, Eye eye);

struct VarianceSummary {
  Task task = Task::VRG;
  Eye eye = Eye::Left;
  Signal signal = Signal::Position;
  std::vector<std::string> participants;
  std::vector<double> values;
  std::vector<bool> fatigued;
};

/// One value per labelled participant (mean over that participant's
/// recordings of the task). Recordings lacking the signal are skipped.
VarianceSummary summarize_variance(const SessionIndex& index, Task task, Signal signal, Eye eye);

struct VarianceRow {
  Task task = Task::VRG;
  Eye eye = Eye::Left;
  Signal signal = Signal::Position;
  double mean_no_fatigue = 0.0;
  double mean_fatigue = 0.0;
  std::size_t n_no_fatigue = 0;
  std::size_t n_fatigue = 0;
  std::optional<StatResult> welch;   // unset when degenerate or a group is too small
  std::optional<StatResult> pooled;
  std::string note;
};

/// 5 tasks x 2 eyes x 2 signals; non-fatigue minus fatigue.
std::vector<VarianceRow> variance_battery(const SessionIndex& index);

struct GroupMeans {
  double pre = 0.0;
  double post = 0.0;
  double delta = 0.0;  // post - pre
  std::size_t n = 0;
};

struct SubjectiveRow {
  Measure measure = Measure::Sleepiness;
  GroupMeans no_fatigue;
  GroupMeans fatigue;
  std::optional<StatResult> pre_group;      // no-fatigue vs fatigue, pre
  std::optional<StatResult> post_group;     // no-fatigue vs fatigue, post
  std::optional<StatResult> paired_no_fatigue;  // pre vs post
  std::optional<StatResult> paired_fatigue;
  std::optional<StatResult> delta_group;    // no-fatigue vs fatigue, post - pre
  std::vector<std::string> notes;
};

/// One row per measure. Participants need a label and both ratings of the
/// measure; a measure without any such participant is skipped and reported
/// in `warnings`. Degenerate tests are left unset with a note.
std::vector<SubjectiveRow> subjective_battery(std::span<const SessionMeta> metas,
                                              VarianceForm form,
                                              std::vector<std::string>& warnings);

struct MetadataSummary {
  std::size_t participants = 0;
  std::size_t fatigued = 0;
  std::size_t non_fatigued = 0;
  std::size_t unlabelled = 0;
  std::optional<double> hours_slept_fatigued;
  std::optional<double> hours_slept_non_fatigued;
  std::optional<double> mean_age;
  std::size_t female = 0;
  std::size_t male = 0;
};

/// Per unique participant (first metadata row wins).
MetadataSummary summarize_metadata(std::span<const SessionMeta> metas);

struct VariancePoint {
  Task task = Task::VRG;
  Eye eye = Eye::Left;
  Signal signal = Signal::Position;
  bool fatigued = false;
  double time_s = 0.0;  // window start
  double variance = 0.0;  // group mean
  std::size_t n = 0;
};

/// Sliding-window variance (window_s, stride_s), averaged per group and
/// window start. Windows with fewer than two valid samples are skipped.
std::vector<VariancePoint> variance_series(const SessionIndex& index, Task task, Signal signal,
                                           Eye eye, double window_s = 1.0,
                                           double stride_s = 0.5);

}  // namespace fatigue::stats
