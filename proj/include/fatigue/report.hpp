#pragma once

#include "fatigue/stats.hpp"
#include "fatigue/train.hpp"

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace fatigue::report {

/// Published window-level accuracy for a cell (the PUR EKYT 20 s entry is
/// printed as "0,673" in the source and read as 0.673).
std::optional<double> reference_accuracy(Task task, ModelKind model, int window_s);

/// Published cohort figures used for the metadata comparison.
struct ReferenceCohort {
  std::size_t participants = 407;
  std::size_t fatigued = 230;
  std::size_t non_fatigued = 177;
  double hours_slept_fatigued = 6.83;
  double hours_slept_non_fatigued = 7.32;
};

/// Rows follow kAllModels, columns kWindowDurations.
struct AccuracyTable {
  Task task = Task::VRG;
  std::array<std::array<std::optional<double>, 4>, 6> accuracy{};
  std::array<std::array<std::optional<double>, 4>, 6> auc{};
};

struct Report {
  std::vector<AccuracyTable> tables;
  std::vector<std::string> warnings;
};

/// One table per task that has any result; each missing cell of such a table
/// adds one warning.
Report build_report(std::span<const EvalResult> results);

std::string table_markdown(const AccuracyTable& t, bool with_reference);
std::string table_csv(const AccuracyTable& t);
std::string report_markdown(const Report& r, bool with_reference, const std::string& config_hash);
/// fpr,tpr per line.
std::string roc_csv(const EvalResult& r);

/// report.md, table_<TASK>.csv and roc/<TASK>_<MODEL>_<W>s.csv under `out_dir`.
void write_report(const Report& r, std::span<const EvalResult> results,
                  const std::filesystem::path& out_dir, bool with_reference,
                  const std::string& config_hash);

std::string variance_battery_csv(std::span<const stats::VarianceRow> rows);
/// Two rows per measure (no fatigue, fatigue); the group tests repeat on both.
std::string subjective_csv(std::span<const stats::SubjectiveRow> rows);
std::string subjective_markdown(std::span<const stats::SubjectiveRow> rows);
std::string metadata_markdown(const stats::MetadataSummary& s, bool with_reference);
std::string variance_series_csv(std::span<const stats::VariancePoint> points);

}  // namespace fatigue::report
