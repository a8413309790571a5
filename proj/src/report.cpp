#include "fatigue/report.hpp"

#include "fatigue/util.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

namespace fatigue::report {

namespace {

// [task][model in kAllModels order][window index]
using RefTable = std::array<std::array<double, 4>, 6>;
const std::map<Task, RefTable>& reference_tables() {
  static const std::map<Task, RefTable> tables = {
      {Task::PUR,
       {{{0.734, 0.945, 0.814, 0.673},
         {0.749, 0.804, 0.648, 0.802},
         {0.562, 0.758, 0.658, 0.728},
         {0.653, 0.779, 0.899, 0.919},
         {0.704, 0.749, 0.864, 0.834},
         {0.583, 0.603, 0.719, 0.588}}}},
      {Task::RAN,
       {{{0.744, 0.683, 0.915, 0.844},
         {0.563, 0.593, 0.588, 0.884},
         {0.643, 0.568, 0.603, 0.653},
         {0.553, 0.724, 0.905, 0.558},
         {0.655, 0.542, 0.688, 0.601},
         {0.633, 0.588, 0.562, 0.583}}}},
      {Task::TEX,
       {{{0.558, 0.618, 0.694, 0.603},
         {0.719, 0.708, 0.854, 0.895},
         {0.673, 0.589, 0.608, 0.623},
         {0.587, 0.788, 0.698, 0.904},
         {0.562, 0.910, 0.643, 0.859},
         {0.683, 0.578, 0.603, 0.598}}}},
      {Task::VID,
       {{{0.598, 0.583, 0.608, 0.538},
         {0.578, 0.929, 0.774, 0.915},
         {0.573, 0.729, 0.824, 0.553},
         {0.673, 0.618, 0.769, 0.930},
         {0.543, 0.914, 0.895, 0.935},
         {0.582, 0.653, 0.613, 0.578}}}},
      {Task::VRG,
       {{{0.824, 0.809, 0.835, 0.784},
         {0.608, 0.809, 0.925, 0.658},
         {0.563, 0.729, 0.638, 0.658},
         {0.788, 0.901, 0.915, 0.699},
         {0.774, 0.945, 0.869, 0.909},
         {0.513, 0.603, 0.563, 0.577}}}},
  };
  return tables;
}

std::optional<std::size_t> model_row(ModelKind m) {
  const auto it = std::find(kAllModels.begin(), kAllModels.end(), m);
  if (it == kAllModels.end()) return std::nullopt;
  return static_cast<std::size_t>(it - kAllModels.begin());
}

std::optional<std::size_t> window_col(int w) {
  const auto it = std::find(kWindowDurations.begin(), kWindowDurations.end(), w);
  if (it == kWindowDurations.end()) return std::nullopt;
  return static_cast<std::size_t>(it - kWindowDurations.begin());
}

std::string fixed(double v, int digits = 3) {
  if (!std::isfinite(v)) return "";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string t_cell(const std::optional<stats::StatResult>& r) {
  if (!r) return "n/a";
  std::ostringstream out;
  out << "t = " << fixed(r->t, 2) << ", p " << (r->p < 1e-4 ? "< 0.0001" : "= " + fixed(r->p, 4));
  return out.str();
}

std::string num(const std::optional<stats::StatResult>& r, bool p) {
  if (!r) return "";
  return util::format_double(p ? r->p : r->t);
}

}  // namespace

std::optional<double> reference_accuracy(Task task, ModelKind model, int window_s) {
  const auto& tables = reference_tables();
  const auto it = tables.find(task);
  const auto row = model_row(model);
  const auto col = window_col(window_s);
  if (it == tables.end() || !row || !col) return std::nullopt;
  return it->second[*row][*col];
}

Report build_report(std::span<const EvalResult> results) {
  Report rep;
  std::map<Task, AccuracyTable> by_task;
  for (const auto& r : results) {
    const auto row = model_row(r.model);
    const auto col = window_col(r.window_s);
    if (!row || !col) {
      rep.warnings.push_back("ignoring result with window " + std::to_string(r.window_s) + " s");
      continue;
    }
    auto& t = by_task[r.task];
    t.task = r.task;
    t.accuracy[*row][*col] = r.accuracy;
    t.auc[*row][*col] = r.auc;
  }
  for (Task task : kAllTasks) {
    const auto it = by_task.find(task);
    if (it == by_task.end()) {
      rep.warnings.push_back("no results for task " + std::string(to_string(task)));
      continue;
    }
    for (std::size_t m = 0; m < kAllModels.size(); ++m) {
      for (std::size_t w = 0; w < kWindowDurations.size(); ++w) {
        if (!it->second.accuracy[m][w]) {
          rep.warnings.push_back("missing result for " + std::string(to_string(task)) + " " +
                                 std::string(to_string(kAllModels[m])) + " " +
                                 std::to_string(kWindowDurations[w]) + " s");
        }
      }
    }
    rep.tables.push_back(it->second);
  }
  return rep;
}

std::string table_markdown(const AccuracyTable& t, bool with_reference) {
  std::ostringstream out;
  out << "### " << to_string(t.task) << " accuracy\n\n| Model |";
  for (int w : kWindowDurations) out << ' ' << w << " s |";
  out << "\n|---|";
  for (std::size_t w = 0; w < kWindowDurations.size(); ++w) out << "---|";
  out << '\n';
  for (std::size_t m = 0; m < kAllModels.size(); ++m) {
    out << "| " << (kAllModels[m] == ModelKind::TLENET ? "TLE-NET" : to_string(kAllModels[m]))
        << " |";
    for (std::size_t w = 0; w < kWindowDurations.size(); ++w) {
      out << ' ';
      if (const auto& a = t.accuracy[m][w]) out << fixed(*a);
      if (with_reference) {
        if (auto ref = reference_accuracy(t.task, kAllModels[m], kWindowDurations[w])) {
          out << " (ref " << fixed(*ref) << ')';
        }
      }
      out << " |";
    }
    out << '\n';
  }
  return out.str();
}

std::string table_csv(const AccuracyTable& t) {
  std::ostringstream out;
  out << "model";
  for (int w : kWindowDurations) out << ",acc_" << w << "s";
  for (int w : kWindowDurations) out << ",auc_" << w << "s";
  out << '\n';
  for (std::size_t m = 0; m < kAllModels.size(); ++m) {
    out << to_string(kAllModels[m]);
    for (const auto& a : t.accuracy[m]) out << ',' << (a ? util::format_double(*a) : "");
    for (const auto& a : t.auc[m]) {
      out << ',' << (a && std::isfinite(*a) ? util::format_double(*a) : "");
    }
    out << '\n';
  }
  return out.str();
}

std::string report_markdown(const Report& r, bool with_reference, const std::string& config_hash) {
  std::ostringstream out;
  out << "# Fatigue classification results\n\nConfig hash: `" << config_hash << "`\n\n";
  if (with_reference) {
    out << "Values in parentheses are the published accuracies, shown for comparison only.\n\n";
  }
  for (const auto& t : r.tables) out << table_markdown(t, with_reference) << '\n';
  if (!r.warnings.empty()) {
    out << "## Warnings\n\n";
    for (const auto& w : r.warnings) out << "- " << w << '\n';
  }
  return out.str();
}

std::string roc_csv(const EvalResult& r) {
  std::ostringstream out;
  out << "fpr,tpr\n";
  for (const auto& p : r.roc) {
    out << util::format_double(p.fpr) << ',' << util::format_double(p.tpr) << '\n';
  }
  return out.str();
}

void write_report(const Report& r, std::span<const EvalResult> results,
                  const std::filesystem::path& out_dir, bool with_reference,
                  const std::string& config_hash) {
  std::filesystem::create_directories(out_dir / "roc");
  util::write_file_atomic(out_dir / "report.md",
                          report_markdown(r, with_reference, config_hash));
  for (const auto& t : r.tables) {
    util::write_file_atomic(out_dir / ("table_" + std::string(to_string(t.task)) + ".csv"),
                            table_csv(t));
  }
  for (const auto& res : results) {
    const std::string name = std::string(to_string(res.task)) + "_" +
                             std::string(to_string(res.model)) + "_" +
                             std::to_string(res.window_s) + "s.csv";
    util::write_file_atomic(out_dir / "roc" / name, roc_csv(res));
  }
}

std::string variance_battery_csv(std::span<const stats::VarianceRow> rows) {
  std::ostringstream out;
  out << "task,eye,signal,n_no_fatigue,n_fatigue,mean_no_fatigue,mean_fatigue,"
         "welch_t,welch_df,welch_p,student_t,student_df,student_p,note\n";
  for (const auto& r : rows) {
    auto opt = [](const std::optional<stats::StatResult>& s, int field) -> std::string {
      if (!s) return "";
      return util::format_double(field == 0 ? s->t : field == 1 ? s->df : s->p);
    };
    std::string note = r.note;
    std::replace(note.begin(), note.end(), ',', ';');
    out << to_string(r.task) << ',' << stats::to_string(r.eye) << ','
        << stats::to_string(r.signal) << ',' << r.n_no_fatigue << ',' << r.n_fatigue << ','
        << (std::isfinite(r.mean_no_fatigue) ? util::format_double(r.mean_no_fatigue) : "")
        << ','
        << (std::isfinite(r.mean_fatigue) ? util::format_double(r.mean_fatigue) : "") << ','
        << opt(r.welch, 0) << ',' << opt(r.welch, 1) << ',' << opt(r.welch, 2) << ','
        << opt(r.pooled, 0) << ',' << opt(r.pooled, 1) << ',' << opt(r.pooled, 2) << ','
        << note << '\n';
  }
  return out.str();
}

std::string subjective_csv(std::span<const stats::SubjectiveRow> rows) {
  std::ostringstream out;
  out << "measure,group,n,pre_mean,post_mean,delta_mean,pre_group_t,pre_group_p,"
         "post_group_t,post_group_p,paired_t,paired_p,delta_group_t,delta_group_p\n";
  for (const auto& r : rows) {
    for (int g = 0; g < 2; ++g) {
      const auto& means = g == 0 ? r.no_fatigue : r.fatigue;
      const auto& paired = g == 0 ? r.paired_no_fatigue : r.paired_fatigue;
      auto m = [](double v) { return std::isfinite(v) ? util::format_double(v) : ""; };
      out << to_string(r.measure) << ',' << (g == 0 ? "no_fatigue" : "fatigue") << ','
          << means.n << ',' << m(means.pre) << ',' << m(means.post) << ',' << m(means.delta)
          << ',' << num(r.pre_group, false) << ',' << num(r.pre_group, true) << ','
          << num(r.post_group, false) << ',' << num(r.post_group, true) << ','
          << num(paired, false) << ',' << num(paired, true) << ','
          << num(r.delta_group, false) << ',' << num(r.delta_group, true) << '\n';
    }
  }
  return out.str();
}

std::string subjective_markdown(std::span<const stats::SubjectiveRow> rows) {
  std::ostringstream out;
  out << "| Measure | Group | Pre | Post | Delta | Pre-group t (p) | Post-group t (p) | "
         "Paired t (p) | Delta group t (p) |\n|---|---|---|---|---|---|---|---|---|\n";
  for (const auto& r : rows) {
    out << "| " << to_string(r.measure) << " | No fatigue | " << fixed(r.no_fatigue.pre, 2)
        << " | " << fixed(r.no_fatigue.post, 2) << " | " << fixed(r.no_fatigue.delta, 2)
        << " | " << t_cell(r.pre_group) << " | " << t_cell(r.post_group) << " | "
        << t_cell(r.paired_no_fatigue) << " | " << t_cell(r.delta_group) << " |\n";
    out << "| | Fatigue | " << fixed(r.fatigue.pre, 2) << " | " << fixed(r.fatigue.post, 2)
        << " | " << fixed(r.fatigue.delta, 2) << " | | | " << t_cell(r.paired_fatigue)
        << " | |\n";
  }
  return out.str();
}

std::string metadata_markdown(const stats::MetadataSummary& s, bool with_reference) {
  const ReferenceCohort ref;
  std::ostringstream out;
  auto hs = [](const std::optional<double>& v) { return v ? fixed(*v, 2) : std::string("n/a"); };
  out << "| Category | Count | Mean hours slept |" << (with_reference ? " Reference |" : "")
      << "\n|---|---|---|" << (with_reference ? "---|" : "") << '\n';
  out << "| Participants | " << s.participants << " | |"
      << (with_reference ? " " + std::to_string(ref.participants) + " |" : "") << '\n';
  out << "| Female | " << s.female << " | |" << (with_reference ? " |" : "") << '\n';
  out << "| Male | " << s.male << " | |" << (with_reference ? " |" : "") << '\n';
  out << "| No fatigue | " << s.non_fatigued << " | " << hs(s.hours_slept_non_fatigued) << " |"
      << (with_reference ? " " + std::to_string(ref.non_fatigued) + ", " +
                               fixed(ref.hours_slept_non_fatigued, 2) + " h |"
                         : "")
      << '\n';
  out << "| Fatigue | " << s.fatigued << " | " << hs(s.hours_slept_fatigued) << " |"
      << (with_reference ? " " + std::to_string(ref.fatigued) + ", " +
                               fixed(ref.hours_slept_fatigued, 2) + " h |"
                         : "")
      << '\n';
  if (s.unlabelled > 0) {
    out << "| Unlabelled | " << s.unlabelled << " | |" << (with_reference ? " |" : "") << '\n';
  }
  return out.str();
}

std::string variance_series_csv(std::span<const stats::VariancePoint> points) {
  std::ostringstream out;
  out << "task,eye,signal,group,time_s,variance,n\n";
  for (const auto& p : points) {
    out << to_string(p.task) << ',' << stats::to_string(p.eye) << ','
        << stats::to_string(p.signal) << ',' << (p.fatigued ? "fatigue" : "no_fatigue") << ','
        << util::format_double(p.time_s) << ',' << util::format_double(p.variance) << ','
        << p.n << '\n';
  }
  return out.str();
}

}  // namespace fatigue::report
