// Command-line front end: ingest, windows, train, grid, stats, report, synth.
//
// Exit codes: 0 success, 1 fatal error, 2 partial success (some files or
// cells failed, or a report has blanks).

#include "fatigue/checkpoint.hpp"
#include "fatigue/config.hpp"
#include "fatigue/grid.hpp"
#include "fatigue/report.hpp"
#include "fatigue/stats.hpp"
#include "fatigue/synthetic.hpp"
#include "fatigue/util.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <fstream>
#include <iostream>
#include <set>

namespace fs = std::filesystem;
using namespace fatigue;

namespace {

constexpr int kOk = 0;
constexpr int kFatal = 1;
constexpr int kPartial = 2;

struct Overrides {
  std::string config;
  std::string data_dir, metadata, cache_dir, results_dir;
  std::optional<int> epochs, batch_size, workers;
  std::optional<double> lr;
  std::optional<std::uint64_t> seed;
  std::string precision;
  std::vector<std::string> tasks, models;
  std::vector<int> windows;
};

RunConfig resolve_config(const Overrides& o) {
  RunConfig cfg;
  if (!o.config.empty()) {
    cfg = load_run_config(o.config);
  } else {
    apply_env_overrides(cfg);
  }
  if (!o.data_dir.empty()) cfg.data_dir = o.data_dir;
  if (!o.metadata.empty()) cfg.metadata = o.metadata;
  if (!o.cache_dir.empty()) cfg.cache_dir = o.cache_dir;
  if (!o.results_dir.empty()) cfg.results_dir = o.results_dir;
  if (o.epochs) cfg.train.epochs = *o.epochs;
  if (o.batch_size) cfg.train.batch_size = *o.batch_size;
  if (o.workers) cfg.grid.workers = *o.workers;
  if (o.lr) cfg.train.learning_rate = *o.lr;
  if (o.seed) cfg.train.seed = *o.seed;
  if (!o.precision.empty()) {
    if (o.precision == "float32") {
      cfg.train.precision = Precision::Float32;
    } else if (o.precision == "float64") {
      cfg.train.precision = Precision::Float64;
    } else {
      throw Error(Errc::InvalidConfig, "precision must be float32 or float64");
    }
  }
  if (!o.tasks.empty()) {
    cfg.grid.tasks.clear();
    for (const auto& t : o.tasks) {
      auto task = parse_task(t);
      if (!task) throw Error(Errc::InvalidConfig, "unknown task '" + t + "'");
      cfg.grid.tasks.push_back(*task);
    }
  }
  if (!o.models.empty()) {
    cfg.grid.models.clear();
    for (const auto& m : o.models) {
      auto kind = parse_model_kind(m);
      if (!kind) throw Error(Errc::InvalidConfig, "unknown model '" + m + "'");
      cfg.grid.models.push_back(*kind);
    }
  }
  if (!o.windows.empty()) cfg.grid.windows = o.windows;
  // re-validate the merged result
  return run_config_from_json(cfg.to_json());
}

Dataset load(const RunConfig& cfg) {
  if (cfg.data_dir.empty()) throw Error(Errc::InvalidConfig, "no data directory given");
  spdlog::info("loading recordings from {}", cfg.data_dir.string());
  Dataset ds = load_dataset(cfg.data_dir, cfg.metadata, cfg.schema, cfg.metadata_schema);
  for (const auto& w : ds.warnings) spdlog::warn("{}", w);
  if (ds.file_count == 0) throw Error(Errc::Io, "no recordings found in " + cfg.data_dir.string());
  spdlog::info("{} files, {} rows, {} failed", ds.file_count, ds.total_rows, ds.failed_files);
  return ds;
}

Task require_task(const std::string& s) {
  auto t = parse_task(s);
  if (!t) throw Error(Errc::InvalidConfig, "unknown task '" + s + "'");
  return *t;
}

int cmd_ingest(const RunConfig& cfg, bool build_windows) {
  Dataset ds = load(cfg);
  fs::create_directories(cfg.cache_dir);
  std::ostringstream report;
  for (const auto& r : ds.reports) {
    report << r.to_json_line() << '\n';
    for (const auto& e : r.errors) spdlog::error("{}: {}", r.path, e);
  }
  util::write_file_atomic(cfg.cache_dir / "parse_report.jsonl", report.str());
  spdlog::info("parse report written to {}", (cfg.cache_dir / "parse_report.jsonl").string());
  if (build_windows) {
    for (Task task : cfg.grid.tasks) {
      for (int w : cfg.grid.windows) {
        const auto windows = load_or_build_windows(ds.index, task, w, cfg, ds.checksum);
        spdlog::info("{} {} s: {} windows cached", to_string(task), w, windows.size());
      }
    }
  }
  if (ds.failed_files == ds.file_count) return kFatal;
  return ds.failed_files > 0 ? kPartial : kOk;
}

int cmd_windows(const RunConfig& cfg, const std::string& task_name, int window_s,
                const std::string& out) {
  const Task task = require_task(task_name);
  Dataset ds = load(cfg);
  auto windows = load_or_build_windows(ds.index, task, window_s, cfg, ds.checksum);
  std::set<std::string> people;
  std::size_t fatigued = 0;
  for (const auto& w : windows) {
    people.insert(w.participant_id);
    fatigued += w.label ? 1 : 0;
  }
  std::cout << to_string(task) << ' ' << window_s << " s: " << windows.size() << " windows ("
            << fatigued << " fatigue, " << windows.size() - fatigued << " no fatigue) from "
            << people.size() << " participants\n";
  if (!out.empty()) {
    WindowCache cache;
    cache.config_hash = window_cache_key(cfg, task, window_s, ds.checksum);
    cache.windows = std::move(windows);
    write_window_cache(out, cache);
    spdlog::info("windows written to {}", out);
  }
  return kOk;
}

int cmd_train(const RunConfig& cfg, const std::string& task_name, const std::string& model_name,
              int window_s, const std::string& checkpoint, const std::string& out) {
  const Task task = require_task(task_name);
  const auto model = parse_model_kind(model_name);
  if (!model) throw Error(Errc::InvalidConfig, "unknown model '" + model_name + "'");
  Dataset ds = load(cfg);
  CellData data = split_windows(load_or_build_windows(ds.index, task, window_s, cfg, ds.checksum),
                                task, window_s, cfg.train);
  spdlog::info("{} train / {} test windows", data.train.size(), data.test.size());
  const std::string hash = cfg.config_hash();
  CellOutput cell = run_cell(data, *model, cfg.train, hash, !checkpoint.empty(),
                             [](int epoch, double loss) {
                               spdlog::debug("epoch {} loss {:.6f}", epoch + 1, loss);
                               return true;
                             });
  auto j = eval_to_json(cell.result);
  j["train_accuracy"] = cell.train_accuracy;
  j["config"] = cfg.to_json();
  if (!checkpoint.empty()) {
    util::write_file_atomic(checkpoint, cell.checkpoint.dump() + "\n");
    spdlog::info("checkpoint written to {}", checkpoint);
  }
  if (!out.empty()) util::write_file_atomic(out, j.dump(2) + "\n");
  std::cout << to_string(task) << ' ' << to_string(*model) << ' ' << window_s
            << " s: accuracy " << cell.result.accuracy << ", AUC " << cell.result.auc
            << ", train accuracy " << cell.train_accuracy << '\n';
  return kOk;
}

int cmd_grid(RunConfig cfg, bool restart, std::optional<std::size_t> max_new) {
  if (max_new) cfg.grid.max_new_cells = *max_new;
  Dataset ds = load(cfg);
  GridOptions opts;
  opts.restart = restart;
  opts.log = [](const std::string& msg) { spdlog::info("{}", msg); };
  const GridSummary s = run_grid(ds.index, cfg, DatasetFingerprint::of(ds), opts);
  std::cout << s.trained << " trained, " << s.skipped << " already complete, " << s.failed
            << " failed" << (s.stopped_early ? " (stopped at the cell limit)" : "") << '\n';
  std::cout << "results: " << (cfg.results_dir / "results.csv").string() << '\n';
  return s.failed > 0 ? kPartial : kOk;
}

int cmd_stats(const RunConfig& cfg, bool student, bool reference, const std::string& out_dir) {
  Dataset ds = load(cfg);
  const fs::path out = out_dir.empty() ? cfg.results_dir / "stats" : fs::path(out_dir);
  fs::create_directories(out);
  const auto& metas = ds.index.metas();
  const auto summary = stats::summarize_metadata(metas);
  util::write_file_atomic(out / "metadata.md", report::metadata_markdown(summary, reference));

  const auto battery = stats::variance_battery(ds.index);
  util::write_file_atomic(out / "variance_battery.csv", report::variance_battery_csv(battery));

  std::vector<std::string> warnings;
  const auto subjective = stats::subjective_battery(
      metas, student ? stats::VarianceForm::Pooled : stats::VarianceForm::Welch, warnings);
  util::write_file_atomic(out / "subjective.csv", report::subjective_csv(subjective));
  util::write_file_atomic(out / "subjective.md", report::subjective_markdown(subjective));
  for (const auto& row : subjective) {
    for (const auto& n : row.notes) warnings.push_back(std::string(to_string(row.measure)) + ": " + n);
  }

  std::vector<stats::VariancePoint> series;
  for (Task task : kAllTasks) {
    for (auto eye : {stats::Eye::Left, stats::Eye::Right}) {
      for (auto signal : {stats::Signal::Position, stats::Signal::Orientation}) {
        auto pts = stats::variance_series(ds.index, task, signal, eye);
        series.insert(series.end(), pts.begin(), pts.end());
      }
    }
  }
  util::write_file_atomic(out / "variance_series.csv", report::variance_series_csv(series));
  util::write_file_atomic(out / "config.json", cfg.to_json().dump(2) + "\n");
  for (const auto& w : warnings) spdlog::warn("{}", w);
  std::cout << report::metadata_markdown(summary, reference) << '\n'
            << report::subjective_markdown(subjective);
  std::cout << "statistics written to " << out.string() << '\n';
  return kOk;
}

int cmd_report(const RunConfig& cfg, bool reference, const std::string& out_dir) {
  const auto manifest = read_manifest(cfg.results_dir);
  if (!manifest) throw Error(Errc::Io, "no manifest in " + cfg.results_dir.string());
  const auto results = load_results(cfg.results_dir);
  const auto rep = report::build_report(results);
  const fs::path out = out_dir.empty() ? cfg.results_dir / "report" : fs::path(out_dir);
  report::write_report(rep, results, out, reference, manifest->config_hash);
  for (const auto& w : rep.warnings) spdlog::warn("{}", w);
  std::cout << report::report_markdown(rep, reference, manifest->config_hash);
  return rep.warnings.empty() ? kOk : kPartial;
}

int cmd_synth(const std::string& out, const SyntheticConfig& sc) {
  const auto ds = generate_synthetic(sc);
  write_synthetic(ds, fs::path(out) / "data", fs::path(out) / "metadata.csv");
  std::cout << ds.recordings.size() << " recordings for " << ds.metas.size()
            << " participants written to " << out << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_mt("fatigue"));
  spdlog::set_pattern("[%l] %v");

  CLI::App app{"Visual-fatigue detection from VR eye-gaze recordings"};
  app.require_subcommand(1);
  Overrides o;
  bool verbose = false;
  app.add_option("-c,--config", o.config, "JSON configuration file");
  app.add_option("--data-dir", o.data_dir, "Directory of recording CSVs");
  app.add_option("--metadata", o.metadata, "Participant metadata CSV");
  app.add_option("--cache-dir", o.cache_dir, "Window cache directory");
  app.add_option("--results-dir", o.results_dir, "Results directory");
  app.add_option("--epochs", o.epochs);
  app.add_option("--batch-size", o.batch_size);
  app.add_option("--lr", o.lr, "Learning rate");
  app.add_option("--seed", o.seed);
  app.add_option("--precision", o.precision, "float32 or float64");
  app.add_option("--workers", o.workers, "Concurrent grid cells");
  app.add_option("--tasks", o.tasks, "Tasks to include");
  app.add_option("--models", o.models, "Models to include");
  app.add_option("--windows", o.windows, "Window lengths in seconds");
  app.add_flag("-v,--verbose", verbose);

  auto* ingest = app.add_subcommand("ingest", "Parse recordings, write a parse report and window caches");
  bool no_windows = false;
  ingest->add_flag("--no-windows", no_windows, "Only parse and report");

  auto* windows = app.add_subcommand("windows", "Build windows for one task and length");
  std::string task, model, out, checkpoint;
  int window_s = 5;
  windows->add_option("--task", task)->required();
  windows->add_option("--window", window_s)->required();
  windows->add_option("-o,--out", out, "Write a window cache file");

  auto* train_cmd = app.add_subcommand("train", "Train and evaluate one model");
  train_cmd->add_option("--task", task)->required();
  train_cmd->add_option("--model", model)->required();
  train_cmd->add_option("--window", window_s)->required();
  train_cmd->add_option("--checkpoint", checkpoint, "Save the trained model");
  train_cmd->add_option("-o,--out", out, "Write the result JSON");

  auto* grid = app.add_subcommand("grid", "Run the task x model x window grid (resumable)");
  bool restart = false;
  std::optional<std::size_t> max_new;
  grid->add_flag("--restart", restart, "Discard results from a different config or dataset");
  grid->add_option("--max-new-cells", max_new, "Stop after this many newly trained cells");

  auto* stats_cmd = app.add_subcommand("stats", "Gaze-variance and subjective-rating statistics");
  bool student = false, reference = false;
  std::string out_dir;
  stats_cmd->add_flag("--student", student, "Pooled-variance two-sample tests");
  stats_cmd->add_flag("--reference", reference, "Show published values alongside");
  stats_cmd->add_option("-o,--out-dir", out_dir);

  auto* report_cmd = app.add_subcommand("report", "Render accuracy tables and ROC files");
  report_cmd->add_flag("--reference", reference, "Show published accuracies alongside");
  report_cmd->add_option("-o,--out-dir", out_dir);

  auto* synth = app.add_subcommand("synth", "Write a synthetic dataset with a known fatigue signal");
  SyntheticConfig sc;
  std::string synth_out;
  synth->add_option("-o,--out", synth_out, "Output directory")->required();
  synth->add_option("--participants", sc.participants);
  synth->add_option("--duration", sc.duration_s, "Seconds per recording");
  synth->add_option("--synth-seed", sc.seed);
  synth->add_flag("--directions", sc.with_directions, "Include gaze direction columns");

  CLI11_PARSE(app, argc, argv);
  if (verbose) spdlog::set_level(spdlog::level::debug);

  try {
    if (*synth) return cmd_synth(synth_out, sc);
    const RunConfig cfg = resolve_config(o);
    if (*ingest) return cmd_ingest(cfg, !no_windows);
    if (*windows) return cmd_windows(cfg, task, window_s, out);
    if (*train_cmd) return cmd_train(cfg, task, model, window_s, checkpoint, out);
    if (*grid) return cmd_grid(cfg, restart, max_new);
    if (*stats_cmd) return cmd_stats(cfg, student, reference, out_dir);
    if (*report_cmd) return cmd_report(cfg, reference, out_dir);
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    return kFatal;
  } catch (const std::exception& e) {
    spdlog::error("unexpected failure: {}", e.what());
    return kFatal;
  }
  return kFatal;
}
