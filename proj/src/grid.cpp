#include "fatigue/grid.hpp"

#include "fatigue/checkpoint.hpp"
#include "fatigue/util.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <ctime>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace fatigue {

using nlohmann::json;

std::string CellId::str() const {
  return std::string(to_string(task)) + "_" + std::string(to_string(model)) + "_" +
         std::to_string(window_s) + "s";
}

namespace {

std::string now_utc() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double number_or_nan(const json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

std::filesystem::path cell_path(const std::filesystem::path& results_dir, const std::string& id) {
  return results_dir / "cells" / (id + ".json");
}

}  // namespace

json RunManifest::to_json() const {
  return {{"format", "gazefatigue-manifest"},
          {"config_hash", config_hash},
          {"dataset",
           {{"file_count", dataset.file_count},
            {"total_rows", dataset.total_rows},
            {"checksum", util::hex64(dataset.checksum)}}},
          {"completed", completed},
          {"failed", failed},
          {"tool_version", tool_version},
          {"created", created},
          {"updated", updated},
          {"config", config}};
}

RunManifest RunManifest::from_json(const json& j) {
  RunManifest m;
  try {
    m.config_hash = j.at("config_hash").get<std::string>();
    const auto& d = j.at("dataset");
    m.dataset.file_count = d.at("file_count").get<std::size_t>();
    m.dataset.total_rows = d.at("total_rows").get<std::size_t>();
    m.dataset.checksum = std::stoull(d.at("checksum").get<std::string>(), nullptr, 16);
    m.completed = j.at("completed").get<std::vector<std::string>>();
    m.failed = j.value("failed", std::map<std::string, std::string>{});
    m.tool_version = j.value("tool_version", "");
    m.created = j.value("created", "");
    m.updated = j.value("updated", "");
    m.config = j.value("config", json::object());
  } catch (const std::exception& e) {
    throw Error(Errc::Io, std::string("malformed manifest: ") + e.what());
  }
  return m;
}

bool RunManifest::is_completed(const std::string& id) const {
  return std::binary_search(completed.begin(), completed.end(), id);
}

std::optional<RunManifest> read_manifest(const std::filesystem::path& results_dir) {
  const auto path = results_dir / "manifest.json";
  if (!std::filesystem::exists(path)) return std::nullopt;
  try {
    return RunManifest::from_json(json::parse(util::read_file(path)));
  } catch (const json::exception& e) {
    throw Error(Errc::Io, "cannot parse " + path.string() + ": " + e.what());
  }
}

void write_manifest(const std::filesystem::path& results_dir, const RunManifest& m) {
  std::filesystem::create_directories(results_dir);
  util::write_file_atomic(results_dir / "manifest.json", m.to_json().dump(2) + "\n");
}

CellData split_windows(std::vector<Window> windows, Task task, int window_s,
                       const TrainConfig& cfg) {
  std::map<std::string, bool> label_of;
  for (const auto& w : windows) label_of.emplace(w.participant_id, w.label);
  // std::vector<bool> has no contiguous storage to span over
  std::vector<std::string> ids;
  auto labels = std::make_unique<bool[]>(label_of.size());
  for (const auto& [pid, label] : label_of) {
    labels[ids.size()] = label;
    ids.push_back(pid);
  }

  CellData data;
  data.task = task;
  data.window_s = window_s;
  data.split = split_users(ids, std::span<const bool>(labels.get(), ids.size()),
                           cfg.split_fraction, cfg.seed, cfg.stratify);
  const std::set<std::string> train_ids(data.split.train_ids.begin(),
                                        data.split.train_ids.end());
  for (const auto& id : data.split.test_ids) {
    if (train_ids.count(id) != 0) {
      throw Error(Errc::InvalidSpec, "participant " + id + " on both sides of the split");
    }
  }
  for (auto& w : windows) {
    (train_ids.count(w.participant_id) != 0 ? data.train : data.test).push_back(std::move(w));
  }
  if (data.train.empty()) throw Error(Errc::EmptyTrainingSet, "no training windows");
  if (data.test.empty()) throw Error(Errc::EmptyTestSet, "no test windows");
  if (cfg.channels.normalization == Normalization::ZScoreTrainStats) {
    data.normalizer = fit_normalizer(data.train);
    apply_normalizer_inplace(data.train, data.normalizer);
    apply_normalizer_inplace(data.test, data.normalizer);
  }
  return data;
}

std::uint64_t window_cache_key(const RunConfig& cfg, Task task, int window_s,
                               std::uint64_t dataset_checksum) {
  const std::string key = cfg.config_hash() + "|" + util::hex64(dataset_checksum) + "|" +
                          std::string(to_string(task)) + "|" + std::to_string(window_s);
  return util::fnv1a(key);
}

std::filesystem::path window_cache_path(const std::filesystem::path& cache_dir, Task task,
                                        int window_s) {
  return cache_dir /
         ("windows_" + std::string(to_string(task)) + "_" + std::to_string(window_s) + "s.bin");
}

std::vector<Window> load_or_build_windows(const SessionIndex& index, Task task, int window_s,
                                          const RunConfig& cfg, std::uint64_t dataset_checksum) {
  const std::uint64_t key = window_cache_key(cfg, task, window_s, dataset_checksum);
  if (!cfg.cache_dir.empty()) {
    const auto path = window_cache_path(cfg.cache_dir, task, window_s);
    if (std::filesystem::exists(path)) {
      try {
        auto cache = read_window_cache(path);
        if (cache.config_hash == key) return std::move(cache.windows);
      } catch (const Error&) {
        // stale or corrupt cache: rebuild below
      }
    }
  }
  WindowCache cache;
  cache.config_hash = key;
  cache.windows = windows_for_task(index, task, window_s, cfg.train.channels);
  if (!cfg.cache_dir.empty()) {
    std::filesystem::create_directories(cfg.cache_dir);
    write_window_cache(window_cache_path(cfg.cache_dir, task, window_s), cache);
  }
  return std::move(cache.windows);
}

namespace {

template <typename Scalar>
CellOutput run_cell_typed(const CellData& data, ModelKind kind, const TrainConfig& cfg,
                          const std::string& config_hash, bool keep_checkpoint,
                          const EpochCallback& on_epoch) {
  ModelSpec spec;
  spec.kind = kind;
  spec.in_channels = ChannelConfig::kChannels;
  spec.input_len = window_length(data.window_s);
  spec.seed = cfg.seed;
  auto model = make_model<Scalar>(spec);

  const TrainResult tr = train<Scalar>(*model, data.train, cfg, on_epoch);
  CellOutput out;
  out.result = evaluate<Scalar>(*model, data.test, cfg.batch_size);
  out.result.config_hash = config_hash;
  out.result.loss_curve = tr.loss_curve;
  const auto train_scores = predict_scores<Scalar>(*model, data.train, cfg.batch_size);
  out.train_accuracy = evaluate_scores(train_scores, data.train).accuracy;
  out.n_train_windows = data.train.size();
  out.n_train_participants = data.split.train_ids.size();
  if (keep_checkpoint) out.checkpoint = checkpoint_to_json<Scalar>(*model, config_hash);
  return out;
}

}  // namespace

CellOutput run_cell(const CellData& data, ModelKind model, const TrainConfig& cfg,
                    const std::string& config_hash, bool keep_checkpoint,
                    const EpochCallback& on_epoch) {
  return cfg.precision == Precision::Float32
             ? run_cell_typed<float>(data, model, cfg, config_hash, keep_checkpoint, on_epoch)
             : run_cell_typed<double>(data, model, cfg, config_hash, keep_checkpoint, on_epoch);
}

json eval_to_json(const EvalResult& r) {
  json roc = json::array();
  for (const auto& p : r.roc) roc.push_back({p.fpr, p.tpr});
  return {{"task", std::string(to_string(r.task))},
          {"model", std::string(to_string(r.model))},
          {"window_s", r.window_s},
          {"accuracy", r.accuracy},
          {"participant_accuracy", r.participant_accuracy},
          {"auc", number_or_null(r.auc)},
          {"n_test_windows", r.n_test_windows},
          {"n_test_participants", r.n_test_participants},
          {"seed", r.seed},
          {"config_hash", r.config_hash},
          {"loss_curve", r.loss_curve},
          {"roc", roc}};
}

EvalResult eval_from_json(const json& j) {
  EvalResult r;
  try {
    const auto task = parse_task(j.at("task").get<std::string>());
    const auto model = parse_model_kind(j.at("model").get<std::string>());
    if (!task || !model) throw Error(Errc::Io, "unknown task or model in result");
    r.task = *task;
    r.model = *model;
    r.window_s = j.at("window_s").get<int>();
    r.accuracy = j.at("accuracy").get<double>();
    r.participant_accuracy = j.at("participant_accuracy").get<double>();
    r.auc = number_or_nan(j.at("auc"));
    r.n_test_windows = j.at("n_test_windows").get<std::size_t>();
    r.n_test_participants = j.at("n_test_participants").get<std::size_t>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.config_hash = j.at("config_hash").get<std::string>();
    r.loss_curve = j.value("loss_curve", std::vector<double>{});
    for (const auto& p : j.at("roc")) r.roc.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
  } catch (const json::exception& e) {
    throw Error(Errc::Io, std::string("malformed result: ") + e.what());
  }
  return r;
}

GridSummary run_grid(const SessionIndex& index, const RunConfig& cfg,
                     const DatasetFingerprint& fingerprint, const GridOptions& opts) {
  auto log = [&](const std::string& msg) {
    if (opts.log) opts.log(msg);
  };
  const std::string hash = cfg.config_hash();
  const auto& dir = cfg.results_dir;
  std::filesystem::create_directories(dir / "cells");

  RunManifest manifest;
  if (auto existing = read_manifest(dir)) {
    const bool same = existing->config_hash == hash && existing->dataset == fingerprint;
    if (same) {
      manifest = std::move(*existing);
    } else if (opts.restart) {
      log("manifest mismatch; restarting grid in " + dir.string());
      std::filesystem::remove_all(dir / "cells");
      std::filesystem::create_directories(dir / "cells");
    } else {
      throw Error(Errc::InvalidConfig,
                  "results in " + dir.string() + " were produced with config " +
                      existing->config_hash + " on a different dataset or config (now " + hash +
                      "); use another results directory or restart");
    }
  }
  if (manifest.created.empty()) {
    manifest.config_hash = hash;
    manifest.dataset = fingerprint;
    manifest.created = now_utc();
  }
  manifest.config = cfg.to_json();
  manifest.tool_version = kToolVersion;

  GridSummary summary;
  std::mutex mu;
  std::size_t claimed_total = 0;
  const std::size_t limit = cfg.grid.max_new_cells;

  for (Task task : cfg.grid.tasks) {
    for (int w : cfg.grid.windows) {
      std::vector<ModelKind> pending;
      for (ModelKind m : cfg.grid.models) {
        if (manifest.is_completed(CellId{task, m, w}.str())) {
          ++summary.skipped;
        } else {
          pending.push_back(m);
        }
      }
      if (pending.empty()) continue;
      if (limit != 0 && claimed_total >= limit) {
        summary.stopped_early = true;
        continue;
      }
      if (limit != 0 && claimed_total + pending.size() > limit) {
        pending.resize(limit - claimed_total);
        summary.stopped_early = true;
      }
      claimed_total += pending.size();

      auto record_failure = [&](const std::string& id, const std::string& why) {
        std::lock_guard lock(mu);
        log("cell " + id + " failed: " + why);
        manifest.failed[id] = why;
        manifest.updated = now_utc();
        write_manifest(dir, manifest);
        ++summary.failed;
        summary.failures.push_back(id + ": " + why);
      };

      std::optional<CellData> data;
      try {
        data = split_windows(load_or_build_windows(index, task, w, cfg, fingerprint.checksum),
                             task, w, cfg.train);
      } catch (const Error& e) {
        for (ModelKind m : pending) record_failure(CellId{task, m, w}.str(), e.what());
        continue;
      }
      log(std::string(to_string(task)) + " " + std::to_string(w) + " s: " +
          std::to_string(data->train.size()) + " train / " + std::to_string(data->test.size()) +
          " test windows");

      std::atomic<std::size_t> next{0};
      auto worker = [&] {
        for (std::size_t i = next++; i < pending.size(); i = next++) {
          const CellId id{task, pending[i], w};
          const std::string name = id.str();
          try {
            const auto t0 = std::chrono::steady_clock::now();
            CellOutput out = run_cell(*data, id.model, cfg.train, hash);
            const double secs =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            json cell = eval_to_json(out.result);
            cell["train_accuracy"] = out.train_accuracy;
            cell["n_train_windows"] = out.n_train_windows;
            cell["n_train_participants"] = out.n_train_participants;
            cell["train_ids"] = data->split.train_ids;
            cell["test_ids"] = data->split.test_ids;
            cell["tool_version"] = kToolVersion;
            cell["config"] = cfg.to_json();
            util::write_file_atomic(cell_path(dir, name), cell.dump(2) + "\n");

            std::lock_guard lock(mu);
            manifest.completed.insert(
                std::upper_bound(manifest.completed.begin(), manifest.completed.end(), name),
                name);
            manifest.failed.erase(name);
            manifest.updated = now_utc();
            write_manifest(dir, manifest);
            ++summary.trained;
            std::ostringstream msg;
            msg << "cell " << name << ": accuracy " << out.result.accuracy << " (train "
                << out.train_accuracy << ") in " << secs << " s";
            log(msg.str());
          } catch (const Error& e) {
            record_failure(name, e.what());
          }
        }
      };
      const auto n_workers =
          std::min<std::size_t>(static_cast<std::size_t>(cfg.grid.workers), pending.size());
      if (n_workers <= 1) {
        worker();
      } else {
        std::vector<std::jthread> pool;
        for (std::size_t k = 0; k < n_workers; ++k) pool.emplace_back(worker);
      }
    }
  }
  manifest.updated = now_utc();
  write_manifest(dir, manifest);
  util::write_file_atomic(dir / "results.csv", results_csv(load_results(dir)));
  return summary;
}

std::vector<EvalResult> load_results(const std::filesystem::path& results_dir) {
  const auto manifest = read_manifest(results_dir);
  if (!manifest) throw Error(Errc::Io, "no manifest in " + results_dir.string());
  std::vector<EvalResult> out;
  for (const auto& id : manifest->completed) {
    const auto path = cell_path(results_dir, id);
    EvalResult r;
    try {
      r = eval_from_json(json::parse(util::read_file(path)));
    } catch (const json::exception& e) {
      throw Error(Errc::Io, "cannot parse " + path.string() + ": " + e.what());
    }
    if (r.config_hash != manifest->config_hash) {
      throw Error(Errc::Io, path.string() + " has config hash " + r.config_hash +
                                ", manifest has " + manifest->config_hash);
    }
    out.push_back(std::move(r));
  }
  auto rank = [](ModelKind m) {
    return std::find(kAllModels.begin(), kAllModels.end(), m) - kAllModels.begin();
  };
  std::sort(out.begin(), out.end(), [&](const EvalResult& a, const EvalResult& b) {
    return std::tuple(static_cast<int>(a.task), rank(a.model), a.window_s) <
           std::tuple(static_cast<int>(b.task), rank(b.model), b.window_s);
  });
  return out;
}

std::string results_csv(const std::vector<EvalResult>& results) {
  std::ostringstream out;
  out << "task,model,window_s,accuracy,participant_accuracy,auc,n_test_windows,"
         "n_test_participants,seed,config_hash\n";
  for (const auto& r : results) {
    out << to_string(r.task) << ',' << to_string(r.model) << ',' << r.window_s << ','
        << util::format_double(r.accuracy) << ',' << util::format_double(r.participant_accuracy)
        << ',' << (std::isfinite(r.auc) ? util::format_double(r.auc) : std::string()) << ','
        << r.n_test_windows << ',' << r.n_test_participants << ',' << r.seed << ','
        << r.config_hash << '\n';
  }
  return out.str();
}

}  // namespace fatigue
