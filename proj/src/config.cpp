#include "fatigue/config.hpp"

#include "fatigue/util.hpp"

#include <cstdlib>

namespace fatigue {

namespace {

using nlohmann::json;

json schema_json(const ColumnSchema& s) {
  return {{"n", s.n},         {"x", s.x},         {"y", s.y},
          {"lx", s.lx},       {"ly", s.ly},       {"rx", s.rx},
          {"ry", s.ry},       {"pos_l", s.pos_l}, {"pos_r", s.pos_r},
          {"dir_l", s.dir_l}, {"dir_r", s.dir_r}, {"filename_pattern", s.filename_pattern},
          {"sample_rate_hz", s.sample_rate_hz}};
}

json meta_schema_json(const MetadataSchema& s) {
  json ratings = json::object();
  for (std::size_t m = 0; m < 5; ++m) {
    ratings[std::string(to_string(kAllMeasures[m]))] = {s.ratings[m].first, s.ratings[m].second};
  }
  return {{"participant_id", s.participant_id},
          {"session_id", s.session_id},
          {"age", s.age},
          {"gender", s.gender},
          {"fatigue", s.fatigue},
          {"hours_slept", s.hours_slept},
          {"ratings", ratings}};
}

json channels_json(const ChannelConfig& c) {
  return {{"mode", std::string(to_string(c.mode))},
          {"normalization", std::string(to_string(c.normalization))},
          {"max_gap_interp_ms", c.max_gap_interp_ms},
          {"max_missing_fraction", c.max_missing_fraction}};
}

json train_json(const TrainConfig& t) {
  return {{"epochs", t.epochs},
          {"batch_size", t.batch_size},
          {"learning_rate", t.learning_rate},
          {"optimizer", std::string(to_string(t.optimizer))},
          {"seed", t.seed},
          {"split_fraction", t.split_fraction},
          {"stratify", t.stratify},
          {"shuffle", t.shuffle},
          {"precision", std::string(to_string(t.precision))}};
}

template <typename T>
void read(const json& j, const char* key, T& dst) {
  if (j.contains(key)) dst = j.at(key).get<T>();
}

void read_path(const json& j, const char* key, std::filesystem::path& dst) {
  if (j.contains(key)) dst = j.at(key).get<std::string>();
}

}  // namespace

nlohmann::json RunConfig::to_json() const {
  json grid_json = {{"tasks", json::array()},
                    {"models", json::array()},
                    {"windows", grid.windows},
                    {"workers", grid.workers},
                    {"max_new_cells", grid.max_new_cells}};
  for (Task t : grid.tasks) grid_json["tasks"].push_back(std::string(to_string(t)));
  for (ModelKind m : grid.models) grid_json["models"].push_back(std::string(to_string(m)));
  return {{"data",
           {{"data_dir", data_dir.string()},
            {"metadata", metadata.string()},
            {"cache_dir", cache_dir.string()},
            {"results_dir", results_dir.string()}}},
          {"schema", schema_json(schema)},
          {"metadata_schema", meta_schema_json(metadata_schema)},
          {"channels", channels_json(train.channels)},
          {"train", train_json(train)},
          {"grid", grid_json}};
}

std::string RunConfig::config_hash() const {
  const json relevant = {{"schema", schema_json(schema)},
                         {"channels", channels_json(train.channels)},
                         {"train", train_json(train)}};
  return util::hex64(util::fnv1a(relevant.dump()));
}

RunConfig run_config_from_json(const nlohmann::json& j) {
  RunConfig cfg;
  try {
    if (j.contains("data")) {
      const auto& d = j.at("data");
      read_path(d, "data_dir", cfg.data_dir);
      read_path(d, "metadata", cfg.metadata);
      read_path(d, "cache_dir", cfg.cache_dir);
      read_path(d, "results_dir", cfg.results_dir);
    }
    if (j.contains("schema")) {
      const auto& s = j.at("schema");
      auto& c = cfg.schema;
      read(s, "n", c.n);
      read(s, "x", c.x);
      read(s, "y", c.y);
      read(s, "lx", c.lx);
      read(s, "ly", c.ly);
      read(s, "rx", c.rx);
      read(s, "ry", c.ry);
      read(s, "pos_l", c.pos_l);
      read(s, "pos_r", c.pos_r);
      read(s, "dir_l", c.dir_l);
      read(s, "dir_r", c.dir_r);
      read(s, "filename_pattern", c.filename_pattern);
      read(s, "sample_rate_hz", c.sample_rate_hz);
    }
    if (j.contains("metadata_schema")) {
      const auto& s = j.at("metadata_schema");
      auto& c = cfg.metadata_schema;
      read(s, "participant_id", c.participant_id);
      read(s, "session_id", c.session_id);
      read(s, "age", c.age);
      read(s, "gender", c.gender);
      read(s, "fatigue", c.fatigue);
      read(s, "hours_slept", c.hours_slept);
      if (s.contains("ratings")) {
        for (std::size_t m = 0; m < 5; ++m) {
          const std::string name(to_string(kAllMeasures[m]));
          if (s.at("ratings").contains(name)) {
            const auto& pair = s.at("ratings").at(name);
            c.ratings[m] = {pair.at(0).get<std::string>(), pair.at(1).get<std::string>()};
          }
        }
      }
    }
    if (j.contains("channels")) {
      const auto& c = j.at("channels");
      auto& ch = cfg.train.channels;
      if (c.contains("mode")) {
        const auto mode = c.at("mode").get<std::string>();
        if (mode == "cyclopean_pos_vel") {
          ch.mode = ChannelMode::CyclopeanPosVel;
        } else if (mode == "binocular") {
          ch.mode = ChannelMode::Binocular;
        } else {
          throw Error(Errc::InvalidConfig, "unknown channel mode '" + mode + "'");
        }
      }
      if (c.contains("normalization")) {
        const auto n = c.at("normalization").get<std::string>();
        if (n == "zscore") {
          ch.normalization = Normalization::ZScoreTrainStats;
        } else if (n == "none") {
          ch.normalization = Normalization::None;
        } else {
          throw Error(Errc::InvalidConfig, "unknown normalization '" + n + "'");
        }
      }
      read(c, "max_gap_interp_ms", ch.max_gap_interp_ms);
      read(c, "max_missing_fraction", ch.max_missing_fraction);
    }
    if (j.contains("train")) {
      const auto& t = j.at("train");
      auto& tc = cfg.train;
      read(t, "epochs", tc.epochs);
      read(t, "batch_size", tc.batch_size);
      read(t, "learning_rate", tc.learning_rate);
      read(t, "seed", tc.seed);
      read(t, "split_fraction", tc.split_fraction);
      read(t, "stratify", tc.stratify);
      read(t, "shuffle", tc.shuffle);
      if (t.contains("optimizer")) {
        const auto o = t.at("optimizer").get<std::string>();
        if (o == "adam") {
          tc.optimizer = OptimizerKind::Adam;
        } else if (o == "sgd_momentum") {
          tc.optimizer = OptimizerKind::SgdMomentum;
        } else {
          throw Error(Errc::InvalidConfig, "unknown optimizer '" + o + "'");
        }
      }
      if (t.contains("precision")) {
        const auto p = t.at("precision").get<std::string>();
        if (p == "float32") {
          tc.precision = Precision::Float32;
        } else if (p == "float64") {
          tc.precision = Precision::Float64;
        } else {
          throw Error(Errc::InvalidConfig, "unknown precision '" + p + "'");
        }
      }
    }
    if (j.contains("grid")) {
      const auto& g = j.at("grid");
      if (g.contains("tasks")) {
        cfg.grid.tasks.clear();
        for (const auto& t : g.at("tasks")) {
          auto task = parse_task(t.get<std::string>());
          if (!task) throw Error(Errc::InvalidConfig, "unknown task " + t.dump());
          cfg.grid.tasks.push_back(*task);
        }
      }
      if (g.contains("models")) {
        cfg.grid.models.clear();
        for (const auto& m : g.at("models")) {
          auto kind = parse_model_kind(m.get<std::string>());
          if (!kind) throw Error(Errc::InvalidConfig, "unknown model " + m.dump());
          cfg.grid.models.push_back(*kind);
        }
      }
      read(g, "windows", cfg.grid.windows);
      read(g, "workers", cfg.grid.workers);
      read(g, "max_new_cells", cfg.grid.max_new_cells);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::InvalidConfig, e.what());
  }
  cfg.train.validate();
  for (int w : cfg.grid.windows) {
    if (std::find(kWindowDurations.begin(), kWindowDurations.end(), w) == kWindowDurations.end()) {
      throw Error(Errc::InvalidConfig, "window " + std::to_string(w) + " s not in {5,10,15,20}");
    }
  }
  if (cfg.grid.workers < 1) throw Error(Errc::InvalidConfig, "workers must be >= 1");
  return cfg;
}

void apply_env_overrides(RunConfig& cfg) {
  if (const char* v = std::getenv("FATIGUE_CACHE_DIR"); v != nullptr && *v != '\0') {
    cfg.cache_dir = v;
  }
  if (const char* v = std::getenv("FATIGUE_RESULTS_DIR"); v != nullptr && *v != '\0') {
    cfg.results_dir = v;
  }
}

RunConfig load_run_config(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(util::read_file(path), nullptr, true, /*ignore_comments=*/true);
  } catch (const json::exception& e) {
    throw Error(Errc::InvalidConfig, "cannot parse " + path.string() + ": " + e.what());
  }
  RunConfig cfg = run_config_from_json(j);
  // relative data paths resolve against the config file's directory
  const auto base = path.parent_path();
  auto resolve = [&](std::filesystem::path& p) {
    if (!p.empty() && p.is_relative() && !base.empty()) p = base / p;
  };
  resolve(cfg.data_dir);
  resolve(cfg.metadata);
  resolve(cfg.cache_dir);
  resolve(cfg.results_dir);
  apply_env_overrides(cfg);
  return cfg;
}

}  // namespace fatigue
