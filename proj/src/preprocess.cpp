#include "fatigue/preprocess.hpp"

#include "fatigue/util.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>

namespace fatigue {

namespace {
constexpr double kRadToDeg = 180.0 / std::numbers::pi;
constexpr double kDegToRad = std::numbers::pi / 180.0;
}  // namespace

GazeAngles vector_to_angles(const GazeVector& v) {
  if (!v.allFinite() || v.squaredNorm() == 0.0) {
    throw Error(Errc::ZeroVector, "gaze vector must be finite and non-zero");
  }
  return {kRadToDeg * std::atan2(v.x(), std::hypot(v.y(), v.z())),
          kRadToDeg * std::atan2(v.y(), v.z())};
}

GazeVector angles_to_vector(const GazeAngles& a) {
  const double h = a.horizontal * kDegToRad;
  const double v = a.vertical * kDegToRad;
  return {std::sin(h), std::cos(h) * std::sin(v), std::cos(h) * std::cos(v)};
}

void ChannelConfig::validate() const {
  if (!(max_missing_fraction >= 0.0 && max_missing_fraction <= 1.0)) {
    throw Error(Errc::InvalidConfig, "max_missing_fraction must lie in [0, 1]");
  }
  if (!(max_gap_interp_ms >= 0.0)) {
    throw Error(Errc::InvalidConfig, "max_gap_interp_ms must be non-negative");
  }
}

std::string_view to_string(ChannelMode m) {
  return m == ChannelMode::CyclopeanPosVel ? "cyclopean_pos_vel" : "binocular";
}

std::string_view to_string(Normalization n) {
  return n == Normalization::ZScoreTrainStats ? "zscore" : "none";
}

Recording repair_gaps(const Recording& rec, const ChannelConfig& cfg) {
  Recording out = rec;
  auto& s = out.samples;
  const double interval_ms = 1000.0 / rec.sample_rate_hz;
  constexpr std::array<double GazeSample::*, 6> kAngles = {
      &GazeSample::x, &GazeSample::y, &GazeSample::lx, &GazeSample::ly, &GazeSample::rx,
      &GazeSample::ry};

  std::size_t i = 0;
  while (i < s.size()) {
    if (!s[i].gap()) {
      ++i;
      continue;
    }
    const std::size_t begin = i;
    while (i < s.size() && s[i].gap()) ++i;
    const std::size_t end = i;  // one past the run
    if (begin == 0 || end == s.size()) continue;
    if (static_cast<double>(end - begin) * interval_ms > cfg.max_gap_interp_ms) continue;

    const GazeSample& left = s[begin - 1];
    const GazeSample& right = s[end];
    const double span = right.n - left.n;
    for (std::size_t k = begin; k < end; ++k) {
      const double t = span > 0.0 ? (s[k].n - left.n) / span
                                  : static_cast<double>(k - begin + 1) /
                                        static_cast<double>(end - begin + 1);
      for (auto member : kAngles) {
        if (std::isnan(s[k].*member)) {
          s[k].*member = left.*member + t * (right.*member - left.*member);
        }
      }
      s[k].repaired = true;
    }
  }
  return out;
}

std::vector<Window> make_windows(const Recording& rec, const SessionMeta& meta, int duration_s,
                                 const ChannelConfig& cfg) {
  if (std::find(kWindowDurations.begin(), kWindowDurations.end(), duration_s) ==
      kWindowDurations.end()) {
    throw Error(Errc::InvalidConfig, "window duration must be one of 5, 10, 15, 20 s");
  }
  cfg.validate();
  std::vector<Window> out;
  if (!meta.fatigue_label) return out;

  const Index len = window_length(duration_s);
  const auto n = static_cast<Index>(rec.samples.size());
  const double rate = rec.sample_rate_hz;

  for (Index start = 0; start + len <= n; start += len) {
    Index repaired = 0;
    bool missing = false;
    for (Index t = 0; t < len; ++t) {
      const auto& s = rec.samples[static_cast<std::size_t>(start + t)];
      if (s.gap()) missing = true;
      if (s.repaired) ++repaired;
    }
    const double bad_fraction = static_cast<double>(repaired) / static_cast<double>(len);
    if (missing || bad_fraction > cfg.max_missing_fraction) continue;

    Window w;
    w.participant_id = rec.participant_id;
    w.task = rec.task;
    w.label = *meta.fatigue_label;
    w.start_ms = rec.samples[static_cast<std::size_t>(start)].n;
    w.duration_s = duration_s;
    w.data.resize(ChannelConfig::kChannels, len);
    for (Index t = 0; t < len; ++t) {
      const auto& s = rec.samples[static_cast<std::size_t>(start + t)];
      if (cfg.mode == ChannelMode::CyclopeanPosVel) {
        w.data(0, t) = s.x;
        w.data(1, t) = s.y;
      } else {
        w.data.col(t) << s.lx, s.ly, s.rx, s.ry;
      }
    }
    if (cfg.mode == ChannelMode::CyclopeanPosVel) {
      for (Index t = 1; t < len; ++t) {
        w.data(2, t) = (w.data(0, t) - w.data(0, t - 1)) * rate;
        w.data(3, t) = (w.data(1, t) - w.data(1, t - 1)) * rate;
      }
      if (len > 1) {
        w.data(2, 0) = w.data(2, 1);
        w.data(3, 0) = w.data(3, 1);
      } else {
        w.data.bottomRows(2).setZero();
      }
    }
    out.push_back(std::move(w));
  }
  return out;
}

std::vector<Window> windows_for_task(const SessionIndex& index, Task task, int duration_s,
                                     const ChannelConfig& cfg,
                                     std::span<const std::string> participants) {
  std::vector<Window> out;
  auto wanted = [&](const std::string& pid) {
    return participants.empty() ||
           std::find(participants.begin(), participants.end(), pid) != participants.end();
  };
  for (const auto& [key, entries] : index.buckets()) {
    if (key.second != task || !wanted(key.first)) continue;
    for (const auto& e : entries) {
      const SessionMeta* meta = index.meta(e);
      if (meta == nullptr || !meta->fatigue_label) continue;
      auto repaired = repair_gaps(index.recording(e.recording), cfg);
      auto ws = make_windows(repaired, *meta, duration_s, cfg);
      std::move(ws.begin(), ws.end(), std::back_inserter(out));
    }
  }
  return out;
}

Normalizer fit_normalizer(std::span<const Window> train_windows) {
  Normalizer nrm;
  Eigen::Vector4d sum = Eigen::Vector4d::Zero();
  double count = 0.0;
  for (const auto& w : train_windows) {
    sum += w.data.rowwise().sum();
    count += static_cast<double>(w.data.cols());
  }
  if (count == 0.0) return nrm;
  nrm.mean = sum / count;
  Eigen::Vector4d sq = Eigen::Vector4d::Zero();
  for (const auto& w : train_windows) {
    sq += (w.data.colwise() - nrm.mean).rowwise().squaredNorm();
  }
  nrm.stddev = (sq / count).cwiseSqrt().cwiseMax(kStdFloor);
  return nrm;
}

Window apply_normalizer(const Window& w, const Normalizer& nrm) {
  Window out = w;
  out.data = (w.data.colwise() - nrm.mean).array().colwise() / nrm.stddev.array();
  return out;
}

void apply_normalizer_inplace(std::span<Window> windows, const Normalizer& nrm) {
  for (auto& w : windows) {
    w.data = ((w.data.colwise() - nrm.mean).array().colwise() / nrm.stddev.array()).matrix();
  }
}

namespace {

constexpr char kCacheMagic[8] = {'G', 'F', 'W', 'C', 'A', 'C', 'H', 'E'};

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw Error(Errc::Io, "truncated window cache");
  return v;
}

}  // namespace

void write_window_cache(const std::filesystem::path& path, const WindowCache& cache) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::Io, "cannot write " + tmp.string());
    out.write(kCacheMagic, sizeof(kCacheMagic));
    put<std::uint32_t>(out, 1);
    put<std::uint32_t>(out, 8);
    put<std::uint64_t>(out, cache.config_hash);
    put<std::uint64_t>(out, cache.windows.size());
    put<std::uint32_t>(out, static_cast<std::uint32_t>(ChannelConfig::kChannels));
    for (const auto& w : cache.windows) {
      put<std::uint32_t>(out, static_cast<std::uint32_t>(w.participant_id.size()));
      out.write(w.participant_id.data(), static_cast<std::streamsize>(w.participant_id.size()));
      put<std::uint8_t>(out, static_cast<std::uint8_t>(w.task));
      put<std::uint8_t>(out, w.label ? 1 : 0);
      put<std::uint32_t>(out, static_cast<std::uint32_t>(w.duration_s));
      put<double>(out, w.start_ms);
      put<std::uint64_t>(out, static_cast<std::uint64_t>(w.data.cols()));
      const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = w.data;
      out.write(reinterpret_cast<const char*>(rm.data()),
                static_cast<std::streamsize>(rm.size() * sizeof(double)));
    }
    if (!out) throw Error(Errc::Io, "short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

WindowCache read_window_cache(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open " + path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kCacheMagic, sizeof(magic)) != 0) {
    throw Error(Errc::Io, path.string() + " is not a window cache");
  }
  if (get<std::uint32_t>(in) != 1) throw Error(Errc::Io, "unsupported cache version");
  if (get<std::uint32_t>(in) != 8) throw Error(Errc::Io, "unsupported cache dtype");
  WindowCache cache;
  cache.config_hash = get<std::uint64_t>(in);
  const auto count = get<std::uint64_t>(in);
  const auto channels = static_cast<Index>(get<std::uint32_t>(in));
  cache.windows.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    Window w;
    w.participant_id.resize(get<std::uint32_t>(in));
    in.read(w.participant_id.data(), static_cast<std::streamsize>(w.participant_id.size()));
    const auto task = get<std::uint8_t>(in);
    if (task >= kAllTasks.size()) throw Error(Errc::Io, "bad task code in cache");
    w.task = static_cast<Task>(task);
    w.label = get<std::uint8_t>(in) != 0;
    w.duration_s = static_cast<int>(get<std::uint32_t>(in));
    w.start_ms = get<double>(in);
    const auto len = static_cast<Index>(get<std::uint64_t>(in));
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm(channels, len);
    in.read(reinterpret_cast<char*>(rm.data()),
            static_cast<std::streamsize>(rm.size() * sizeof(double)));
    if (!in) throw Error(Errc::Io, "truncated window cache");
    w.data = rm;
    cache.windows.push_back(std::move(w));
  }
  return cache;
}

}  // namespace fatigue
