#include "fatigue/synthetic.hpp"

#include "fatigue/preprocess.hpp"
#include "fatigue/util.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

namespace fatigue {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Task-specific stimulus trace (horizontal, vertical) in dva, sampled at 250 Hz.
void stimulus(Task task, std::size_t n, std::mt19937_64& rng, std::vector<double>& hx,
              std::vector<double>& vy, std::vector<double>& vergence) {
  hx.assign(n, 0.0);
  vy.assign(n, 0.0);
  vergence.assign(n, 2.0);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double dt = 1.0 / kSampleRateHz;
  auto fixations = [&](double amp, double min_s, double max_s) {
    std::uniform_real_distribution<double> dur(min_s, max_s);
    std::size_t i = 0;
    while (i < n) {
      const auto len = static_cast<std::size_t>(dur(rng) * kSampleRateHz);
      const double tx = amp * u(rng), ty = 0.6 * amp * u(rng);
      for (std::size_t k = i; k < std::min(n, i + len); ++k) {
        hx[k] = tx;
        vy[k] = ty;
      }
      i += std::max<std::size_t>(len, 1);
    }
  };
  switch (task) {
    case Task::VRG: {
      // fixation at varying depth: vergence alternates every 5 s
      for (std::size_t k = 0; k < n; ++k) {
        vergence[k] = (static_cast<std::size_t>(k * dt / 5.0) % 2 == 0) ? 1.0 : 4.0;
      }
      break;
    }
    case Task::PUR: {
      // triangle wave, 15 dva amplitude at 10 dva/s
      const double period = 6.0;
      for (std::size_t k = 0; k < n; ++k) {
        const double ph = std::fmod(k * dt, period) / period;
        hx[k] = 15.0 * (ph < 0.5 ? 4.0 * ph - 1.0 : 3.0 - 4.0 * ph);
      }
      break;
    }
    case Task::VID:
      fixations(10.0, 0.25, 0.6);
      break;
    case Task::TEX: {
      // lines read left to right with return sweeps
      const double line_s = 3.0;
      for (std::size_t k = 0; k < n; ++k) {
        const double t = k * dt;
        const auto line = static_cast<int>(t / line_s);
        const double pos = std::fmod(t, line_s) / line_s;
        hx[k] = -12.0 + 24.0 * std::floor(pos * 8.0) / 8.0;
        vy[k] = 5.0 - 2.0 * (line % 6);
      }
      break;
    }
    case Task::RAN:
      fixations(15.0, 1.0, 1.5);
      break;
  }
}

}  // namespace

SyntheticDataset generate_synthetic(const SyntheticConfig& cfg) {
  if (cfg.participants < 1 || cfg.duration_s <= 0.0) {
    throw Error(Errc::InvalidConfig, "synthetic config needs participants >= 1 and duration > 0");
  }
  std::mt19937_64 rng(cfg.seed);
  const auto np = static_cast<std::size_t>(cfg.participants);
  std::vector<std::size_t> order(np);
  for (std::size_t i = 0; i < np; ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_fatigued = static_cast<std::size_t>(
      std::llround(cfg.fatigued_fraction * static_cast<double>(np)));
  std::vector<bool> fatigued(np, false);
  for (std::size_t i = 0; i < n_fatigued && i < np; ++i) fatigued[order[i]] = true;

  SyntheticDataset ds;
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto n = static_cast<std::size_t>(std::llround(cfg.duration_s * kSampleRateHz));
  const double dt_ms = 1000.0 / kSampleRateHz;

  for (std::size_t p = 0; p < np; ++p) {
    const bool f = fatigued[p];
    const std::string pid = std::to_string(p + 1);

    SessionMeta meta;
    meta.participant_id = pid;
    meta.session_id = "1";
    meta.fatigue_label = f;
    meta.age = std::round(18.0 + 12.0 * unit(rng));
    meta.gender = unit(rng) < 0.5 ? Gender::Female : Gender::Male;
    meta.hours_slept = std::round((f ? 6.8 : 7.3) * 10.0 + 10.0 * normal(rng)) / 10.0;
    for (Measure m : kAllMeasures) {
      const auto [lo, hi] = measure_range(m);
      auto draw = [&](double centre) {
        return std::clamp(std::round(centre + normal(rng)), lo, hi);
      };
      const double mid = 0.5 * (lo + hi);
      auto& r = meta.subjective[static_cast<std::size_t>(m)];
      r.pre = draw(mid - 0.5);
      r.post = draw(mid - 0.5 + (f ? 1.0 : 0.3));
    }
    ds.metas.push_back(meta);

    const double sd = cfg.noise_dva * (1.0 + cfg.noise_jitter * normal(rng)) *
                      (f ? cfg.fatigue_noise_scale : 1.0);
    for (Task task : cfg.tasks) {
      Recording rec;
      rec.participant_id = pid;
      rec.session_id = "1";
      rec.task = task;
      std::vector<double> hx, vy, verg;
      stimulus(task, n, rng, hx, vy, verg);

      const double fx = cfg.drift_hz_min + (cfg.drift_hz_max - cfg.drift_hz_min) * unit(rng);
      const double fy = cfg.drift_hz_min + (cfg.drift_hz_max - cfg.drift_hz_min) * unit(rng);
      const double phx = kTwoPi * unit(rng), phy = kTwoPi * unit(rng);
      const double amp = f ? cfg.drift_dva : 0.0;

      rec.samples.resize(n);
      for (std::size_t k = 0; k < n; ++k) {
        const double t = static_cast<double>(k) / kSampleRateHz;
        auto& s = rec.samples[k];
        s.n = static_cast<double>(k) * dt_ms;
        const double dx = amp * std::sin(kTwoPi * fx * t + phx);
        const double dy = amp * std::sin(kTwoPi * fy * t + phy);
        s.lx = hx[k] + dx + 0.5 * verg[k] + sd * normal(rng);
        s.rx = hx[k] + dx - 0.5 * verg[k] + sd * normal(rng);
        s.ly = vy[k] + dy + sd * normal(rng);
        s.ry = vy[k] + dy + sd * normal(rng);
        s.x = 0.5 * (s.lx + s.rx);
        s.y = 0.5 * (s.ly + s.ry);
        if (cfg.with_positions) {
          const double head = 0.0005 * (f ? cfg.fatigue_noise_scale : 1.0);
          s.pos_l = Eigen::Vector3d(-0.032 + head * normal(rng), head * normal(rng),
                                    head * normal(rng));
          s.pos_r = Eigen::Vector3d(0.032 + head * normal(rng), head * normal(rng),
                                    head * normal(rng));
        }
        if (cfg.with_directions) {
          s.dir_l = angles_to_vector({s.lx, s.ly});
          s.dir_r = angles_to_vector({s.rx, s.ry});
        }
      }

      // blinks: all angle channels missing for 10-20 samples
      std::uniform_int_distribution<int> blink_len(cfg.blink_min_samples, cfg.blink_max_samples);
      const double p_blink = cfg.blink_rate_hz / kSampleRateHz;
      for (std::size_t k = 1; k + 1 < n; ++k) {
        if (unit(rng) >= p_blink) continue;
        const auto len = static_cast<std::size_t>(blink_len(rng));
        for (std::size_t j = k; j < std::min(n - 1, k + len); ++j) {
          auto& s = rec.samples[j];
          s.x = s.y = s.lx = s.ly = s.rx = s.ry = kMissing;
          if (s.dir_l) s.dir_l.reset();
          if (s.dir_r) s.dir_r.reset();
        }
        k += len;
      }
      ds.recordings.push_back(std::move(rec));
    }
  }
  return ds;
}

void write_synthetic(const SyntheticDataset& ds, const std::filesystem::path& data_dir,
                     const std::filesystem::path& metadata_path) {
  std::filesystem::create_directories(data_dir);
  for (const auto& rec : ds.recordings) {
    std::ostringstream out;
    write_recording_csv(rec, out);
    const auto name = "S_" + rec.participant_id + "_S" + rec.session_id + "_" +
                      std::string(to_string(rec.task)) + ".csv";
    util::write_file_atomic(data_dir / name, out.str());
  }

  const MetadataSchema schema;
  std::ostringstream out;
  out << schema.participant_id << ',' << schema.session_id << ',' << schema.age << ','
      << schema.gender << ',' << schema.fatigue << ',' << schema.hours_slept;
  for (const auto& [pre, post] : schema.ratings) out << ',' << pre << ',' << post;
  out << '\n';
  auto opt = [](const std::optional<double>& v) {
    return v ? util::format_double(*v) : std::string();
  };
  for (const auto& m : ds.metas) {
    out << m.participant_id << ',' << m.session_id << ',' << opt(m.age) << ','
        << (m.gender == Gender::Female ? "F" : m.gender == Gender::Male ? "M" : "")
        << ',' << (m.fatigue_label ? (*m.fatigue_label ? "1" : "0") : "") << ','
        << opt(m.hours_slept);
    for (const auto& r : m.subjective) out << ',' << opt(r.pre) << ',' << opt(r.post);
    out << '\n';
  }
  if (metadata_path.has_parent_path()) {
    std::filesystem::create_directories(metadata_path.parent_path());
  }
  util::write_file_atomic(metadata_path, out.str());
}

}  // namespace fatigue
