#include "fatigue/preprocess.hpp"

#include "oracles/angles.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

using namespace fatigue;

namespace {

Recording gap_free(double seconds, const std::string& pid = "1", Task task = Task::PUR) {
  Recording rec;
  rec.participant_id = pid;
  rec.session_id = "1";
  rec.task = task;
  const auto n = static_cast<int>(std::llround(seconds * kSampleRateHz));
  for (int i = 0; i < n; ++i) {
    GazeSample s;
    s.n = 4.0 * i;
    s.x = std::sin(0.01 * i);
    s.y = std::cos(0.013 * i);
    s.lx = s.x + 1;
    s.ly = s.y;
    s.rx = s.x - 1;
    s.ry = s.y;
    rec.samples.push_back(s);
  }
  return rec;
}

void blank(Recording& rec, std::size_t from, std::size_t count) {
  for (std::size_t k = from; k < from + count; ++k) {
    auto& s = rec.samples[k];
    s.x = s.y = s.lx = s.ly = s.rx = s.ry = kMissing;
  }
}

SessionMeta labelled(bool fatigue, const std::string& pid = "1") {
  SessionMeta m;
  m.participant_id = pid;
  m.fatigue_label = fatigue;
  return m;
}

}  // namespace

TEST(Angles, ForwardAndFortyFive) {
  auto a = vector_to_angles({0, 0, 1});
  EXPECT_EQ(a.horizontal, 0.0);
  EXPECT_EQ(a.vertical, 0.0);
  a = vector_to_angles({1, 0, 1});
  EXPECT_NEAR(a.horizontal, 45.0, 1e-14);
  EXPECT_EQ(a.vertical, 0.0);
}

TEST(Angles, ZeroVectorThrows) {
  try {
    vector_to_angles({0, 0, 0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::ZeroVector);
  }
  EXPECT_THROW(vector_to_angles({std::nan(""), 0, 1}), Error);
}

TEST(Angles, MatchFiftyDigitOracle) {
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> n(0.0, 1.0);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    GazeVector v(n(rng), n(rng), n(rng));
    v.normalize();
    const auto got = vector_to_angles(v);
    const auto want = oracle::big_angles(v);
    worst = std::max({worst, std::abs(got.horizontal - want.horizontal),
                      std::abs(got.vertical - want.vertical)});
  }
  EXPECT_LE(worst, 1e-12);
}

TEST(Angles, RoundTrip) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-89.0, 89.0);
  for (int i = 0; i < 1000; ++i) {
    const GazeAngles a{u(rng), u(rng)};
    const auto v = angles_to_vector(a);
    EXPECT_NEAR(v.norm(), 1.0, 1e-15);
    const auto b = vector_to_angles(v);
    EXPECT_NEAR(a.horizontal, b.horizontal, 1e-9);
    EXPECT_NEAR(a.vertical, b.vertical, 1e-9);
  }
}

TEST(RepairGaps, ShortGapIsInterpolatedLinearly) {
  Recording rec = gap_free(1.0);
  const double x9 = rec.samples[9].x, x13 = rec.samples[13].x;
  blank(rec, 10, 3);  // 12 ms
  const Recording out = repair_gaps(rec, ChannelConfig{});
  for (std::size_t k = 10; k < 13; ++k) {
    EXPECT_TRUE(out.samples[k].repaired);
    EXPECT_NEAR(out.samples[k].x, x9 + (static_cast<double>(k) - 9.0) / 4.0 * (x13 - x9), 1e-15);
  }
  EXPECT_FALSE(out.samples[9].repaired);
  EXPECT_EQ(out.gap_count(), 0u);
}

TEST(RepairGaps, LongGapIsKept) {
  Recording rec = gap_free(2.0);
  blank(rec, 100, 50);  // 200 ms
  const Recording out = repair_gaps(rec, ChannelConfig{});
  EXPECT_EQ(out.gap_count(), 50u);
}

TEST(RepairGaps, BoundaryAtLimit) {
  Recording rec = gap_free(2.0);
  blank(rec, 100, 25);  // exactly 100 ms
  blank(rec, 200, 26);  // 104 ms
  const Recording out = repair_gaps(rec, ChannelConfig{});
  EXPECT_EQ(out.gap_count(), 26u);
}

TEST(RepairGaps, GapsAtTheEndsAreKept) {
  Recording rec = gap_free(1.0);
  blank(rec, 0, 3);
  blank(rec, rec.samples.size() - 2, 2);
  const Recording out = repair_gaps(rec, ChannelConfig{});
  EXPECT_EQ(out.gap_count(), 5u);
}

TEST(MakeWindows, CountsAndShapes) {
  const ChannelConfig cfg;
  auto ws = make_windows(gap_free(60.0), labelled(true), 10, cfg);
  ASSERT_EQ(ws.size(), 6u);
  for (const auto& w : ws) {
    EXPECT_EQ(w.data.rows(), 4);
    EXPECT_EQ(w.data.cols(), 2500);
    EXPECT_TRUE(w.label);
    EXPECT_TRUE(w.data.allFinite());
  }
  EXPECT_DOUBLE_EQ(ws[1].start_ms, 10000.0);
  EXPECT_EQ(make_windows(gap_free(38.0), labelled(false), 20, cfg).size(), 1u);
  EXPECT_EQ(make_windows(gap_free(9.9), labelled(false), 10, cfg).size(), 0u);
  for (int d : kWindowDurations) {
    EXPECT_EQ(make_windows(gap_free(61.0), labelled(false), d, cfg).size(),
              static_cast<std::size_t>(61 / d));
  }
}

TEST(MakeWindows, RejectsOddDurations) {
  EXPECT_THROW(make_windows(gap_free(10.0), labelled(true), 7, ChannelConfig{}), Error);
}

TEST(MakeWindows, UnlabelledGivesNothing) {
  SessionMeta m;
  EXPECT_TRUE(make_windows(gap_free(10.0), m, 5, ChannelConfig{}).empty());
}

TEST(MakeWindows, VelocityChannels) {
  const Recording rec = gap_free(5.0);
  const auto ws = make_windows(rec, labelled(true), 5, ChannelConfig{});
  ASSERT_EQ(ws.size(), 1u);
  const auto& d = ws[0].data;
  for (Index t = 1; t < d.cols(); ++t) {
    EXPECT_DOUBLE_EQ(d(2, t), (d(0, t) - d(0, t - 1)) * 250.0);
    EXPECT_DOUBLE_EQ(d(3, t), (d(1, t) - d(1, t - 1)) * 250.0);
  }
  EXPECT_EQ(d(2, 0), d(2, 1));
  EXPECT_EQ(d(3, 0), d(3, 1));
}

TEST(MakeWindows, BinocularMode) {
  ChannelConfig cfg;
  cfg.mode = ChannelMode::Binocular;
  const Recording rec = gap_free(5.0);
  const auto ws = make_windows(rec, labelled(true), 5, cfg);
  ASSERT_EQ(ws.size(), 1u);
  EXPECT_EQ(ws[0].data(0, 7), rec.samples[7].lx);
  EXPECT_EQ(ws[0].data(3, 7), rec.samples[7].ry);
}

TEST(MakeWindows, DropRules) {
  const ChannelConfig cfg;
  Recording rec = gap_free(20.0);
  blank(rec, 100, 50);          // unrepairable gap in window 0
  for (std::size_t start = 1250 + 10; start < 1250 + 1250 - 30; start += 30) {
    blank(rec, start, 10);      // many short gaps in window 1: ~40 % repaired
  }
  blank(rec, 2500 + 500, 20);   // one blink in window 2
  const Recording repaired = repair_gaps(rec, cfg);
  const auto ws = make_windows(repaired, labelled(true), 5, cfg);
  ASSERT_EQ(ws.size(), 2u);
  EXPECT_DOUBLE_EQ(ws[0].start_ms, 10000.0);
  EXPECT_DOUBLE_EQ(ws[1].start_ms, 15000.0);
}

TEST(WindowsForTask, FiltersParticipantsAndCarriesLabels) {
  std::vector<Recording> recs = {gap_free(10, "1"), gap_free(10, "2"), gap_free(10, "3"),
                                 gap_free(10, "1", Task::VID)};
  std::vector<SessionMeta> metas = {labelled(true, "1"), labelled(false, "2")};
  const auto idx = index_sessions(recs, metas);
  auto ws = windows_for_task(idx, Task::PUR, 5, ChannelConfig{});
  EXPECT_EQ(ws.size(), 4u);  // participant 3 has no metadata
  for (const auto& w : ws) EXPECT_EQ(w.label, w.participant_id == "1");
  const std::vector<std::string> only{"2"};
  ws = windows_for_task(idx, Task::PUR, 5, ChannelConfig{}, only);
  ASSERT_EQ(ws.size(), 2u);
  EXPECT_EQ(ws[0].participant_id, "2");
}

TEST(Normalizer, ConstantChannelGoesToZero) {
  Window w;
  w.data = Eigen::MatrixXd::Constant(4, 100, 3.0);
  const auto nrm = fit_normalizer(std::span<const Window>(&w, 1));
  EXPECT_EQ(nrm.stddev(0), kStdFloor);
  EXPECT_TRUE(apply_normalizer(w, nrm).data.isZero(0.0));
}

TEST(Normalizer, StandardisedDataIsUnchanged) {
  Window w;
  w.data.resize(4, 1000);
  std::mt19937_64 rng(9);
  std::normal_distribution<double> n(0.0, 1.0);
  for (Index i = 0; i < w.data.size(); ++i) w.data(i) = n(rng);
  for (int c = 0; c < 4; ++c) {
    auto row = w.data.row(c);
    row.array() -= row.mean();
    row /= std::sqrt(row.squaredNorm() / static_cast<double>(row.size()));
  }
  const auto out = apply_normalizer(w, fit_normalizer(std::span<const Window>(&w, 1)));
  EXPECT_LE((out.data - w.data).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Normalizer, TrainingStatisticsAfterNormalisation) {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> n(5.0, 3.0);
  std::vector<Window> ws(7);
  for (auto& w : ws) {
    w.data.resize(4, 300);
    for (Index i = 0; i < w.data.size(); ++i) w.data(i) = n(rng) * (1 + i % 4);
  }
  const auto nrm = fit_normalizer(ws);
  apply_normalizer_inplace(ws, nrm);
  for (int c = 0; c < 4; ++c) {
    double s = 0, ss = 0, cnt = 0;
    for (const auto& w : ws) {
      s += w.data.row(c).sum();
      ss += w.data.row(c).squaredNorm();
      cnt += static_cast<double>(w.data.cols());
    }
    const double mu = s / cnt;
    EXPECT_LT(std::abs(mu), 1e-9);
    EXPECT_LT(std::abs(std::sqrt(ss / cnt - mu * mu) - 1.0), 1e-9);
  }
}

TEST(Normalizer, IgnoresWindowsOutsideTheFitSet) {
  std::vector<Window> train(3), test(2);
  for (auto& w : train) w.data = Eigen::MatrixXd::Random(4, 50);
  for (auto& w : test) w.data = Eigen::MatrixXd::Random(4, 50);
  const auto before = fit_normalizer(train);
  for (auto& w : test) w.data.setConstant(1e9);  // poison
  const auto after = fit_normalizer(train);
  EXPECT_EQ(before.mean, after.mean);
  EXPECT_EQ(before.stddev, after.stddev);
}

TEST(WindowCache, RoundTripAndCorruption) {
  WindowCache cache;
  cache.config_hash = 0x1234abcdULL;
  cache.windows = make_windows(gap_free(20.0, "42", Task::TEX), labelled(true, "42"), 5,
                               ChannelConfig{});
  const auto path = std::filesystem::temp_directory_path() / "fatigue_cache_test.bin";
  write_window_cache(path, cache);
  const auto back = read_window_cache(path);
  EXPECT_EQ(back.config_hash, cache.config_hash);
  ASSERT_EQ(back.windows.size(), cache.windows.size());
  for (std::size_t i = 0; i < back.windows.size(); ++i) {
    EXPECT_EQ(back.windows[i].participant_id, "42");
    EXPECT_EQ(back.windows[i].task, Task::TEX);
    EXPECT_TRUE(back.windows[i].label);
    EXPECT_EQ(back.windows[i].start_ms, cache.windows[i].start_ms);
    EXPECT_EQ(back.windows[i].data, cache.windows[i].data);
  }
  std::string bytes;
  {
    std::ifstream in(path, std::ios::binary);
    bytes.assign(std::istreambuf_iterator<char>(in), {});
  }
  std::ofstream(path, std::ios::binary) << bytes.substr(0, bytes.size() / 2);
  EXPECT_THROW(read_window_cache(path), Error);
  std::ofstream(path, std::ios::binary) << "NOTACACHE";
  EXPECT_THROW(read_window_cache(path), Error);
  std::filesystem::remove(path);
}
