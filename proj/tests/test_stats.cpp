#include "fatigue/stats.hpp"

#include "oracles/t_reference.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace fatigue;
using namespace fatigue::stats;

namespace {

constexpr double kTableTol = 1e-9;

Recording recording_of(const std::string& pid, Task task, const std::vector<double>& lx,
                       double pos_scale = 0.0) {
  Recording r;
  r.participant_id = pid;
  r.session_id = "1";
  r.task = task;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    GazeSample s;
    s.n = 4.0 * static_cast<double>(i);
    s.x = s.y = s.ly = s.rx = s.ry = 0.0;
    s.lx = lx[i];
    if (pos_scale > 0.0) {
      s.pos_l = Eigen::Vector3d(pos_scale * static_cast<double>(i % 3), 0.0, 0.0);
      s.pos_r = Eigen::Vector3d::Zero();
    }
    r.samples.push_back(s);
  }
  return r;
}

SessionMeta meta_of(const std::string& pid, std::optional<bool> label) {
  SessionMeta m;
  m.participant_id = pid;
  m.session_id = "1";
  m.fatigue_label = label;
  return m;
}

}  // namespace

TEST(TTests, MatchFrozenScipyTable) {
  const auto& cases = oracle::t_cases();
  ASSERT_EQ(cases.size(), 20u);
  for (std::size_t k = 0; k < cases.size(); ++k) {
    const auto& c = cases[k];
    SCOPED_TRACE("case " + std::to_string(k));
    const auto w = two_sample_t(c.a, c.b, VarianceForm::Welch);
    EXPECT_NEAR(w.t, c.welch_t, kTableTol);
    EXPECT_NEAR(w.p, c.welch_p, kTableTol);
    EXPECT_NEAR(w.df, c.welch_df, kTableTol);
    const auto s = two_sample_t(c.a, c.b, VarianceForm::Pooled);
    EXPECT_NEAR(s.t, c.student_t, kTableTol);
    EXPECT_NEAR(s.p, c.student_p, kTableTol);
    if (!std::isnan(c.paired_t)) {
      const auto p = paired_t(c.a, c.b);
      EXPECT_NEAR(p.t, c.paired_t, kTableTol);
      EXPECT_NEAR(p.p, c.paired_p, kTableTol);
      EXPECT_EQ(p.df, static_cast<double>(c.a.size() - 1));
    }
  }
}

TEST(TTests, PairedEqualsOneSampleOnDifferences) {
  const std::vector<double> a{3.1, 4.7, 2.2, 5.9, 4.4}, b{2.0, 4.1, 2.5, 4.0, 3.3};
  std::vector<double> d, zero(a.size(), 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) d.push_back(a[i] - b[i]);
  const auto r = paired_t(a, b);
  const double expected = mean(d) / std::sqrt(sample_variance(d) / 5.0);
  EXPECT_NEAR(r.t, expected, 1e-12);
  EXPECT_NEAR(paired_t(d, zero).t, r.t, 1e-12);
}

TEST(TTests, Antisymmetric) {
  const std::vector<double> a{1.0, 2.5, 3.0, 4.2}, b{2.0, 2.1, 5.5, 6.0, 7.1};
  const auto ab = two_sample_t(a, b), ba = two_sample_t(b, a);
  EXPECT_NEAR(ab.t, -ba.t, 1e-14);
  EXPECT_NEAR(ab.p, ba.p, 1e-14);
  EXPECT_NEAR(ab.df, ba.df, 1e-12);
}

TEST(TTests, DegenerateInputs) {
  auto code = [](auto&& f) {
    try {
      f();
    } catch (const Error& e) {
      return e.code();
    }
    return Errc::Io;
  };
  const std::vector<double> one{1.0}, flat{2.0, 2.0, 2.0}, flat2{3.0, 3.0, 3.0};
  EXPECT_EQ(code([&] { two_sample_t(one, flat); }), Errc::DegenerateTest);
  EXPECT_EQ(code([&] { two_sample_t(flat, flat2); }), Errc::DegenerateTest);
  EXPECT_EQ(code([&] { paired_t(flat, flat2); }), Errc::DegenerateTest);  // constant differences
  EXPECT_EQ(code([&] { paired_t(one, flat); }), Errc::LengthMismatch);
  EXPECT_EQ(code([&] { sample_variance(one); }), Errc::DegenerateTest);
}

TEST(TTests, OneZeroVarianceGroupStillWorks) {
  const std::vector<double> flat{2.0, 2.0, 2.0}, b{1.0, 2.0, 4.0, 5.0};
  const auto r = two_sample_t(flat, b);
  EXPECT_TRUE(std::isfinite(r.t));
  EXPECT_NEAR(r.df, 3.0, 1e-12);  // all variance from b
}

TEST(TTests, PValueTails) {
  EXPECT_NEAR(t_two_sided_p(0.0, 5.0), 1.0, 1e-15);
  EXPECT_EQ(t_two_sided_p(std::numeric_limits<double>::infinity(), 5.0), 0.0);
  EXPECT_NEAR(t_two_sided_p(2.0, 1e7), 0.04550026389635842, 1e-6);  // near the normal limit
}

TEST(Variance, MatchesClosedForm) {
  // values 0..n-1: sample variance n(n+1)/12
  std::vector<double> v;
  for (int i = 0; i < 11; ++i) v.push_back(i);
  const auto rec = recording_of("1", Task::VRG, v);
  EXPECT_NEAR(gaze_variance(rec, Signal::Orientation, Eye::Left), 11.0 * 12.0 / 12.0, 1e-12);
  EXPECT_NEAR(gaze_variance(rec, Signal::Orientation, Eye::Right), 0.0, 1e-15);
}

TEST(Variance, TranslationInvariantAndSkipsMissing) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 2.0);
  std::vector<double> v(200), shifted(200);
  for (std::size_t i = 0; i < v.size(); ++i) shifted[i] = (v[i] = n(rng)) + 1e4;
  const double base = gaze_variance(recording_of("1", Task::VRG, v), Signal::Orientation, Eye::Left);
  EXPECT_NEAR(gaze_variance(recording_of("1", Task::VRG, shifted), Signal::Orientation, Eye::Left),
              base, 1e-8);
  auto with_gap = v;
  with_gap.push_back(kMissing);
  EXPECT_NEAR(gaze_variance(recording_of("1", Task::VRG, with_gap), Signal::Orientation, Eye::Left),
              base, 1e-12);
}

TEST(Variance, PositionNeedsPositionSamples) {
  const auto rec = recording_of("1", Task::VRG, {1.0, 2.0, 3.0});
  try {
    gaze_variance(rec, Signal::Position, Eye::Left);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::MissingSignal);
  }
  const auto with_pos = recording_of("1", Task::VRG, {1.0, 2.0, 3.0}, 0.01);
  EXPECT_NEAR(gaze_variance(with_pos, Signal::Position, Eye::Left), 1e-4, 1e-15);
}

TEST(Variance, BatteryCoversEveryTaskEyeAndSignal) {
  std::vector<Recording> recs;
  std::vector<SessionMeta> metas;
  for (int p = 0; p < 6; ++p) {
    const std::string pid = std::to_string(p);
    metas.push_back(meta_of(pid, p % 2 == 0));
    for (Task t : kAllTasks) {
      std::vector<double> v;
      for (int i = 0; i < 50; ++i) v.push_back(std::sin(i * (1.0 + p)) * (1.0 + (p % 2)));
      auto rec = recording_of(pid, t, v, 0.01 * (1 + p));
      for (auto& s : rec.samples) {
        s.rx = 0.5 * s.lx;
        s.pos_r = 0.5 * *s.pos_l;
      }
      recs.push_back(std::move(rec));
    }
  }
  SessionIndex index(recs, metas);
  const auto rows = variance_battery(index);
  ASSERT_EQ(rows.size(), 20u);
  for (const auto& r : rows) {
    EXPECT_EQ(r.n_fatigue, 3u);
    EXPECT_EQ(r.n_no_fatigue, 3u);
    ASSERT_TRUE(r.welch.has_value());
    ASSERT_TRUE(r.pooled.has_value());
  }
  // orientation: non-fatigued (odd p) have twice the amplitude, so t > 0
  for (const auto& r : rows) {
    if (r.signal == Signal::Orientation && r.eye == Eye::Left) {
      EXPECT_GT(r.welch->t, 0.0);
    }
  }
  const auto series = variance_series(index, Task::PUR, Signal::Orientation, Eye::Left, 0.1, 0.05);
  EXPECT_FALSE(series.empty());
}

TEST(Subjective, GroupsAndSigns) {
  std::vector<SessionMeta> metas;
  for (int p = 0; p < 8; ++p) {
    auto m = meta_of(std::to_string(p), p < 4);
    const double pre = 3.0 + (p % 4) * 0.5;
    const double rise = p < 4 ? 2.0 + 0.1 * p : 0.5 + 0.2 * p;
    m.subjective[0] = Rating{pre, pre + rise};
    metas.push_back(m);
  }
  metas.push_back(metas.front());  // a second session row is ignored
  metas.back().subjective[0] = Rating{100.0, 100.0};
  std::vector<std::string> warnings;
  const auto rows = subjective_battery(metas, VarianceForm::Welch, warnings);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(warnings.size(), 4u);  // four measures without data
  const auto& r = rows[0];
  EXPECT_EQ(r.measure, Measure::Sleepiness);
  EXPECT_EQ(r.fatigue.n, 4u);
  EXPECT_EQ(r.no_fatigue.n, 4u);
  EXPECT_NEAR(r.fatigue.delta, r.fatigue.post - r.fatigue.pre, 1e-12);
  ASSERT_TRUE(r.paired_fatigue && r.delta_group);
  EXPECT_LT(r.paired_fatigue->t, 0.0);  // pre - post
  EXPECT_LT(r.delta_group->t, 0.0);     // no-fatigue rises less
  ASSERT_TRUE(r.pre_group.has_value());
  EXPECT_NEAR(r.pre_group->t, 0.0, 1e-12);  // identical pre ratings
}

TEST(Metadata, SummaryCountsUniqueParticipants) {
  std::vector<SessionMeta> metas;
  for (int p = 0; p < 5; ++p) {
    auto m = meta_of(std::to_string(p), p < 2 ? std::optional<bool>(true)
                                               : (p < 4 ? std::optional<bool>(false) : std::nullopt));
    m.hours_slept = 6.0 + p;
    m.age = 20.0 + p;
    m.gender = p % 2 == 0 ? Gender::Female : Gender::Male;
    metas.push_back(m);
  }
  metas.push_back(metas[0]);
  const auto s = summarize_metadata(metas);
  EXPECT_EQ(s.participants, 5u);
  EXPECT_EQ(s.fatigued, 2u);
  EXPECT_EQ(s.non_fatigued, 2u);
  EXPECT_EQ(s.unlabelled, 1u);
  EXPECT_NEAR(*s.hours_slept_fatigued, 6.5, 1e-12);
  EXPECT_NEAR(*s.hours_slept_non_fatigued, 8.5, 1e-12);
  EXPECT_NEAR(*s.mean_age, 22.0, 1e-12);
  EXPECT_EQ(s.female, 3u);
  EXPECT_EQ(s.male, 2u);
}
