#include "fatigue/ingest.hpp"
#include "fatigue/util.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

using namespace fatigue;

namespace {

const RecordingKey kKey{"7", "1", Task::PUR};

std::string csv_rows(int n, double dt = 4.0) {
  std::ostringstream out;
  out << "n,x,y,lx,ly,rx,ry\n";
  for (int i = 0; i < n; ++i) {
    out << i * dt << ',' << 0.01 * i << ",-1," << 0.01 * i + 1 << ",-1," << 0.01 * i - 1
        << ",-1\n";
  }
  return out.str();
}

Recording parse(const std::string& text, ParseReport& rep) {
  std::istringstream in(text);
  return parse_recording(in, kKey, ColumnSchema{}, rep);
}

Errc parse_error(const std::string& text) {
  ParseReport rep;
  try {
    parse(text, rep);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an error";
  return Errc::Io;
}

}  // namespace

TEST(ParseRecording, RegularFileAt250Hz) {
  ParseReport rep;
  const Recording rec = parse(csv_rows(2500), rep);
  ASSERT_EQ(rec.samples.size(), 2500u);
  EXPECT_EQ(rep.rows, 2500u);
  EXPECT_EQ(rep.gaps, 0u);
  EXPECT_TRUE(rep.warnings.empty());
  EXPECT_DOUBLE_EQ(rec.samples[1].n - rec.samples[0].n, 4.0);
  EXPECT_DOUBLE_EQ(rec.duration_ms(), 10000.0);
  EXPECT_EQ(rec.task, Task::PUR);
  EXPECT_EQ(rec.participant_id, "7");
}

TEST(ParseRecording, MissingColumnIsAnError) {
  EXPECT_EQ(parse_error("n,x,y,lx,ly,ry\n0,1,1,1,1,1\n"), Errc::MissingColumn);
}

TEST(ParseRecording, EmptyFilesAreErrors) {
  EXPECT_EQ(parse_error(""), Errc::EmptyRecording);
  EXPECT_EQ(parse_error("n,x,y,lx,ly,rx,ry\n"), Errc::EmptyRecording);
}

TEST(ParseRecording, DecreasingTimeIsAnError) {
  EXPECT_EQ(parse_error("n,x,y,lx,ly,rx,ry\n0,1,1,1,1,1,1\n8,1,1,1,1,1,1\n4,1,1,1,1,1,1\n"),
            Errc::NonMonotoneTime);
}

TEST(ParseRecording, EmptyAnglesBecomeExplicitGaps) {
  std::ostringstream out;
  out << "n,x,y,lx,ly,rx,ry\n";
  for (int i = 0; i < 100; ++i) {
    if (i % 10 == 3) {
      out << i * 4 << ",,,1,1,1,1\n";
    } else {
      out << i * 4 << ",0.5,0.5,1,1,1,1\n";
    }
  }
  ParseReport rep;
  const Recording rec = parse(out.str(), rep);
  EXPECT_EQ(rep.gaps, 10u);
  EXPECT_EQ(rec.gap_count(), 10u);
  EXPECT_TRUE(std::isnan(rec.samples[3].x));
  EXPECT_FALSE(std::isnan(rec.samples[3].lx));  // never zero-filled, never invented
}

TEST(ParseRecording, DuplicateTimestampsKeepFirst) {
  ParseReport rep;
  const Recording rec =
      parse("n,x,y,lx,ly,rx,ry\n0,1,1,1,1,1,1\n4,2,2,2,2,2,2\n4,9,9,9,9,9,9\n8,3,3,3,3,3,3\n", rep);
  ASSERT_EQ(rec.samples.size(), 3u);
  EXPECT_DOUBLE_EQ(rec.samples[1].x, 2.0);
  EXPECT_EQ(rep.duplicates_dropped, 1u);
  EXPECT_FALSE(rep.warnings.empty());
}

TEST(ParseRecording, AnglesBeyond90AreMissing) {
  ParseReport rep;
  const Recording rec = parse("n,x,y,lx,ly,rx,ry\n0,95,1,1,1,1,1\n4,1,1,1,1,1,1\n", rep);
  EXPECT_TRUE(std::isnan(rec.samples[0].x));
  EXPECT_EQ(rep.gaps, 1u);
  EXPECT_FALSE(rep.warnings.empty());
}

TEST(ParseRecording, IrregularIntervalWarns) {
  ParseReport rep;
  parse(csv_rows(50, 8.0), rep);
  ASSERT_EQ(rep.warnings.size(), 1u);
  EXPECT_NE(rep.warnings[0].find("median"), std::string::npos);
}

TEST(ParseRecording, OptionalVectorsAndRenormalisation) {
  ParseReport rep;
  const Recording rec = parse(
      "n,x,y,lx,ly,rx,ry,clx,cly,clz,dlx,dly,dlz\n"
      "0,1,1,1,1,1,1,0.03,0.01,-0.02,0,0,2\n"
      "4,1,1,1,1,1,1,0.03,0.01,-0.02,3,0,4\n",
      rep);
  ASSERT_TRUE(rec.samples[0].pos_l);
  EXPECT_DOUBLE_EQ((*rec.samples[0].pos_l)(2), -0.02);
  EXPECT_FALSE(rec.samples[0].pos_r);
  ASSERT_TRUE(rec.samples[1].dir_l);
  EXPECT_NEAR(rec.samples[1].dir_l->norm(), 1.0, 1e-15);
  EXPECT_NEAR((*rec.samples[1].dir_l)(0), 0.6, 1e-15);
}

TEST(ParseRecording, WriteThenParseIsIdentical) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n(0.0, 10.0);
  Recording rec;
  rec.participant_id = "7";
  rec.session_id = "1";
  rec.task = Task::PUR;
  for (int i = 0; i < 500; ++i) {
    GazeSample s;
    s.n = 4.0 * i;
    s.x = n(rng);
    s.y = i % 37 == 0 ? kMissing : n(rng);
    s.lx = n(rng);
    s.ly = n(rng);
    s.rx = n(rng);
    s.ry = n(rng);
    s.pos_l = Eigen::Vector3d(n(rng), n(rng), n(rng));
    rec.samples.push_back(s);
  }
  std::ostringstream out;
  write_recording_csv(rec, out);
  ParseReport rep;
  const Recording back = parse(out.str(), rep);
  ASSERT_EQ(back.samples.size(), rec.samples.size());
  for (std::size_t i = 0; i < rec.samples.size(); ++i) {
    const auto& a = rec.samples[i];
    const auto& b = back.samples[i];
    EXPECT_EQ(a.n, b.n);
    EXPECT_EQ(a.x, b.x);
    EXPECT_EQ(std::isnan(a.y), std::isnan(b.y));
    if (!std::isnan(a.y)) EXPECT_EQ(a.y, b.y);
    EXPECT_EQ(a.ry, b.ry);
    EXPECT_EQ(*a.pos_l, *b.pos_l);
  }
}

TEST(Filenames, GazeBaseVrPattern) {
  const ColumnSchema schema;
  auto k = key_from_filename("S_1002_S1_3_PUR.csv", schema);
  ASSERT_TRUE(k);
  EXPECT_EQ(k->participant_id, "1002");
  EXPECT_EQ(k->session_id, "1");
  EXPECT_EQ(k->task, Task::PUR);
  k = key_from_filename("S_5_S2_TEX.csv", schema);
  ASSERT_TRUE(k);
  EXPECT_EQ(k->task, Task::TEX);
  EXPECT_FALSE(key_from_filename("S_5_S2_XYZ.csv", schema));
  EXPECT_FALSE(key_from_filename("notes.csv", schema));
}

TEST(Metadata, ParsesRowsAndFlagsProblems) {
  std::istringstream in(
      "participant_id,session_id,age,gender,fatigue,hours_slept,sleepiness_pre,sleepiness_post\n"
      "1,1,20,F,1,6.5,2,3\n"
      "2,1,22,male,0,8,9,1\n"
      "3,1,19,,,7,1,1\n");
  std::vector<std::string> warnings;
  const auto metas = load_metadata(in, MetadataSchema{}, warnings);
  ASSERT_EQ(metas.size(), 3u);
  EXPECT_EQ(metas[0].fatigue_label, std::optional<bool>(true));
  EXPECT_EQ(metas[0].gender, Gender::Female);
  EXPECT_DOUBLE_EQ(*metas[0].hours_slept, 6.5);
  EXPECT_DOUBLE_EQ(*metas[0].rating(Measure::Sleepiness).post, 3.0);
  EXPECT_EQ(metas[1].fatigue_label, std::optional<bool>(false));
  EXPECT_FALSE(metas[1].rating(Measure::Sleepiness).pre);  // 9 is outside 1..7
  EXPECT_FALSE(metas[2].fatigue_label);
  EXPECT_EQ(warnings.size(), 2u);  // out-of-range rating, missing label
}

TEST(Metadata, EmptyFileWarns) {
  std::istringstream in("");
  std::vector<std::string> warnings;
  EXPECT_TRUE(load_metadata(in, MetadataSchema{}, warnings).empty());
  EXPECT_EQ(warnings.size(), 1u);
}

TEST(Metadata, CustomSchemaBindsRatings) {
  MetadataSchema schema;
  schema.participant_id = "pid";
  schema.fatigue = "tired";
  schema.ratings[static_cast<std::size_t>(Measure::NeckFatigue)] = {"neck_a", "neck_b"};
  std::istringstream in("pid,tired,neck_a,neck_b\n4,yes,1,5\n");
  std::vector<std::string> warnings;
  const auto metas = load_metadata(in, schema, warnings);
  ASSERT_EQ(metas.size(), 1u);
  EXPECT_TRUE(*metas[0].fatigue_label);
  EXPECT_DOUBLE_EQ(*metas[0].rating(Measure::NeckFatigue).post, 5.0);
}

TEST(SessionIndex, BucketsAndOrphans) {
  std::vector<Recording> recs;
  for (const char* pid : {"1", "2"}) {
    for (Task t : kAllTasks) {
      Recording r;
      r.participant_id = pid;
      r.session_id = "1";
      r.task = t;
      recs.push_back(r);
    }
  }
  Recording stray;
  stray.participant_id = "99";
  stray.task = Task::VID;
  recs.push_back(stray);
  std::vector<SessionMeta> metas(2);
  metas[0].participant_id = "1";
  metas[1].participant_id = "2";
  const SessionIndex idx = index_sessions(recs, metas);
  EXPECT_EQ(idx.size(), 11u);
  ASSERT_EQ(idx.orphans().size(), 1u);
  EXPECT_EQ(idx.recording(idx.orphans()[0]).participant_id, "99");
  const auto hits = idx.lookup("2", Task::TEX);
  ASSERT_EQ(hits.size(), 1u);
  ASSERT_NE(idx.meta(hits[0]), nullptr);
  EXPECT_EQ(idx.meta(hits[0])->participant_id, "2");
  EXPECT_EQ(idx.participants(Task::VID), (std::vector<std::string>{"1", "2", "99"}));

  std::size_t total = 0;
  for (const auto& [key, entries] : idx.buckets()) total += entries.size();
  EXPECT_EQ(total, recs.size());  // each recording in exactly one bucket

  EXPECT_TRUE(index_sessions({}, {}).empty());
}

TEST(SessionIndex, PrefersMatchingSession) {
  Recording r;
  r.participant_id = "1";
  r.session_id = "2";
  std::vector<SessionMeta> metas(2);
  metas[0].participant_id = metas[1].participant_id = "1";
  metas[0].session_id = "1";
  metas[1].session_id = "2";
  const SessionIndex idx = index_sessions({r}, metas);
  EXPECT_EQ(idx.meta(idx.lookup("1", Task::VRG)[0])->session_id, "2");
}

TEST(LoadDataset, SkipsCorruptFilesAndFingerprints) {
  const auto dir = std::filesystem::temp_directory_path() / "fatigue_ingest_ds";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  util::write_file_atomic(dir / "S_1_S1_PUR.csv", csv_rows(100));
  util::write_file_atomic(dir / "S_2_S1_PUR.csv", csv_rows(50));
  util::write_file_atomic(dir / "S_3_S1_PUR.csv", "n,x\n0,1\n");  // corrupt
  util::write_file_atomic(dir / "readme.csv", "ignored");
  util::write_file_atomic(dir / "meta.csv", "participant_id,fatigue\n1,1\n2,0\n");

  const Dataset ds = load_dataset(dir, dir / "meta.csv", ColumnSchema{}, MetadataSchema{});
  EXPECT_EQ(ds.file_count, 3u);
  EXPECT_EQ(ds.failed_files, 1u);
  EXPECT_EQ(ds.total_rows, 150u);
  EXPECT_EQ(ds.index.recordings().size(), 2u);
  ASSERT_EQ(ds.reports.size(), 3u);
  EXPECT_FALSE(ds.reports[2].errors.empty());
  EXPECT_NE(ds.reports[2].to_json_line().find("\"errors\""), std::string::npos);

  const Dataset again = load_dataset(dir, dir / "meta.csv", ColumnSchema{}, MetadataSchema{});
  EXPECT_EQ(again.checksum, ds.checksum);
  util::write_file_atomic(dir / "meta.csv", "participant_id,fatigue\n1,0\n2,0\n");
  const Dataset relabelled = load_dataset(dir, dir / "meta.csv", ColumnSchema{}, MetadataSchema{});
  EXPECT_NE(relabelled.checksum, ds.checksum);
  std::filesystem::remove_all(dir);
}

TEST(LoadDataset, MissingDirectoryIsAnError) {
  EXPECT_THROW(load_dataset("/nonexistent/fatigue", "", ColumnSchema{}, MetadataSchema{}), Error);
}
