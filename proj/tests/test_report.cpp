#include "fatigue/report.hpp"

#include "support/md_tables.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

using namespace fatigue;
using namespace fatigue::report;

namespace {

std::vector<EvalResult> full_results() {
  std::vector<EvalResult> out;
  int k = 0;
  for (Task t : kAllTasks) {
    for (ModelKind m : kAllModels) {
      for (int w : kWindowDurations) {
        EvalResult r;
        r.task = t;
        r.model = m;
        r.window_s = w;
        r.accuracy = 0.5 + 0.004 * (k++);
        r.auc = 0.6;
        r.roc = {{0.0, 0.0}, {0.5, 0.7}, {1.0, 1.0}};
        out.push_back(r);
      }
    }
  }
  return out;
}

}  // namespace

TEST(Report, FiveTablesOfSixByFour) {
  const auto results = full_results();
  const auto rep = build_report(results);
  ASSERT_EQ(rep.tables.size(), 5u);
  EXPECT_TRUE(rep.warnings.empty());
  const auto shapes = md::table_shapes(report_markdown(rep, false, "h"));
  ASSERT_EQ(shapes.size(), 5u);
  for (auto [rows, cols] : shapes) {
    EXPECT_EQ(rows, 6);
    EXPECT_EQ(cols, 4);
  }
  for (const auto& t : rep.tables) {
    for (const auto& row : t.accuracy) {
      for (const auto& cell : row) EXPECT_TRUE(cell.has_value());
    }
  }
}

TEST(Report, MissingCellLeavesBlankAndWarns) {
  auto results = full_results();
  results.erase(results.begin() + 30);  // PUR, FCN, 15 s
  const auto rep = build_report(results);
  ASSERT_EQ(rep.tables.size(), 5u);
  ASSERT_EQ(rep.warnings.size(), 1u);
  EXPECT_NE(rep.warnings[0].find("PUR FCN 15 s"), std::string::npos);
  EXPECT_FALSE(rep.tables[1].accuracy[1][2].has_value());
  EXPECT_NE(table_markdown(rep.tables[1], false).find("|  |"), std::string::npos);
}

TEST(Report, AbsentTaskIsReported) {
  auto results = full_results();
  std::erase_if(results, [](const EvalResult& r) { return r.task == Task::RAN; });
  const auto rep = build_report(results);
  EXPECT_EQ(rep.tables.size(), 4u);
  ASSERT_EQ(rep.warnings.size(), 1u);
  EXPECT_NE(rep.warnings[0].find("RAN"), std::string::npos);
}

TEST(Report, PublishedReferenceValues) {
  EXPECT_DOUBLE_EQ(*reference_accuracy(Task::PUR, ModelKind::EKYT, 5), 0.734);
  EXPECT_DOUBLE_EQ(*reference_accuracy(Task::PUR, ModelKind::EKYT, 20), 0.673);
  EXPECT_DOUBLE_EQ(*reference_accuracy(Task::VRG, ModelKind::TLENET, 10), 0.945);
  EXPECT_DOUBLE_EQ(*reference_accuracy(Task::VID, ModelKind::TLENET, 20), 0.935);
  EXPECT_DOUBLE_EQ(*reference_accuracy(Task::TEX, ModelKind::INCEPTION, 5), 0.683);
  EXPECT_DOUBLE_EQ(*reference_accuracy(Task::RAN, ModelKind::MCDCNN, 15), 0.905);
  EXPECT_FALSE(reference_accuracy(Task::RAN, ModelKind::MCDCNN, 7).has_value());
  const ReferenceCohort c;
  EXPECT_EQ(c.fatigued + c.non_fatigued, c.participants);
}

TEST(Report, ReferenceShownOnlyWhenAsked) {
  const auto rep = build_report(full_results());
  EXPECT_EQ(table_markdown(rep.tables[0], false).find("ref"), std::string::npos);
  EXPECT_NE(table_markdown(rep.tables[0], true).find("(ref 0.824)"), std::string::npos);
}

TEST(Report, CsvShape) {
  const auto rep = build_report(full_results());
  std::istringstream in(table_csv(rep.tables[0]));
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "model,acc_5s,acc_10s,acc_15s,acc_20s,auc_5s,auc_10s,auc_15s,auc_20s");
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 8);
  }
  EXPECT_EQ(rows, 6);
}

TEST(Report, WritesFiles) {
  const auto results = full_results();
  const auto dir = std::filesystem::temp_directory_path() / "fatigue_report_test";
  std::filesystem::remove_all(dir);
  write_report(build_report(results), results, dir, true, "abc");
  EXPECT_TRUE(std::filesystem::exists(dir / "report.md"));
  EXPECT_TRUE(std::filesystem::exists(dir / "table_VID.csv"));
  EXPECT_TRUE(std::filesystem::exists(dir / "roc" / "VID_FCN_10s.csv"));
  EXPECT_EQ(roc_csv(results[0]), "fpr,tpr\n0,0\n0.5,0.7\n1,1\n");
  std::filesystem::remove_all(dir);
}

TEST(Report, StatsRenderers) {
  stats::MetadataSummary s;
  s.participants = 10;
  s.fatigued = 6;
  s.non_fatigued = 4;
  s.hours_slept_fatigued = 6.9;
  const auto md = metadata_markdown(s, true);
  EXPECT_NE(md.find("407"), std::string::npos);
  EXPECT_NE(md.find("6.83"), std::string::npos);
  EXPECT_EQ(metadata_markdown(s, false).find("407"), std::string::npos);
}
