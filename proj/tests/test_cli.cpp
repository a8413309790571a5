// Runs the command-line tool as a subprocess and checks exit codes and outputs.

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(FATIGUE_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    root_ = new fs::path(fs::temp_directory_path() / "fatigue_cli_test");
    fs::remove_all(*root_);
    fs::create_directories(*root_);
    ASSERT_EQ(run("synth -o " + root_->string() + " --participants 6 --duration 21"), 0);
  }
  static void TearDownTestSuite() {
    fs::remove_all(*root_);
    delete root_;
  }
  static std::string common(const std::string& results = "results") {
    return "--data-dir " + (*root_ / "data").string() + " --metadata " +
           (*root_ / "metadata.csv").string() + " --cache-dir " + (*root_ / "cache").string() +
           " --results-dir " + (*root_ / results).string() + " --epochs 1 ";
  }
  static fs::path* root_;
};

fs::path* Cli::root_ = nullptr;

}  // namespace

TEST_F(Cli, SynthWritesRecordingsAndMetadata) {
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(*root_ / "data")) files += e.path().extension() == ".csv";
  EXPECT_EQ(files, 30u);
  EXPECT_TRUE(fs::exists(*root_ / "metadata.csv"));
}

TEST_F(Cli, IngestSucceedsOnCleanData) {
  EXPECT_EQ(run(common() + "ingest"), 0);
  EXPECT_TRUE(fs::exists(*root_ / "cache" / "parse_report.jsonl"));
  EXPECT_TRUE(fs::exists(*root_ / "cache" / "windows_PUR_5s.bin"));
}

TEST_F(Cli, EmptyDirectoryIsFatal) {
  const auto empty = *root_ / "empty";
  fs::create_directories(empty);
  EXPECT_EQ(run("--data-dir " + empty.string() + " --metadata " + (*root_ / "metadata.csv").string() +
                " --cache-dir " + (*root_ / "cache_empty").string() + " ingest --no-windows"),
            1);
}

TEST_F(Cli, CorruptFileIsPartialSuccess) {
  const auto dir = *root_ / "partial";
  fs::create_directories(dir);
  fs::copy_file(*root_ / "data" / "S_1_S1_VRG.csv", dir / "S_1_S1_VRG.csv");
  std::ofstream(dir / "S_2_S1_VRG.csv") << "this,is,not\na,recording,file\n";
  EXPECT_EQ(run("--data-dir " + dir.string() + " --metadata " + (*root_ / "metadata.csv").string() +
                " --cache-dir " + (*root_ / "cache_partial").string() + " ingest --no-windows"),
            2);
}

TEST_F(Cli, TrainWritesResultAndCheckpoint) {
  const auto out = *root_ / "cell.json";
  const auto ckpt = *root_ / "cell.ckpt.json";
  EXPECT_EQ(run(common() + "train --task PUR --model TLENET --window 5 -o " + out.string() +
                " --checkpoint " + ckpt.string()),
            0);
  EXPECT_TRUE(fs::exists(out));
  EXPECT_TRUE(fs::exists(ckpt));
  EXPECT_NE(run(common() + "train --task PUR --model NOPE --window 5"), 0);
  EXPECT_NE(run(common() + "train --task PUR --model TLENET --window 7"), 0);
}

TEST_F(Cli, GridThenReport) {
  const std::string opts = common("grid_results") + "--tasks PUR --models TLENET MCDCNN --windows 5 10 ";
  EXPECT_EQ(run(opts + "grid"), 0);
  EXPECT_TRUE(fs::exists(*root_ / "grid_results" / "results.csv"));
  EXPECT_TRUE(fs::exists(*root_ / "grid_results" / "manifest.json"));
  EXPECT_EQ(run(opts + "grid"), 0);  // resumes with nothing to do
  // a partial grid leaves blanks, which the report flags
  EXPECT_EQ(run(opts + "report --reference"), 2);
  EXPECT_TRUE(fs::exists(*root_ / "grid_results" / "report" / "report.md"));
  EXPECT_TRUE(fs::exists(*root_ / "grid_results" / "report" / "table_PUR.csv"));
  // a changed learning rate conflicts with the stored manifest
  EXPECT_EQ(run(opts + "--lr 0.01 grid"), 1);
  EXPECT_EQ(run(opts + "--lr 0.01 grid --restart"), 0);
}

TEST_F(Cli, StatsWritesTables) {
  EXPECT_EQ(run(common("stats_results") + "stats --reference"), 0);
  const auto dir = *root_ / "stats_results" / "stats";
  EXPECT_TRUE(fs::exists(dir / "metadata.md"));
  EXPECT_TRUE(fs::exists(dir / "variance_battery.csv"));
  EXPECT_TRUE(fs::exists(dir / "subjective.csv"));
}

TEST_F(Cli, BadArgumentsFail) {
  EXPECT_NE(run("no-such-command"), 0);
  EXPECT_NE(run(common() + "--precision float16 ingest"), 0);
}
