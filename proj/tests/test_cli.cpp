#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "aero/cli.hpp"
#include "aero/data.hpp"
#include "aero/trainer.hpp"
#include "fixtures.hpp"

using namespace aero;
using aero::testing::temp_dir;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "aero");
  std::ostringstream out, err;
  const int code = cli::dispatch(args, out, err);
  return {code, out.str(), err.str()};
}

// Flags that shrink the desk preset to a few seconds of CPU.
const std::vector<std::string> kTiny{"--config", "desk", "--set", "train.total_steps=2", "train.batch_size=1",
                                     "train.log_every=1", "data.chunk_seconds=0.25", "data.hop_seconds=0.25",
                                     "model.base_channels=8", "model.lstm_layers=1"};

std::vector<std::string> with_tiny(std::vector<std::string> args) {
  args.insert(args.end(), kTiny.begin(), kTiny.end());
  return args;
}

class CliCorpus : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    root_ = temp_dir("cli");
    std::filesystem::create_directories(root_ / "corpus");
    for (int i = 0; i < 4; ++i) {
      dsp::write_wav(root_ / "corpus" / ("clip" + std::to_string(i) + ".wav"),
                     aero::testing::voiced_clip(16000, 12000, 40 + i));
    }
    auto r = run({"prepare", "--input-dir", (root_ / "corpus").string(), "--out-dir", (root_ / "prep").string(),
                  "--layout", "flat", "--source-rate", "8000", "--target-rate", "16000", "--test-fraction", "0.5"});
    ASSERT_EQ(r.code, 0) << r.err;
    r = run(with_tiny({"train", "--out-dir", (root_ / "run").string(), "--pairs",
                       (root_ / "prep" / "train_pairs.jsonl").string()}));
    ASSERT_EQ(r.code, 0) << r.err;
  }
  static void TearDownTestSuite() { std::filesystem::remove_all(root_); }

  static inline std::filesystem::path root_;
};

}  // namespace

TEST(Cli, NoArgumentsIsUsageError) {
  auto r = run({});
  EXPECT_EQ(r.code, cli::kExitUsage);
  EXPECT_NE((r.out + r.err).find("Usage"), std::string::npos);
}

TEST(Cli, HelpSucceeds) {
  EXPECT_EQ(run({"--help"}).code, cli::kExitOk);
  EXPECT_EQ(run({"train", "--help"}).code, cli::kExitOk);
}

TEST(Cli, UnknownFlagIsUsageError) {
  EXPECT_EQ(run({"anchor", "a.wav", "b.wav", "--frobnicate"}).code, cli::kExitUsage);
  EXPECT_EQ(run({"teleport"}).code, cli::kExitUsage);
}

TEST(Cli, UnknownConfigKeyIsUsageErrorWithSuggestion) {
  const auto dir = temp_dir("cli_key");
  auto r = run({"train", "--config", "desk", "--set", "train.total_step=3", "--out-dir", dir.string()});
  EXPECT_EQ(r.code, cli::kExitUsage);
  EXPECT_NE(r.err.find("did you mean 'train.total_steps'"), std::string::npos) << r.err;
  // Every --set occurrence counts, not only the last one.
  auto repeated = run({"train", "--config", "desk", "--set", "train.total_step=3", "--set", "train.batch_size=1",
                       "--out-dir", dir.string()});
  EXPECT_EQ(repeated.code, cli::kExitUsage);
  auto missing = run({"train", "--config", "no-such-preset", "--out-dir", dir.string()});
  EXPECT_EQ(missing.code, cli::kExitUsage);
  EXPECT_NE(missing.err.find("8-16_r1-4"), std::string::npos) << missing.err;
  std::filesystem::remove_all(dir);
}

TEST(Cli, RuntimeFailureNamesStage) {
  auto r = run({"baseline-sinc", "/nonexistent/in.wav", "/tmp/out.wav", "--target-rate", "16000"});
  EXPECT_EQ(r.code, cli::kExitRuntime);
  EXPECT_NE(r.err.find("aero baseline-sinc: error"), std::string::npos) << r.err;
}

TEST(Cli, BaselineAnchorAndPlot) {
  const auto dir = temp_dir("cli_tools");
  dsp::write_wav(dir / "in.wav", aero::testing::sine(1000, 8000, 4000));
  ASSERT_EQ(run({"baseline-sinc", (dir / "in.wav").string(), (dir / "up.wav").string(), "--target-rate", "16000"}).code, 0);
  auto up = dsp::read_wav(dir / "up.wav");
  EXPECT_EQ(up.sample_rate, 16000);
  EXPECT_EQ(up.size(), 8000u);
  ASSERT_EQ(run({"anchor", (dir / "up.wav").string(), (dir / "anchor.wav").string(), "--cutoff", "3500"}).code, 0);
  EXPECT_EQ(dsp::read_wav(dir / "anchor.wav").size(), 8000u);
  ASSERT_EQ(run({"plot-spec", (dir / "up.wav").string(), (dir / "up.png").string()}).code, 0);
  EXPECT_GT(std::filesystem::file_size(dir / "up.png"), 100u);
  std::filesystem::remove_all(dir);
}

TEST_F(CliCorpus, PrepareWritesManifestAndPairs) {
  EXPECT_TRUE(std::filesystem::exists(root_ / "prep" / "manifest.jsonl"));
  const auto train = data::read_pairs(root_ / "prep" / "train_pairs.jsonl");
  const auto test = data::read_pairs(root_ / "prep" / "test_pairs.jsonl");
  EXPECT_EQ(train.size() + test.size(), 4u);
  EXPECT_FALSE(test.empty());
  const auto p = data::load_pair(train.front());
  EXPECT_EQ(p.lr.sample_rate, 8000);
  EXPECT_EQ(p.hr.sample_rate, 16000);
}

TEST_F(CliCorpus, TrainWritesRunDirectory) {
  const auto dir = root_ / "run";
  EXPECT_TRUE(std::filesystem::exists(dir / "config.ini"));
  EXPECT_TRUE(std::filesystem::exists(dir / "model.params"));
  EXPECT_EQ(train::load_checkpoint(dir / "checkpoints" / "last.ckpt").step, 2);
  std::ifstream log(dir / "log.jsonl");
  std::string line;
  int lines = 0;
  while (std::getline(log, line)) ++lines;
  EXPECT_EQ(lines, 2);
}

TEST_F(CliCorpus, ResumeContinuesFromCheckpoint) {
  auto args = with_tiny({"train", "--out-dir", (root_ / "run2").string(), "--pairs",
                         (root_ / "prep" / "train_pairs.jsonl").string(), "--resume",
                         (root_ / "run" / "checkpoints" / "last.ckpt").string()});
  args.push_back("train.total_steps=3");
  auto r = run(args);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(train::load_checkpoint(root_ / "run2" / "checkpoints" / "last.ckpt").step, 3);
}

TEST_F(CliCorpus, UpsampleDoublesTheRate) {
  const auto lr = data::read_pairs(root_ / "prep" / "test_pairs.jsonl").front().lr;
  const auto out = root_ / "up.wav";
  auto r = run({"upsample", lr, out.string(), "-m", (root_ / "run" / "checkpoints" / "last.ckpt").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto x = dsp::read_wav(lr), y = dsp::read_wav(out);
  EXPECT_EQ(y.sample_rate, 16000);
  EXPECT_EQ(y.size(), 2 * x.size());

  // A bare parameter file needs the config that defines the transform.
  auto bare = run({"upsample", lr, out.string(), "-m", (root_ / "run" / "model.params").string()});
  EXPECT_EQ(bare.code, cli::kExitUsage);
  auto with_cfg = run(with_tiny({"upsample", lr, out.string(), "-m", (root_ / "run" / "model.params").string()}));
  EXPECT_EQ(with_cfg.code, 0) << with_cfg.err;

  // Wrong input rate is a runtime error naming the stage.
  auto hr = data::read_pairs(root_ / "prep" / "test_pairs.jsonl").front().hr;
  auto wrong = run({"upsample", hr, out.string(), "-m", (root_ / "run" / "checkpoints" / "last.ckpt").string()});
  EXPECT_EQ(wrong.code, cli::kExitRuntime);
  EXPECT_NE(wrong.err.find("error"), std::string::npos);
}

TEST_F(CliCorpus, EvaluateLsdOnlyWorksWithoutVisqol) {
  auto r = run({"evaluate", "--pairs", (root_ / "prep" / "test_pairs.jsonl").string(), "-m",
                (root_ / "run" / "checkpoints" / "last.ckpt").string(), "--metrics", "lsd", "--out-dir",
                (root_ / "eval").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(std::filesystem::exists(root_ / "eval" / "results.csv"));
  EXPECT_TRUE(std::filesystem::exists(root_ / "eval" / "results.txt"));
  auto sinc = run({"evaluate", "--pairs", (root_ / "prep" / "test_pairs.jsonl").string(), "--baseline", "sinc"});
  ASSERT_EQ(sinc.code, 0) << sinc.err;
  EXPECT_NE(sinc.out.find("mean (n="), std::string::npos) << sinc.out;
}

TEST_F(CliCorpus, EvaluateWithMissingVisqolIsRuntimeError) {
  auto r = run({"evaluate", "--pairs", (root_ / "prep" / "test_pairs.jsonl").string(), "--baseline", "sinc",
                "--metrics", "lsd,visqol", "--visqol-bin", "/nonexistent/visqol"});
  EXPECT_EQ(r.code, cli::kExitRuntime);
  EXPECT_NE(r.err.find("metric unavailable"), std::string::npos) << r.err;
}

TEST_F(CliCorpus, MushraExportAndCheck) {
  const auto refs = root_ / "refs";
  const auto sys = root_ / "sys";
  std::filesystem::create_directories(refs);
  std::filesystem::create_directories(sys);
  for (const auto& p : data::read_pairs(root_ / "prep" / "test_pairs.jsonl")) {
    const auto name = std::filesystem::path(p.hr).filename();
    std::filesystem::copy_file(p.hr, refs / name);
    ASSERT_EQ(run({"baseline-sinc", p.lr, (sys / name).string(), "--target-rate", "16000"}).code, 0);
  }
  auto r = run({"mushra-export", "--reference-dir", refs.string(), "--system", "sinc=" + sys.string(), "--system",
                "copy=" + refs.string(), "--out-dir", (root_ / "bundle").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  auto check = run({"mushra-export", "--check", (root_ / "bundle" / "session.json").string()});
  EXPECT_EQ(check.code, 0) << check.err;
  std::ifstream in(root_ / "bundle" / "session.json");
  const auto j = nlohmann::json::parse(in);
  EXPECT_EQ(j["items"][0]["systems"].size(), 2u);

  std::ofstream(root_ / "bad.json") << R"({"scale": "0-100", "items": []})";
  auto bad = run({"mushra-export", "--check", (root_ / "bad.json").string()});
  EXPECT_NE(bad.code, 0);
  EXPECT_NE(bad.err.find("at least one item"), std::string::npos) << bad.err;
}
