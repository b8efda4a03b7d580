// Copyright 2026 The GLD-Net Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "gldnet/data.h"
#include "gldnet/network.h"
#include "gldnet/signal.h"

namespace gldnet {
namespace {

namespace fs = std::filesystem;

struct Run {
  int code = -1;
  std::string out, err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path work_dir() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / "gldnet_cli_test";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

Run gldnet(const std::string& args) {
  const auto out = work_dir() / "stdout.txt", err = work_dir() / "stderr.txt";
  const std::string cmd = std::string(GLDNET_CLI) + " " + args + " > " + out.string() + " 2> " + err.string();
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
}

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

// Trains a small checkpoint once for the enhance and evaluate tests.
class CliTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    run_dir_ = work_dir() / "shared_run";
    auto r = gldnet("train --preset tiny --toy-data --max-steps 4 --out-dir " + run_dir_.string() +
                    " train.batch=1 train.eval_every=2 train.crop_len=4096 train.val_pairs=2");
    ASSERT_EQ(r.code, 0) << r.err;
    ckpt_ = (run_dir_ / "last.ckpt").string();

    auto w = synth_toy_pair(ToyKind::kChirp, ToyNoise::kWhite, 3.0, 5, 11111).noisy;
    wav_ = (work_dir() / "in.wav").string();
    write_wav(wav_, w);
  }

  static inline fs::path run_dir_;
  static inline std::string ckpt_;
  static inline std::string wav_;
};

TEST_F(CliTest, TrainSmokeWritesLogAndCheckpoints) {
  const auto dir = work_dir() / "smoke";
  auto r = gldnet("train --preset tiny --toy-data --max-steps 500 --out-dir " + dir.string() +
                  " train.batch=1 train.crop_len=2048 train.eval_every=100 train.val_pairs=2");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(count_lines(slurp(dir / "train_log.jsonl")), 5u);
  EXPECT_EQ(count_lines(r.out), 5u);
  EXPECT_TRUE(fs::exists(dir / "best.ckpt"));
  EXPECT_TRUE(fs::exists(dir / "last.ckpt"));
  EXPECT_NE(slurp(dir / "config.txt").find("train.max_steps = 500"), std::string::npos);
}

TEST_F(CliTest, ResumeContinuesTheStepCounter) {
  const auto dir = work_dir() / "resume";
  auto r = gldnet("train --preset tiny --toy-data --max-steps 6 --resume " + ckpt_ + " --out-dir " + dir.string() +
                  " train.batch=1 train.eval_every=2 train.crop_len=4096 train.val_pairs=2");
  ASSERT_EQ(r.code, 0) << r.err;
  // Steps 6 only; 2 and 4 were done before the checkpoint.
  EXPECT_EQ(count_lines(r.out), 1u);
  EXPECT_NE(r.out.find("\"step\":6"), std::string::npos) << r.out;
}

TEST_F(CliTest, ConfigErrorsExitTwo) {
  EXPECT_EQ(gldnet("train --preset tiny --max-steps 1").code, 2);  // no data source
  EXPECT_EQ(gldnet("train --preset tiny data.train_manifest=/nonexistent/train.tsv "
                   "data.val_manifest=/nonexistent/val.tsv")
                .code,
            2);
  auto unknown = gldnet("train --preset tiny --toy-data model.not_a_key=3");
  EXPECT_EQ(unknown.code, 2);
  EXPECT_NE(unknown.err.find("model.not_a_key"), std::string::npos);
  EXPECT_EQ(gldnet("train --preset small --toy-data").code, 2);
  EXPECT_EQ(gldnet("train --preset tiny --toy-data train.lr=fast").code, 2);
  EXPECT_EQ(gldnet("frobnicate").code, 2);

  const auto cfg = work_dir() / "bad.cfg";
  std::ofstream(cfg) << "train.lr = 1e-3\ntrain.batch\n";
  auto r = gldnet("train --preset tiny --toy-data --config " + cfg.string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find(":2"), std::string::npos) << r.err;
}

TEST_F(CliTest, ConfigFileAndOverridesCompose) {
  const auto cfg = work_dir() / "good.cfg";
  std::ofstream(cfg) << "# tiny run\ntrain.batch = 1\ntrain.crop_len = 2048\ntrain.eval_every = 1\n";
  const auto dir = work_dir() / "composed";
  auto r = gldnet("train --preset tiny --toy-data --disable-ib --literal-eq5=false --attention-scale off "
                  "--max-steps 2 --config " + cfg.string() + " --out-dir " + dir.string() + " train.val_pairs=1");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto resolved = slurp(dir / "config.txt");
  EXPECT_NE(resolved.find("model.enable_ib = false"), std::string::npos);
  EXPECT_NE(resolved.find("model.literal_speech_mask = false"), std::string::npos);
  EXPECT_NE(resolved.find("model.attention_scale = false"), std::string::npos);
  EXPECT_NE(resolved.find("train.val_pairs = 1"), std::string::npos);
  EXPECT_NE(resolved.find("train.crop_len = 2048"), std::string::npos);
}

TEST_F(CliTest, DivergenceAbortsWithExitThree) {
  auto r = gldnet("train --preset tiny --toy-data --max-steps 5 --out-dir " + (work_dir() / "diverge").string() +
                  " train.lr=1e30 train.batch=1 train.crop_len=2048 train.eval_every=1 train.val_pairs=1");
  EXPECT_EQ(r.code, 3) << r.err;
  EXPECT_NE(r.err.find("non-finite"), std::string::npos) << r.err;
}

TEST_F(CliTest, EnhanceIsDeterministicAndKeepsLength) {
  const auto a = (work_dir() / "a.wav").string(), b = (work_dir() / "b.wav").string();
  ASSERT_EQ(gldnet("enhance " + ckpt_ + " " + wav_ + " " + a).code, 0);
  ASSERT_EQ(gldnet("enhance " + ckpt_ + " " + wav_ + " " + b).code, 0);
  EXPECT_EQ(slurp(a), slurp(b));
  EXPECT_EQ(read_wav(a).samples.size(), read_wav(wav_).samples.size());
}

TEST_F(CliTest, EnhanceRejectsCorruptCheckpoint) {
  const auto bad = work_dir() / "corrupt.ckpt";
  fs::copy_file(ckpt_, bad, fs::copy_options::overwrite_existing);
  {
    std::fstream f(bad, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(200);
    f.put('\x7f');
  }
  auto r = gldnet("enhance " + bad.string() + " " + wav_ + " " + (work_dir() / "c.wav").string());
  EXPECT_EQ(r.code, 4);
  EXPECT_NE(r.err.find("checksum"), std::string::npos) << r.err;
  EXPECT_EQ(gldnet("enhance /nonexistent.ckpt " + wav_ + " out.wav").code, 4);
}

TEST_F(CliTest, EvaluatePrintsTableWithUnprocessedRow) {
  const auto dir = work_dir() / "eval";
  fs::create_directories(dir);
  Manifest m{"test", {}, kSampleRate};
  const double snrs[] = {-5, 0, 5, 10};
  for (int i = 0; i < 4; ++i) {
    auto pair = synth_toy_pair(ToyKind::kTones, ToyNoise::kHum, 0.0, 40 + i, 20000);
    write_wav((dir / ("clean" + std::to_string(i) + ".wav")).string(), pair.clean);
    write_wav((dir / ("noise" + std::to_string(i) + ".wav")).string(), pair.scaled_noise);
    m.items.push_back({"clean" + std::to_string(i) + ".wav", "noise" + std::to_string(i) + ".wav", snrs[i],
                       static_cast<std::uint64_t>(i)});
  }
  write_manifest((dir / "test.tsv").string(), m);
  auto r = gldnet("evaluate " + ckpt_ + " " + (dir / "test.tsv").string() + " --out-dir " + dir.string());
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("Test SNR"), std::string::npos);
  EXPECT_NE(r.out.find("Avg."), std::string::npos);
  EXPECT_NE(r.out.find("\nUnprocessed"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("\nGLD-Net"), std::string::npos) << r.out;
  EXPECT_EQ(count_lines(slurp(dir / "eval_records.tsv")), 4u * 2u * 3u);

  std::ofstream(dir / "empty.tsv") << "# nothing here\n";
  EXPECT_EQ(gldnet("evaluate " + ckpt_ + " " + (dir / "empty.tsv").string() + " --out-dir " + dir.string()).code, 2);
}

TEST_F(CliTest, GradcheckPassesAndReportsEveryParameter) {
  auto r = gldnet("gradcheck --preset tiny --seed 3");
  EXPECT_EQ(r.code, 0) << r.out;
  GldNet<double> net(ModelConfig::tiny(), 3);
  for (const auto& p : net.parameters()) {
    EXPECT_NE(r.out.find("net/" + p.name + " "), std::string::npos) << p.name;
  }
  EXPECT_NE(r.out.find("op/conv2d"), std::string::npos);
  EXPECT_NE(r.out.find("gld/speech."), std::string::npos);
  EXPECT_NE(r.out.find("gld/interference."), std::string::npos);
}

TEST_F(CliTest, GradcheckFailsAtImpossibleTolerance) {
  auto r = gldnet("gradcheck --preset tiny --tol 1e-12 --fraction 0.002");
  EXPECT_EQ(r.code, 5);
  EXPECT_NE(r.out.find("FAILED"), std::string::npos);
  EXPECT_EQ(gldnet("gradcheck --preset tiny --precision 32").code, 2);
}

}  // namespace
}  // namespace gldnet
