#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "excitnet/conditioning.hpp"
#include "excitnet/wav_io.hpp"
#include "test_support.hpp"

// end-to-end runs of the installed binary; EXCITNET_CLI is injected by the
// build as the path to the excitnet executable

namespace fs = std::filesystem;
using namespace excitnet;

namespace {

int run_cli(const std::string& args) {
  const std::string cmd = std::string(EXCITNET_CLI) + " " + args + " 2>/dev/null";
  return std::system(cmd.c_str());
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p);
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

std::string read_binary(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

struct Corpus {
  fs::path root, wavs, features;

  explicit Corpus(const std::string& tag) {
    root = testsupport::make_temp_dir(tag);
    wavs = root / "wavs";
    features = root / "features";
    fs::create_directories(wavs);
    for (int i = 0; i < 3; ++i) {
      const auto wav = testsupport::synthetic_speech(9000 + i, 0.5);
      write_wav(wav, wavs / ("utt" + std::to_string(i) + ".wav"));
    }
  }
  ~Corpus() { fs::remove_all(root); }
};

// small config so train/synthesize finish quickly
fs::path write_desk_config(const fs::path& dir) {
  const fs::path path = dir / "desk.toml";
  std::ofstream out(path);
  out << "[net]\npreset = \"desk\"\nblocks = 1\nlayers_per_block = 3\n"
         "residual_channels = 16\ngate_channels = 16\nskip_channels = 16\n"
         "[train]\nlearning_rate = 0.002\nbatch_size_samples = 600\n"
         "max_steps = 30\neval_interval = 15\n";
  return path;
}

}  // namespace

TEST_CASE("cli: help and config init") {
  CHECK(run_cli("--help") == 0);
  CHECK(run_cli("analyze --help") == 0);
  CHECK(run_cli("train --help") == 0);
  CHECK(run_cli("synthesize --help") == 0);
  CHECK(run_cli("evaluate --help") == 0);

  const auto dir = testsupport::make_temp_dir("cli_config");
  const auto cfg = dir / "excitnet.toml";
  CHECK(run_cli("config init --out " + cfg.string()) == 0);
  CHECK(fs::exists(cfg));
  // refuses to clobber without --force
  CHECK(run_cli("config init --out " + cfg.string()) != 0);
  CHECK(run_cli("config init --force --out " + cfg.string()) == 0);
  const std::string text = read_text(cfg);
  CHECK(text.find("sample_rate_hz = 24000") != std::string::npos);
  CHECK(text.find("bandwidth_gamma = 0.981") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("cli: analyze produces features and stats, deterministically") {
  Corpus corpus("cli_analyze");
  const std::string base = "analyze --wav-dir " + corpus.wavs.string();

  CHECK(run_cli(base + " --out-dir " + corpus.features.string()) == 0);
  CHECK(fs::exists(corpus.features / "utt0.excf"));
  CHECK(fs::exists(corpus.features / "utt1.excf"));
  CHECK(fs::exists(corpus.features / "utt2.excf"));
  CHECK(fs::exists(corpus.features / "norm_stats.json"));

  const auto rows = read_feature_file(corpus.features / "utt0.excf");
  CHECK(rows.size() > 0);
  CHECK(rows[0].size() == 79);

  // rerun into a second directory: byte-identical outputs
  const fs::path second = corpus.root / "features2";
  CHECK(run_cli(base + " --out-dir " + second.string() + " --jobs 2") == 0);
  for (const char* name : {"utt0.excf", "utt1.excf", "utt2.excf", "norm_stats.json"})
    CHECK(read_binary(corpus.features / name) == read_binary(second / name));

  // empty input directory fails with "no input files"
  const fs::path empty = corpus.root / "empty";
  fs::create_directories(empty);
  CHECK(run_cli("analyze --wav-dir " + empty.string() + " --out-dir " +
                (corpus.root / "x").string()) != 0);
}

TEST_CASE("cli: full train/synthesize/evaluate round trip") {
  Corpus corpus("cli_full");
  const auto cfg = write_desk_config(corpus.root);

  // manifest: two train, one dev
  const fs::path manifest = corpus.root / "corpus.list";
  {
    std::ofstream out(manifest);
    out << "utt0.wav train\nutt1.wav train\nutt2.wav dev\n";
  }

  REQUIRE(run_cli("analyze --wav-dir " + corpus.wavs.string() + " --out-dir " +
                  corpus.features.string() + " --manifest " + manifest.string()) == 0);

  const fs::path run_dir = corpus.root / "run";
  const std::string train_args =
      "train --variant excitnet --wav-dir " + corpus.wavs.string() +
      " --feature-dir " + corpus.features.string() + " --out-dir " + run_dir.string() +
      " --manifest " + manifest.string() + " --config " + cfg.string() + " --seed 3";
  REQUIRE(run_cli(train_args) == 0);
  CHECK(fs::exists(run_dir / "ckpt_best.ckpt"));
  CHECK(fs::exists(run_dir / "ckpt_last.ckpt"));
  CHECK(fs::exists(run_dir / "curves.csv"));

  // variant mismatch is rejected
  CHECK(run_cli("synthesize --variant wn --checkpoint " +
                (run_dir / "ckpt_best.ckpt").string() + " --feature-dir " +
                corpus.features.string() + " --out-dir " + (corpus.root / "bad").string() +
                " --config " + cfg.string()) != 0);

  const fs::path synth_dir = corpus.root / "synth";
  const std::string synth_args =
      "synthesize --variant excitnet --checkpoint " +
      (run_dir / "ckpt_best.ckpt").string() + " --feature-dir " +
      corpus.features.string() + " --out-dir " + synth_dir.string() + " --config " +
      cfg.string() + " --seed 17";
  REQUIRE(run_cli(synth_args) == 0);
  for (const char* name : {"utt0.wav", "utt1.wav", "utt2.wav"})
    CHECK(fs::exists(synth_dir / name));

  // duration contract: frames * shift samples
  const auto features = read_feature_file(corpus.features / "utt0.excf");
  const auto wav = read_wav(synth_dir / "utt0.wav");
  CHECK(wav.samples.size() == features.size() * 120);

  // synthesis rerun is byte-identical under the same seed
  const fs::path synth2 = corpus.root / "synth2";
  REQUIRE(run_cli("synthesize --variant excitnet --checkpoint " +
                  (run_dir / "ckpt_best.ckpt").string() + " --feature-dir " +
                  corpus.features.string() + " --out-dir " + synth2.string() +
                  " --config " + cfg.string() + " --seed 17 --jobs 2") == 0);
  for (const char* name : {"utt0.wav", "utt1.wav", "utt2.wav"})
    CHECK(read_binary(synth_dir / name) == read_binary(synth2 / name));

  // evaluate the corpus against itself: zero distortion everywhere
  const fs::path report = corpus.root / "self.json";
  REQUIRE(run_cli("evaluate --ref-dir " + corpus.wavs.string() + " --test-dir " +
                  corpus.wavs.string() + " --out " + report.string()) == 0);
  const std::string json_text = read_text(report);
  CHECK(json_text.find("\"aggregate\"") != std::string::npos);
  CHECK(fs::exists(corpus.root / "self.txt"));
  CHECK(json_text.find("\"lsd_db\": 0.0") != std::string::npos);

  // evaluate generated output against the references: report must exist even
  // though quality is poor at this scale
  const fs::path report2 = corpus.root / "gen.json";
  REQUIRE(run_cli("evaluate --ref-dir " + corpus.wavs.string() + " --test-dir " +
                  synth_dir.string() + " --out " + report2.string()) == 0);
  CHECK(read_text(report2).find("utt1") != std::string::npos);
}

TEST_CASE("cli: evaluate lists unmatched stems") {
  Corpus corpus("cli_unmatched");
  const fs::path subset = corpus.root / "subset";
  fs::create_directories(subset);
  fs::copy_file(corpus.wavs / "utt0.wav", subset / "utt0.wav");

  const fs::path report = corpus.root / "partial.json";
  CHECK(run_cli("evaluate --ref-dir " + corpus.wavs.string() + " --test-dir " +
                subset.string() + " --out " + report.string()) == 0);
  const std::string text = read_text(report);
  CHECK(text.find("utt1 (missing in test dir)") != std::string::npos);
  CHECK(text.find("utt2 (missing in test dir)") != std::string::npos);
}

TEST_CASE("cli: unknown config keys are rejected") {
  const auto dir = testsupport::make_temp_dir("cli_badcfg");
  const fs::path cfg = dir / "bad.toml";
  {
    std::ofstream out(cfg);
    out << "[audio]\nsample_rate_hz = 24000\nbogus_key = 5\n";
  }
  fs::create_directories(dir / "w");
  CHECK(run_cli("analyze --wav-dir " + (dir / "w").string() + " --out-dir " +
                (dir / "f").string() + " --config " + cfg.string()) != 0);
  fs::remove_all(dir);
}
