// excitnet command line: analyze / train / synthesize / evaluate / config.

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <omp.h>

#include "excitnet/checkpoint.hpp"
#include "excitnet/config.hpp"
#include "excitnet/metrics.hpp"
#include "excitnet/pipeline.hpp"
#include "excitnet/rng.hpp"
#include "excitnet/variants.hpp"
#include "excitnet/wav_io.hpp"

namespace fs = std::filesystem;
using namespace excitnet;

namespace {

enum class LogLevel { kError = 0, kWarn = 1, kInfo = 2, kDebug = 3 };

LogLevel log_level() {
  static const LogLevel level = [] {
    const char* env = std::getenv("EXCITNET_LOG");
    if (!env) return LogLevel::kInfo;
    const std::string v(env);
    if (v == "error") return LogLevel::kError;
    if (v == "warn") return LogLevel::kWarn;
    if (v == "debug") return LogLevel::kDebug;
    return LogLevel::kInfo;
  }();
  return level;
}

template <typename... Args>
void log_at(LogLevel lvl, const char* tag, const char* fmt, Args... args) {
  if (lvl > log_level()) return;
  std::fprintf(stderr, "[%s] ", tag);
  if constexpr (sizeof...(Args) == 0)
    std::fputs(fmt, stderr);
  else
    std::fprintf(stderr, fmt, args...);
  std::fprintf(stderr, "\n");
}

#define LOG_ERROR(...) log_at(LogLevel::kError, "error", __VA_ARGS__)
#define LOG_WARN(...) log_at(LogLevel::kWarn, "warn", __VA_ARGS__)
#define LOG_INFO(...) log_at(LogLevel::kInfo, "info", __VA_ARGS__)
#define LOG_DEBUG(...) log_at(LogLevel::kDebug, "debug", __VA_ARGS__)

std::vector<fs::path> list_files(const fs::path& dir, const std::string& extension) {
  if (!fs::is_directory(dir))
    throw std::runtime_error("not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == extension)
      files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  return files;
}

struct CommonArgs {
  std::string config_path;
  int jobs = 0;

  RunConfig load() const {
    RunConfig cfg;
    if (!config_path.empty()) cfg = parse_run_config(config_path);
    return cfg;
  }

  void apply_jobs() const {
    if (jobs > 0) omp_set_num_threads(jobs);
  }
};

// analyze: wav corpus -> per-utterance feature files + normalization stats
int cmd_analyze(const CommonArgs& common, const RunConfig& config,
                const std::string& wav_dir, const std::string& out_dir) {
  common.apply_jobs();
  const fs::path wav_root(wav_dir);
  const fs::path out_root(out_dir);
  fs::create_directories(out_root);

  struct Item {
    fs::path wav;
    std::string stem;
    bool is_train = true;
  };
  std::vector<Item> items;
  if (!config.manifest.empty()) {
    for (const auto& entry : parse_manifest(config.manifest))
      items.push_back({wav_root / entry.path, fs::path(entry.path).stem().string(),
                       entry.split == "train"});
  } else {
    for (const auto& path : list_files(wav_root, ".wav"))
      items.push_back({path, path.stem().string(), true});
  }
  if (items.empty()) {
    LOG_ERROR("no input files in %s", wav_root.c_str());
    return 1;
  }

  std::vector<FeatureMatrix> train_features(items.size());
  std::vector<std::string> failures(items.size());
  std::atomic<int> failed{0};

  #pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < items.size(); ++i) {
    try {
      const Waveform wav = read_wav(items[i].wav);
      UtteranceAnalysis analysis = analyze_utterance(wav, config);
      write_feature_file(out_root / (items[i].stem + ".excf"), analysis.features);
      if (items[i].is_train) train_features[i] = std::move(analysis.features);
      LOG_DEBUG("analyzed %s (%zu frames)", items[i].stem.c_str(),
                train_features[i].size());
    } catch (const std::exception& e) {
      failures[i] = e.what();
      failed.fetch_add(1);
    }
  }

  for (std::size_t i = 0; i < items.size(); ++i)
    if (!failures[i].empty())
      LOG_ERROR("%s: %s", items[i].wav.c_str(), failures[i].c_str());

  // normalization statistics over the training split, in listing order
  FeatureMatrix all_train;
  for (auto& rows : train_features)
    for (auto& row : rows) all_train.push_back(std::move(row));
  if (all_train.size() < 2) {
    LOG_ERROR("not enough training frames to fit the normalizer");
    return 1;
  }
  const NormStats stats = fit_normalizer(all_train, config.layout());
  save_norm_stats(out_root / "norm_stats.json", stats);
  LOG_INFO("analyzed %zu utterances (%zu training frames) -> %s",
           items.size() - static_cast<std::size_t>(failed.load()), all_train.size(),
           out_root.c_str());
  return failed.load() == 0 ? 0 : 1;
}

TrainingData load_training_data(const RunConfig& config, VariantTag variant,
                                const std::string& wav_dir,
                                const std::string& feature_dir) {
  const fs::path wav_root(wav_dir);
  const fs::path feat_root(feature_dir);
  const FrameGrid grid = config.grid();

  struct Entry {
    fs::path wav;
    std::string stem;
    std::string split;
  };
  std::vector<Entry> entries;
  if (!config.manifest.empty()) {
    for (const auto& e : parse_manifest(config.manifest))
      entries.push_back({wav_root / e.path, fs::path(e.path).stem().string(), e.split});
  } else {
    LOG_WARN("no manifest; every utterance joins the training split");
    for (const auto& path : list_files(wav_root, ".wav"))
      entries.push_back({path, path.stem().string(), "train"});
  }

  TrainingData data;
  data.layout = config.layout();
  data.grid = grid;
  data.sample_rate_hz = config.sample_rate_hz;
  data.stats = load_norm_stats(feat_root / "norm_stats.json");

  if (variant == VariantTag::kWnNs) {
    std::vector<Waveform> train_wavs;
    for (const auto& e : entries)
      if (e.split == "train") train_wavs.push_back(read_wav(e.wav));
    NoiseShapingFilter nsf = fit_noise_shaping_filter(train_wavs, grid, config.lp_order);
    data.noise_shaping = nsf.coeffs;
  }

  NoiseShapingFilter nsf;
  const NoiseShapingFilter* nsf_ptr = nullptr;
  if (data.noise_shaping) {
    nsf.coeffs = *data.noise_shaping;
    nsf_ptr = &nsf;
  }

  for (const auto& e : entries) {
    if (e.split == "test") continue;
    const fs::path feature_path = feat_root / (e.stem + ".excf");
    if (!fs::exists(feature_path))
      throw std::runtime_error("missing features for " + e.stem + " (expected " +
                               feature_path.string() + "; run analyze first)");
    const Waveform wav = read_wav(e.wav);
    const FeatureMatrix raw = read_feature_file(feature_path);
    TrainingUtterance utt = make_training_utterance(
        e.stem, wav, raw, variant, data.stats, data.layout, grid, nsf_ptr, config.mu);
    if (e.split == "dev")
      data.dev.push_back(std::move(utt));
    else
      data.train.push_back(std::move(utt));
  }
  if (data.train.empty()) throw std::runtime_error("no training utterances");
  return data;
}

int cmd_train(const CommonArgs& common, const RunConfig& config,
              const std::string& variant_name_arg, const std::string& wav_dir,
              const std::string& feature_dir, const std::string& out_dir,
              bool resume) {
  common.apply_jobs();
  const VariantTag variant = variant_from_name(variant_name_arg);
  const TrainingData data = load_training_data(config, variant, wav_dir, feature_dir);

  LOG_INFO("training %s on %zu utterances (%zu dev), %lld steps",
           variant_name(variant).c_str(), data.train.size(), data.dev.size(),
           static_cast<long long>(config.max_steps));
  const TrainResult result = train_vocoder(variant, data, config.net_config(),
                                           config.train_config(), out_dir, resume);
  if (std::isfinite(result.best_dev_nll) && !data.dev.empty())
    LOG_INFO("best dev NLL %.4f nats/sample", result.best_dev_nll);
  LOG_INFO("checkpoints: %s, %s; curves: %s", result.best_checkpoint.c_str(),
           result.last_checkpoint.c_str(), result.curves_csv.c_str());
  return 0;
}

int cmd_synthesize(const CommonArgs& common, const RunConfig& config,
                   const std::string& variant_name_arg, const std::string& ckpt_path,
                   const std::string& feature_dir, const std::string& out_dir,
                   std::uint64_t seed, const std::string& mode_name) {
  common.apply_jobs();
  const VariantTag variant = variant_from_name(variant_name_arg);

  const Checkpoint meta = load_checkpoint_meta(ckpt_path);
  if (meta.variant != variant)
    throw std::runtime_error("checkpoint variant is " + variant_name(meta.variant) +
                             ", requested " + variant_name(variant));

  WaveNet<float> net(meta.config);
  load_checkpoint(ckpt_path, net, nullptr);

  const auto feature_files = list_files(feature_dir, ".excf");
  if (feature_files.empty())
    throw std::runtime_error("no .excf feature files in " + feature_dir);
  fs::create_directories(out_dir);

  const GenerationMode mode =
      mode_name == "argmax" ? GenerationMode::kArgmax : GenerationMode::kSample;
  const FrameGrid grid = config.grid();
  const FeatureLayout layout = config.layout();

  std::atomic<int> failed{0};
  #pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < feature_files.size(); ++i) {
    const std::string stem = feature_files[i].stem().string();
    try {
      const FeatureMatrix raw = read_feature_file(feature_files[i]);
      SynthesisOptions options;
      options.seed = seed ^ hash64(stem.c_str());
      options.mode = mode;
      options.sample_rate_hz = config.sample_rate_hz;
      const Waveform wav = synthesize_utterance(net, meta, raw, grid, layout,
                                                options, config.mu);
      write_wav(wav, fs::path(out_dir) / (stem + ".wav"));
      LOG_INFO("synthesized %s (%.2f s)", stem.c_str(), wav.duration_seconds());
    } catch (const std::exception& e) {
      LOG_ERROR("%s: %s", stem.c_str(), e.what());
      failed.fetch_add(1);
    }
  }
  return failed.load() == 0 ? 0 : 1;
}

int cmd_evaluate(const CommonArgs& common, const RunConfig& config,
                 const std::string& ref_dir, const std::string& test_dir,
                 const std::string& out_path) {
  common.apply_jobs();
  const auto ref_files = list_files(ref_dir, ".wav");
  if (ref_files.empty()) throw std::runtime_error("no .wav files in " + ref_dir);

  std::map<std::string, fs::path> test_by_stem;
  for (const auto& p : list_files(test_dir, ".wav")) test_by_stem[p.stem().string()] = p;

  std::vector<std::pair<fs::path, fs::path>> pairs;
  std::vector<std::string> unmatched;
  std::map<std::string, bool> ref_stems;
  for (const auto& ref : ref_files) {
    const std::string stem = ref.stem().string();
    ref_stems[stem] = true;
    const auto it = test_by_stem.find(stem);
    if (it == test_by_stem.end())
      unmatched.push_back(stem + " (missing in test dir)");
    else
      pairs.emplace_back(ref, it->second);
  }
  for (const auto& [stem, path] : test_by_stem)
    if (!ref_stems.count(stem)) unmatched.push_back(stem + " (missing in ref dir)");

  if (pairs.empty()) throw std::runtime_error("no matching utterance pairs");

  const FrameGrid grid = config.grid();
  std::vector<EvalReport> reports(pairs.size());
  std::vector<std::string> failures(pairs.size());

  #pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    try {
      const Waveform ref = read_wav(pairs[i].first);
      const Waveform test = read_wav(pairs[i].second);
      reports[i] = evaluate_pair(pairs[i].first.stem().string(), ref, test, grid,
                                 config.f0_params(),
                                 MetricParams{config.fft_size, 1e-10});
    } catch (const std::exception& e) {
      failures[i] = e.what();
    }
  }

  std::vector<EvalReport> ok;
  int failed = 0;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    if (failures[i].empty()) {
      ok.push_back(reports[i]);
    } else {
      LOG_ERROR("%s: %s", pairs[i].first.c_str(), failures[i].c_str());
      ++failed;
    }
  }
  if (ok.empty()) throw std::runtime_error("every pair failed to evaluate");

  const EvalReport aggregate = aggregate_reports(ok);
  write_report_json(out_path, ok, aggregate, unmatched);
  const std::string table = format_report_table(ok, aggregate);
  std::cout << table;
  {
    fs::path table_path(out_path);
    table_path.replace_extension(".txt");
    std::ofstream table_out(table_path, std::ios::trunc);
    table_out << table;
  }
  for (const auto& u : unmatched) LOG_WARN("unmatched: %s", u.c_str());
  return failed == 0 ? 0 : 1;
}

int cmd_config_init(const std::string& out_path, bool force) {
  if (fs::exists(out_path) && !force)
    throw std::runtime_error(out_path + " exists (use --force to overwrite)");
  std::ofstream out(out_path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + out_path);
  out << dump_run_config(RunConfig{});
  LOG_INFO("wrote default configuration to %s", out_path.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ExcitNet neural vocoder toolkit"};
  app.require_subcommand(1);

  CommonArgs common;

  // analyze
  auto* analyze = app.add_subcommand("analyze", "Extract conditioning features from a wav corpus");
  std::string wav_dir, out_dir, manifest;
  int sample_rate_override = 0, mu_override = 0;
  analyze->add_option("--wav-dir", wav_dir, "Directory of input .wav files")->required();
  analyze->add_option("--out-dir", out_dir, "Output directory for .excf features")->required();
  analyze->add_option("--config", common.config_path, "Run configuration file");
  analyze->add_option("--manifest", manifest, "Corpus manifest (stats fit on the train split)");
  analyze->add_option("--sample-rate", sample_rate_override, "Expected sample rate override");
  analyze->add_option("--mu", mu_override, "Mu-law compression parameter override");
  analyze->add_option("--jobs", common.jobs, "Worker threads (utterance level)");

  // train
  auto* train = app.add_subcommand("train", "Train a vocoder variant");
  std::string variant_arg, feature_dir, train_out;
  std::int64_t steps_override = 0;
  std::uint64_t seed_override = 0;
  bool seed_given = false, resume = false, zero_sew_rew = false;
  std::string preset_override;
  train->add_option("--variant", variant_arg, "wn | wn-ns | excitnet")->required();
  train->add_option("--wav-dir", wav_dir, "Directory of input .wav files")->required();
  train->add_option("--feature-dir", feature_dir, "Directory with .excf files + norm_stats.json")->required();
  train->add_option("--out-dir", train_out, "Output directory for checkpoints and curves")->required();
  train->add_option("--config", common.config_path, "Run configuration file");
  train->add_option("--manifest", manifest, "Corpus manifest with train/dev splits");
  train->add_option("--steps", steps_override, "Override train.max_steps");
  train->add_option("--preset", preset_override, "Override net.preset (paper|desk)");
  train->add_option("--seed", seed_override, "Override seed")->each([&](const std::string&) { seed_given = true; });
  train->add_flag("--resume", resume, "Resume from ckpt_last.ckpt in --out-dir");
  train->add_flag("--zero-sew-rew", zero_sew_rew, "Ablate SEW/REW conditioning dims");
  train->add_option("--jobs", common.jobs, "Worker threads");

  // synthesize
  auto* synth = app.add_subcommand("synthesize", "Generate waveforms from feature files");
  std::string ckpt_path, synth_out, mode_name = "sample";
  std::uint64_t synth_seed = 0;
  synth->add_option("--variant", variant_arg, "wn | wn-ns | excitnet")->required();
  synth->add_option("--checkpoint", ckpt_path, "Trained checkpoint")->required();
  synth->add_option("--feature-dir", feature_dir, "Directory of .excf files")->required();
  synth->add_option("--out-dir", synth_out, "Output directory for .wav files")->required();
  synth->add_option("--config", common.config_path, "Run configuration file");
  synth->add_option("--seed", synth_seed, "Generation seed");
  synth->add_option("--mode", mode_name, "sample | argmax")
      ->check(CLI::IsMember({"sample", "argmax"}));
  synth->add_option("--jobs", common.jobs, "Worker threads (one stream per utterance)");

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Objective metrics between two wav corpora");
  std::string ref_dir, test_dir, report_path = "report.json";
  evaluate->add_option("--ref-dir", ref_dir, "Reference .wav directory")->required();
  evaluate->add_option("--test-dir", test_dir, "Test .wav directory")->required();
  evaluate->add_option("--out", report_path, "Report JSON path (table written alongside)");
  evaluate->add_option("--config", common.config_path, "Run configuration file");
  evaluate->add_option("--jobs", common.jobs, "Worker threads");

  // config init
  auto* config_cmd = app.add_subcommand("config", "Configuration management");
  auto* config_init = config_cmd->add_subcommand("init", "Write the default configuration");
  std::string config_out = "excitnet.toml";
  bool force = false;
  config_init->add_option("--out", config_out, "Destination path");
  config_init->add_flag("--force", force, "Overwrite an existing file");
  config_cmd->require_subcommand(1);

  CLI11_PARSE(app, argc, argv);

  try {
    if (config_init->parsed()) return cmd_config_init(config_out, force);

    RunConfig config = common.load();
    if (!manifest.empty()) config.manifest = manifest;
    if (sample_rate_override > 0) config.sample_rate_hz = sample_rate_override;
    if (mu_override > 0) config.mu = mu_override;
    if (steps_override > 0) config.max_steps = steps_override;
    if (!preset_override.empty()) config.net_preset = preset_override;
    if (seed_given) config.seed = seed_override;
    if (zero_sew_rew) config.zero_sew_rew = true;

    if (analyze->parsed()) return cmd_analyze(common, config, wav_dir, out_dir);
    if (train->parsed())
      return cmd_train(common, config, variant_arg, wav_dir, feature_dir, train_out, resume);
    if (synth->parsed())
      return cmd_synthesize(common, config, variant_arg, ckpt_path, feature_dir,
                            synth_out, synth_seed, mode_name);
    if (evaluate->parsed())
      return cmd_evaluate(common, config, ref_dir, test_dir, report_path);
  } catch (const std::exception& e) {
    LOG_ERROR("%s", e.what());
    return 1;
  }
  return 0;
}
