#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "excitnet/checkpoint.hpp"
#include "excitnet/conditioning.hpp"
#include "excitnet/lpc.hpp"
#include "excitnet/mulaw.hpp"
#include "excitnet/net.hpp"
#include "excitnet/wav_io.hpp"

namespace excitnet {

// Time-invariant all-pole spectral filter fitted to a whole corpus; the
// WN-NS baseline whitens speech with it before mu-law quantization.
struct NoiseShapingFilter {
  LpcCoefficients coeffs;
};

// Averages the Hann-windowed per-frame autocorrelation sequences over every
// utterance, then solves for an order-`order` predictor. Averaging power
// spectra keeps the sequence positive definite, so the result is stable.
NoiseShapingFilter fit_noise_shaping_filter(std::span<const Waveform> corpus,
                                            const FrameGrid& grid, int order = 40);

struct PreparedTarget {
  SymbolSequence symbols;
  double gain = 1.0;  // per-utterance max-abs normalizer (1 for WN)
};

// Builds the training target stream for one utterance:
//   WN        mu-law of the speech signal itself
//   WN-NS     mu-law of the noise-shaped residual, scaled to [-1, 1]
//   ExcitNet  mu-law of the LP excitation, scaled to [-1, 1]
// frame_lpcs is required for ExcitNet, nsf for WN-NS. A silent utterance
// (zero residual) is rejected.
PreparedTarget prepare_target(const Waveform& waveform, VariantTag variant,
                              std::span<const LpcCoefficients> frame_lpcs,
                              const NoiseShapingFilter* nsf, const FrameGrid& grid,
                              int mu = 255);

// Exact inversion of prepare_target (no network in the loop): decode, undo
// the gain, then run the matching reconstruction filter.
std::vector<double> invert_target(std::span<const std::uint8_t> symbols, double gain,
                                  VariantTag variant,
                                  std::span<const LpcCoefficients> frame_lpcs,
                                  const NoiseShapingFilter* nsf, const FrameGrid& grid,
                                  int mu = 255);

// Per-frame reconstruction filters from the LSF block of raw feature rows.
// Repairs float32 rounding (sorting + minimum gap) before conversion so the
// synthesis filter is always stable.
std::vector<LpcCoefficients> frame_lpcs_from_features(const FeatureMatrix& features,
                                                      const FeatureLayout& layout);

// ---- training -------------------------------------------------------------

enum class SegmentOrder {
  kRandom,  // utterance by length, then a uniform window
  kCyclic,  // fixed round-robin tiling of every utterance
};

struct TrainConfig {
  double learning_rate = 1e-4;
  std::int64_t batch_size_samples = 30000;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::int64_t max_steps = 10000;
  std::uint64_t seed = 1234;
  std::int64_t eval_interval = 1000;
  bool zero_sew_rew = false;  // ablate SEW/REW conditioning dims
  SegmentOrder segment_order = SegmentOrder::kRandom;
  int mu = 255;
};

struct TrainingUtterance {
  std::string name;
  SymbolSequence targets;
  FeatureMatrix features;  // normalized per-frame rows
  double gain = 1.0;
};

struct TrainingData {
  std::vector<TrainingUtterance> train;
  std::vector<TrainingUtterance> dev;
  NormStats stats;
  FeatureLayout layout;
  FrameGrid grid;
  int sample_rate_hz = 24000;
  std::optional<LpcCoefficients> noise_shaping;
};

// Assembles normalized conditioning + targets for one split entry.
TrainingUtterance make_training_utterance(const std::string& name,
                                          const Waveform& waveform,
                                          const FeatureMatrix& raw_features,
                                          VariantTag variant, const NormStats& stats,
                                          const FeatureLayout& layout,
                                          const FrameGrid& grid,
                                          const NoiseShapingFilter* nsf, int mu = 255);

struct CurvePoint {
  std::int64_t step = 0;
  double train_nll = 0.0;
  double dev_nll = -1.0;  // < 0 when not evaluated at this step
};

struct TrainResult {
  std::vector<CurvePoint> curve;
  double best_dev_nll = 0.0;
  std::int64_t steps_run = 0;
  std::filesystem::path best_checkpoint;
  std::filesystem::path last_checkpoint;
  std::filesystem::path curves_csv;
};

// Full training run: teacher-forced segments with receptive-field context,
// Adam updates, periodic dev evaluation, best/last checkpoints and a per-step
// NLL curve CSV under out_dir. Resumes bit-exactly from last_checkpoint when
// `resume` is set and the file exists.
TrainResult train_vocoder(VariantTag variant, const TrainingData& data,
                          const NetConfig& net_config, const TrainConfig& train_config,
                          const std::filesystem::path& out_dir, bool resume = false);

// Teacher-forced mean NLL of a checkpointed model over a set of utterances
// (chunked so memory stays bounded).
double evaluate_nll(WaveNet<float>& net, std::span<const TrainingUtterance> utts,
                    const FrameGrid& grid, bool zero_sew_rew,
                    const FeatureLayout& layout);

// ---- synthesis ------------------------------------------------------------

struct SynthesisOptions {
  std::uint64_t seed = 0;
  GenerationMode mode = GenerationMode::kSample;
  int sample_rate_hz = 24000;
  // explicit residual gain (e.g. from prepare_target); otherwise estimated
  // from the conditioned frame gains
  std::optional<double> gain;
};

// Runs the generation path of one utterance from raw (unnormalized) feature
// rows and a loaded checkpoint. Duration is frames * frame_shift samples.
Waveform synthesize_utterance(WaveNet<float>& net, const Checkpoint& meta,
                              const FeatureMatrix& raw_features,
                              const FrameGrid& grid, const FeatureLayout& layout,
                              const SynthesisOptions& options, int mu = 255);

}  // namespace excitnet
