#include "excitnet/variants.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include "excitnet/framing.hpp"
#include "excitnet/lsf.hpp"

namespace excitnet {

NoiseShapingFilter fit_noise_shaping_filter(std::span<const Waveform> corpus,
                                            const FrameGrid& grid, int order) {
  if (corpus.empty())
    throw std::invalid_argument("fit_noise_shaping_filter: empty corpus");

  std::vector<double> avg(static_cast<std::size_t>(order) + 1, 0.0);
  const std::vector<double> window = hann_window(grid.frame_length);
  std::size_t total_frames = 0;

  for (const auto& utterance : corpus) {
    const std::size_t count = grid.num_frames(utterance.samples.size());
    for (std::size_t k = 0; k < count; ++k) {
      std::vector<double> frame =
          extract_frame(utterance.samples, grid, k, Window::kRectangular);
      for (int n = 0; n < grid.frame_length; ++n)
        frame[static_cast<std::size_t>(n)] *= window[static_cast<std::size_t>(n)];
      const std::vector<double> r = autocorrelate(frame, order);
      for (std::size_t i = 0; i < avg.size(); ++i) avg[i] += r[i];
      ++total_frames;
    }
  }
  if (total_frames == 0)
    throw std::invalid_argument("fit_noise_shaping_filter: no frames in corpus");
  for (auto& v : avg) v /= static_cast<double>(total_frames);

  NoiseShapingFilter filter;
  filter.coeffs = levinson_durbin(avg, order).lpc;
  return filter;
}

PreparedTarget prepare_target(const Waveform& waveform, VariantTag variant,
                              std::span<const LpcCoefficients> frame_lpcs,
                              const NoiseShapingFilter* nsf, const FrameGrid& grid,
                              int mu) {
  PreparedTarget out;
  switch (variant) {
    case VariantTag::kWn: {
      out.symbols = mu_law_encode(waveform.samples, mu);
      out.gain = 1.0;
      return out;
    }
    case VariantTag::kExcitnet: {
      if (frame_lpcs.empty())
        throw std::invalid_argument("prepare_target: ExcitNet needs frame LPCs");
      const ExcitationSignal e = analysis_filter(waveform.samples, frame_lpcs, grid);
      double g = 0.0;
      for (double v : e) g = std::max(g, std::abs(v));
      if (g == 0.0)
        throw std::runtime_error("prepare_target: silent utterance (zero excitation)");
      std::vector<double> scaled(e.size());
      for (std::size_t i = 0; i < e.size(); ++i) scaled[i] = e[i] / g;
      out.symbols = mu_law_encode(scaled, mu);
      out.gain = g;
      return out;
    }
    case VariantTag::kWnNs: {
      if (nsf == nullptr)
        throw std::invalid_argument("prepare_target: WN-NS needs a noise-shaping filter");
      const std::vector<LpcCoefficients> fixed{nsf->coeffs};
      const ExcitationSignal e = analysis_filter(waveform.samples, fixed, grid);
      double g = 0.0;
      for (double v : e) g = std::max(g, std::abs(v));
      if (g == 0.0)
        throw std::runtime_error("prepare_target: silent utterance (zero residual)");
      std::vector<double> scaled(e.size());
      for (std::size_t i = 0; i < e.size(); ++i) scaled[i] = e[i] / g;
      out.symbols = mu_law_encode(scaled, mu);
      out.gain = g;
      return out;
    }
  }
  throw std::logic_error("prepare_target: bad variant");
}

std::vector<double> invert_target(std::span<const std::uint8_t> symbols, double gain,
                                  VariantTag variant,
                                  std::span<const LpcCoefficients> frame_lpcs,
                                  const NoiseShapingFilter* nsf, const FrameGrid& grid,
                                  int mu) {
  std::vector<double> signal = mu_law_decode(symbols, mu);
  for (auto& v : signal) v *= gain;
  switch (variant) {
    case VariantTag::kWn:
      return signal;
    case VariantTag::kExcitnet:
      if (frame_lpcs.empty())
        throw std::invalid_argument("invert_target: ExcitNet needs frame LPCs");
      return synthesis_filter(signal, frame_lpcs, grid);
    case VariantTag::kWnNs: {
      if (nsf == nullptr)
        throw std::invalid_argument("invert_target: WN-NS needs a noise-shaping filter");
      const std::vector<LpcCoefficients> fixed{nsf->coeffs};
      return synthesis_filter(signal, fixed, grid);
    }
  }
  throw std::logic_error("invert_target: bad variant");
}

std::vector<LpcCoefficients> frame_lpcs_from_features(const FeatureMatrix& features,
                                                      const FeatureLayout& layout) {
  std::vector<LpcCoefficients> lpcs(features.size());
  constexpr double kPi = 3.141592653589793238462643383280;
  constexpr double kMinGap = 1e-5;

  #pragma omp parallel for schedule(static)
  for (std::size_t k = 0; k < features.size(); ++k) {
    LsfVector lsf;
    lsf.frequencies.assign(features[k].begin(),
                           features[k].begin() + layout.lsf_dims);
    // float32 storage can nudge near-equal frequencies out of order
    std::sort(lsf.frequencies.begin(), lsf.frequencies.end());
    double prev = 0.0;
    for (auto& w : lsf.frequencies) {
      w = std::max(w, prev + kMinGap);
      w = std::min(w, kPi - kMinGap);
      prev = w;
    }
    lpcs[k] = lsf_to_lpc(lsf);
  }
  return lpcs;
}

TrainingUtterance make_training_utterance(const std::string& name,
                                          const Waveform& waveform,
                                          const FeatureMatrix& raw_features,
                                          VariantTag variant, const NormStats& stats,
                                          const FeatureLayout& layout,
                                          const FrameGrid& grid,
                                          const NoiseShapingFilter* nsf, int mu) {
  const std::size_t expected = grid.num_frames(waveform.samples.size());
  if (raw_features.size() != expected)
    throw std::invalid_argument("make_training_utterance: " + name + " has " +
                                std::to_string(raw_features.size()) + " frames, wav implies " +
                                std::to_string(expected));

  TrainingUtterance utt;
  utt.name = name;

  std::vector<LpcCoefficients> lpcs;
  if (variant == VariantTag::kExcitnet)
    lpcs = frame_lpcs_from_features(raw_features, layout);
  PreparedTarget target = prepare_target(waveform, variant, lpcs, nsf, grid, mu);
  utt.targets = std::move(target.symbols);
  utt.gain = target.gain;

  utt.features = raw_features;
  normalize_rows(utt.features, stats);
  return utt;
}

namespace {

// conditioning window rows [start, start+len) as float, with optional
// SEW/REW ablation (zeroed after normalization = pinned at the mean)
void fill_condition_window(const TrainingUtterance& utt, const FrameGrid& grid,
                           const FeatureLayout& layout, bool zero_sew_rew,
                           std::int64_t start, std::int64_t len, float* out) {
  const int dim = layout.dim();
  const std::int64_t shift = grid.frame_shift;
  for (std::int64_t t = 0; t < len; ++t) {
    const std::size_t frame = static_cast<std::size_t>((start + t) / shift);
    const auto& row = utt.features[std::min(frame, utt.features.size() - 1)];
    float* dst = out + t * dim;
    for (int d = 0; d < dim; ++d) dst[d] = static_cast<float>(row[static_cast<std::size_t>(d)]);
    if (zero_sew_rew)
      for (int d = layout.sew_index(); d < dim; ++d) dst[d] = 0.0f;
  }
}

void write_curves_csv(const std::filesystem::path& path,
                      const std::vector<CurvePoint>& curve) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "step,train_nll,dev_nll\n";
  out << std::setprecision(10);
  for (const auto& p : curve) {
    out << p.step << ',' << p.train_nll << ',';
    if (p.dev_nll >= 0.0) out << p.dev_nll;
    out << '\n';
  }
}

}  // namespace

double evaluate_nll(WaveNet<float>& net, std::span<const TrainingUtterance> utts,
                    const FrameGrid& grid, bool zero_sew_rew,
                    const FeatureLayout& layout) {
  const std::int64_t context = receptive_field(net.config()) - 1;
  const std::int64_t body = 4096;
  const int dim = layout.dim();

  double total = 0.0;
  std::int64_t count = 0;
  std::vector<float> cond;
  for (const auto& utt : utts) {
    const std::int64_t samples = static_cast<std::int64_t>(utt.targets.size());
    for (std::int64_t s = 0; s < samples; s += body) {
      const std::int64_t chunk_end = std::min(s + body, samples);
      const std::int64_t ctx_start = std::max<std::int64_t>(0, s - context);
      const std::int64_t len = chunk_end - ctx_start;
      const std::int64_t loss_start = s - ctx_start;
      cond.resize(static_cast<std::size_t>(len * dim));
      fill_condition_window(utt, grid, layout, zero_sew_rew, ctx_start, len, cond.data());
      std::span<const std::uint8_t> window(utt.targets.data() + ctx_start,
                                           static_cast<std::size_t>(len));
      net.forward(window, cond.data(), len);
      const double nll = nll_loss(net.logits(), window, loss_start);
      total += nll * static_cast<double>(len - loss_start);
      count += len - loss_start;
    }
  }
  if (count == 0) throw std::invalid_argument("evaluate_nll: no samples");
  return total / static_cast<double>(count);
}

TrainResult train_vocoder(VariantTag variant, const TrainingData& data,
                          const NetConfig& net_config, const TrainConfig& train_config,
                          const std::filesystem::path& out_dir, bool resume) {
  if (data.train.empty()) throw std::invalid_argument("train_vocoder: no training utterances");
  if (variant == VariantTag::kWnNs && !data.noise_shaping)
    throw std::invalid_argument("train_vocoder: WN-NS training data lacks the noise-shaping filter");

  std::filesystem::create_directories(out_dir);
  TrainResult result;
  result.best_checkpoint = out_dir / "ckpt_best.ckpt";
  result.last_checkpoint = out_dir / "ckpt_last.ckpt";
  result.curves_csv = out_dir / "curves.csv";

  WaveNet<float> net(net_config);
  auto params = net.parameters();
  auto adam = AdamState<float>::init(params);
  Rng rng(train_config.seed);

  Checkpoint meta;
  meta.config = net_config;
  meta.variant = variant;
  meta.seed = train_config.seed;
  meta.norm_stats = data.stats;
  meta.zero_sew_rew = train_config.zero_sew_rew;
  if (data.noise_shaping) meta.noise_shaping = data.noise_shaping;
  meta.best_dev_nll = std::numeric_limits<double>::infinity();

  std::int64_t start_step = 0;
  if (resume && std::filesystem::exists(result.last_checkpoint)) {
    const Checkpoint loaded = load_checkpoint(result.last_checkpoint, net, &adam);
    if (loaded.variant != variant)
      throw std::runtime_error("train_vocoder: resume checkpoint has variant " +
                               variant_name(loaded.variant));
    rng.set_state(loaded.rng_state);
    start_step = loaded.step;
    meta.best_dev_nll = loaded.best_dev_nll;
  } else {
    net.init_xavier(rng);
  }

  const std::int64_t rf = receptive_field(net_config);
  const std::int64_t context = rf - 1;
  const AdamConfig adam_config{train_config.learning_rate, train_config.adam_beta1,
                               train_config.adam_beta2, train_config.adam_eps};

  // utterances sampled proportionally to length
  std::vector<std::uint64_t> cumulative;
  std::uint64_t total_samples = 0;
  for (const auto& utt : data.train) {
    total_samples += utt.targets.size();
    cumulative.push_back(total_samples);
  }

  // round-robin tiling for the cyclic order: every (utterance, offset) pair
  struct Segment {
    std::size_t utterance;
    std::int64_t body_start;
  };
  std::vector<Segment> cycle;
  if (train_config.segment_order == SegmentOrder::kCyclic) {
    for (std::size_t u = 0; u < data.train.size(); ++u) {
      const std::int64_t samples = static_cast<std::int64_t>(data.train[u].targets.size());
      const std::int64_t body = std::min(train_config.batch_size_samples, samples);
      for (std::int64_t s = 0; s + body <= samples; s += body) cycle.push_back({u, s});
    }
  }

  std::vector<float> cond;
  for (std::int64_t step = start_step; step < train_config.max_steps; ++step) {
    // draw an utterance, then a window with receptive-field left context
    std::size_t u;
    std::int64_t body_start;
    std::int64_t samples, body;
    if (train_config.segment_order == SegmentOrder::kCyclic) {
      const Segment& seg = cycle[static_cast<std::size_t>(step) % cycle.size()];
      u = seg.utterance;
      samples = static_cast<std::int64_t>(data.train[u].targets.size());
      body = std::min(train_config.batch_size_samples, samples);
      body_start = seg.body_start;
    } else {
      const std::uint64_t pick = rng.uniform_index(total_samples);
      u = 0;
      while (cumulative[u] <= pick) ++u;
      samples = static_cast<std::int64_t>(data.train[u].targets.size());
      body = std::min(train_config.batch_size_samples, samples);
      const std::int64_t max_start = samples - body;
      body_start = max_start > 0
                       ? static_cast<std::int64_t>(rng.uniform_index(
                             static_cast<std::uint64_t>(max_start + 1)))
                       : 0;
    }
    const auto& utt = data.train[u];
    const std::int64_t ctx_start = std::max<std::int64_t>(0, body_start - context);
    const std::int64_t len = body_start + body - ctx_start;
    const std::int64_t loss_start = body_start - ctx_start;

    cond.resize(static_cast<std::size_t>(len * data.layout.dim()));
    fill_condition_window(utt, data.grid, data.layout, train_config.zero_sew_rew,
                          ctx_start, len, cond.data());
    std::span<const std::uint8_t> window(utt.targets.data() + ctx_start,
                                         static_cast<std::size_t>(len));

    net.forward(window, cond.data(), len);
    net.zero_grad();
    const double loss = net.loss_and_backward(window, loss_start);
    if (!std::isfinite(loss))
      throw std::runtime_error("train_vocoder: non-finite loss at step " +
                               std::to_string(step + 1));
    if (!adam_step(params, adam, adam_config))
      std::fprintf(stderr, "train_vocoder: skipped step %lld (non-finite gradient)\n",
                   static_cast<long long>(step + 1));

    CurvePoint point;
    point.step = step + 1;
    point.train_nll = loss;

    const bool at_eval = ((step + 1) % train_config.eval_interval == 0) ||
                         (step + 1 == train_config.max_steps);
    if (at_eval && !data.dev.empty()) {
      point.dev_nll = evaluate_nll(net, data.dev, data.grid,
                                   train_config.zero_sew_rew, data.layout);
      meta.step = step + 1;
      meta.rng_state = rng.state();
      save_checkpoint(result.last_checkpoint, meta, net, adam);
      if (point.dev_nll < meta.best_dev_nll) {
        meta.best_dev_nll = point.dev_nll;
        save_checkpoint(result.best_checkpoint, meta, net, adam);
      }
    } else if (at_eval) {
      meta.step = step + 1;
      meta.rng_state = rng.state();
      save_checkpoint(result.last_checkpoint, meta, net, adam);
    }
    result.curve.push_back(point);
  }

  // final state even when max_steps is not a multiple of eval_interval
  meta.step = train_config.max_steps;
  meta.rng_state = rng.state();
  save_checkpoint(result.last_checkpoint, meta, net, adam);
  if (data.dev.empty() && !std::filesystem::exists(result.best_checkpoint))
    save_checkpoint(result.best_checkpoint, meta, net, adam);

  result.best_dev_nll = meta.best_dev_nll;
  result.steps_run = train_config.max_steps - start_step;
  write_curves_csv(result.curves_csv, result.curve);
  return result;
}

Waveform synthesize_utterance(WaveNet<float>& net, const Checkpoint& meta,
                              const FeatureMatrix& raw_features,
                              const FrameGrid& grid, const FeatureLayout& layout,
                              const SynthesisOptions& options, int mu) {
  if (raw_features.empty())
    throw std::invalid_argument("synthesize_utterance: no feature frames");

  const std::size_t num_samples = raw_features.size() * static_cast<std::size_t>(grid.frame_shift);

  FeatureMatrix normalized = raw_features;
  normalize_rows(normalized, meta.norm_stats);
  if (meta.zero_sew_rew)
    for (auto& row : normalized)
      for (int d = layout.sew_index(); d < layout.dim(); ++d)
        row[static_cast<std::size_t>(d)] = 0.0;

  const std::vector<float> cond = upsample(normalized, grid, num_samples);
  const SymbolSequence symbols =
      generate(net, cond.data(), static_cast<std::int64_t>(num_samples), options.seed,
               options.mode);

  // recover the residual scale: explicit if given, else matched to the
  // conditioned per-frame energies
  double gain = 1.0;
  if (meta.variant != VariantTag::kWn) {
    if (options.gain) {
      gain = *options.gain;
    } else {
      const std::vector<double> decoded = mu_law_decode(symbols, mu);
      double target_ms = 0.0;
      for (const auto& row : raw_features)
        target_ms += std::pow(10.0, row[static_cast<std::size_t>(layout.gain_index())] / 10.0);
      target_ms /= static_cast<double>(raw_features.size());
      double actual_ms = 0.0;
      for (double v : decoded) actual_ms += v * v;
      actual_ms /= static_cast<double>(decoded.size());
      if (actual_ms > 1e-20) gain = std::sqrt(target_ms / actual_ms);
    }
  }

  std::vector<LpcCoefficients> lpcs;
  const NoiseShapingFilter* nsf_ptr = nullptr;
  NoiseShapingFilter nsf;
  if (meta.variant == VariantTag::kExcitnet) {
    lpcs = frame_lpcs_from_features(raw_features, layout);
  } else if (meta.variant == VariantTag::kWnNs) {
    if (!meta.noise_shaping)
      throw std::runtime_error("synthesize_utterance: checkpoint lacks the noise-shaping filter");
    nsf.coeffs = *meta.noise_shaping;
    nsf_ptr = &nsf;
  }

  Waveform out;
  out.sample_rate_hz = options.sample_rate_hz;
  out.samples = invert_target(symbols, gain, meta.variant, lpcs, nsf_ptr, grid, mu);
  for (auto& v : out.samples) v = std::clamp(v, -1.0, 1.0);
  return out;
}

}  // namespace excitnet
