#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "excitnet/conditioning.hpp"
#include "excitnet/framing.hpp"
#include "excitnet/net.hpp"
#include "excitnet/prosody.hpp"
#include "excitnet/tfte.hpp"
#include "excitnet/variants.hpp"

namespace excitnet {

// Full run configuration; defaults reproduce the reference vocoder setup
// (24 kHz, 20/5 ms frames, order-40 LP with 0.981^i expansion, 32+4 SEW/REW,
// 8-bit mu-law, paper-scale network, Adam at 1e-4 with 30k-sample batches).
// Parsed from a strict TOML subset: [sections], key = value, # comments.
// Unknown sections or keys are rejected.
struct RunConfig {
  std::uint64_t seed = 1234;

  // [audio]
  int sample_rate_hz = 24000;
  int mu = 255;

  // [framing]
  double frame_ms = 20.0;
  double shift_ms = 5.0;

  // [lp]
  int lp_order = 40;
  double bandwidth_gamma = 0.981;

  // [features]
  int sew_dims = 32;
  int rew_dims = 4;
  int tfte_bands = 36;
  int fft_size = 1024;
  double f0_min_hz = 60.0;
  double f0_max_hz = 400.0;
  double voicing_threshold = 0.3;
  double sew_cutoff_hz = 20.0;

  // [net]  preset paper|desk; positive overrides replace preset values
  std::string net_preset = "paper";
  int net_blocks = 0;
  int net_layers_per_block = 0;
  int net_residual_channels = 0;
  int net_gate_channels = 0;
  int net_skip_channels = 0;

  // [train]
  double learning_rate = 1e-4;
  std::int64_t batch_size_samples = 30000;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::int64_t max_steps = 10000;
  std::int64_t eval_interval = 1000;
  bool zero_sew_rew = false;

  // [paths]
  std::string wav_dir;
  std::string feature_dir;
  std::string out_dir;
  std::string manifest;

  FrameGrid grid() const { return FrameGrid::from_ms(frame_ms, shift_ms, sample_rate_hz); }
  FeatureLayout layout() const { return FeatureLayout{lp_order, sew_dims, rew_dims}; }
  F0Params f0_params() const { return F0Params{f0_min_hz, f0_max_hz, voicing_threshold}; }
  TfteParams tfte_params() const { return TfteParams{tfte_bands, fft_size}; }
  NetConfig net_config() const;
  TrainConfig train_config() const;
};

RunConfig parse_run_config(const std::filesystem::path& path);
RunConfig parse_run_config_text(const std::string& text);

// Full dump with every key at its current value, parseable by the above.
std::string dump_run_config(const RunConfig& config);

}  // namespace excitnet
