#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "excitnet/framing.hpp"
#include "excitnet/prosody.hpp"
#include "excitnet/wav_io.hpp"

namespace excitnet {

struct MetricParams {
  int fft_size = 1024;
  double eps = 1e-10;
};

// Per-frame log-spectral distances in dB: Hann-windowed frames, fft_size
// transform, RMS over bins of the log-magnitude difference. Signals are
// trimmed to the shorter length, which may differ by at most one frame.
std::vector<double> lsd_per_frame(const Waveform& reference, const Waveform& test,
                                  const FrameGrid& grid,
                                  const MetricParams& params = {});

// Mean of lsd_per_frame.
double lsd(const Waveform& reference, const Waveform& test, const FrameGrid& grid,
           const MetricParams& params = {});

struct RegionLsd {
  std::optional<double> voiced_db;         // frames outside the uv/transition set
  std::optional<double> uv_transition_db;  // unvoiced plus voicing-boundary frames
  std::size_t voiced_frames = 0;
  std::size_t uv_transition_frames = 0;
};

// Splits frames by the reference voicing track: a transition frame differs
// in voicing from either neighbor; the uv/transition set is their union with
// the unvoiced frames. The two sets partition all frames.
RegionLsd lsd_by_region(const Waveform& reference, const Waveform& test,
                        std::span<const ProsodyFrame> prosody, const FrameGrid& grid,
                        const MetricParams& params = {});

struct F0Rmse {
  std::optional<double> rmse_hz;  // absent when no frame is voiced in both
  std::size_t compared_frames = 0;
};

// RMSE over frames voiced in BOTH tracks.
F0Rmse f0_rmse(std::span<const ProsodyFrame> reference,
               std::span<const ProsodyFrame> test);

struct EvalReport {
  std::string name;
  double lsd_db = 0.0;
  std::optional<double> lsd_voiced_db;
  std::optional<double> lsd_uv_transition_db;
  std::optional<double> f0_rmse_hz;
  std::size_t frames_total = 0;
  std::size_t frames_voiced_region = 0;
  std::size_t frames_uv_transition = 0;
  std::size_t frames_f0_compared = 0;
};

// Full objective comparison of one utterance pair.
EvalReport evaluate_pair(const std::string& name, const Waveform& reference,
                         const Waveform& test, const FrameGrid& grid,
                         const F0Params& f0_params = {},
                         const MetricParams& params = {});

// Frame-weighted aggregate across utterances (weights are the respective
// frame counts of each metric).
EvalReport aggregate_reports(std::span<const EvalReport> reports);

void write_report_json(const std::filesystem::path& path,
                       std::span<const EvalReport> reports,
                       const EvalReport& aggregate,
                       std::span<const std::string> unmatched = {});

// Aligned plain-text table, one row per utterance plus the aggregate.
std::string format_report_table(std::span<const EvalReport> reports,
                                const EvalReport& aggregate);

}  // namespace excitnet
