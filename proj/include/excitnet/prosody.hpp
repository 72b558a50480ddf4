#pragma once

#include <span>
#include <vector>

#include "excitnet/framing.hpp"

namespace excitnet {

struct ProsodyFrame {
  double f0_hz = 0.0;  // 0 when unvoiced
  bool voiced = false;
  double gain_db = -120.0;  // 10*log10(mean-square frame energy + 1e-12)
};

struct F0Params {
  double min_hz = 60.0;
  double max_hz = 400.0;
  // frame is voiced iff the best normalized autocorrelation peak reaches this
  double voicing_threshold = 0.3;
};

// Normalized-autocorrelation pitch tracking. Each frame is analyzed over a
// window of twice the frame length (so two periods of the lowest pitch fit),
// with sub-lag resolution from parabolic interpolation and an octave check
// that prefers the shortest lag explaining the peak.
std::vector<ProsodyFrame> estimate_f0(std::span<const double> signal,
                                      const FrameGrid& grid, int sample_rate_hz,
                                      const F0Params& params = {});

}  // namespace excitnet
