#pragma once

#include <span>
#include <vector>

#include "excitnet/framing.hpp"

namespace excitnet {

// Predictor convention used throughout: x̂_t = Σ_i a_i · x_{t-i}, so the
// analysis filter is A(z) = 1 - Σ_i a_i z^{-i} and the synthesis filter is
// 1/A(z). LSF conversion and both filters below depend on this sign choice.
struct LpcCoefficients {
  std::vector<double> a;  // a[i-1] holds a_i

  int order() const { return static_cast<int>(a.size()); }
};

// Residual (excitation) signal; same length and rate as the source waveform.
using ExcitationSignal = std::vector<double>;

// r_k = Σ_t x_t · x_{t+k} for k = 0..max_lag.
std::vector<double> autocorrelate(std::span<const double> frame, int max_lag);

struct LevinsonResult {
  LpcCoefficients lpc;
  double residual_energy = 0.0;
  // reflection coefficients that hit |k| >= 1 and were clamped to ±0.999
  int clamped_reflections = 0;
};

// Solves the order-p Toeplitz normal equations by the Levinson-Durbin
// recursion. r[0] is floored at 1e-9 so silent frames yield a zero predictor
// instead of a division by zero.
LevinsonResult levinson_durbin(std::span<const double> r, int order);

// a_i ← a_i · gamma^i; pulls all filter poles inward by the factor gamma.
LpcCoefficients bandwidth_expand(const LpcCoefficients& lpc, double gamma);

// True iff all roots of A(z) lie strictly inside the unit circle (step-down
// recursion on the reflection coefficients).
bool is_stable(const LpcCoefficients& lpc);

// e_t = x_t - Σ_i a_i(frame(t)) · x_{t-i} with frame(t) = t / shift.
// Filter state (past input samples) runs continuously across frame
// boundaries, which makes synthesis_filter an exact inverse.
ExcitationSignal analysis_filter(std::span<const double> samples,
                                 std::span<const LpcCoefficients> frames,
                                 const FrameGrid& grid);

// x_t = e_t + Σ_i a_i(frame(t)) · x_{t-i}. Aborts if |x_t| exceeds 100,
// which indicates an unstable coefficient schedule.
std::vector<double> synthesis_filter(std::span<const double> excitation,
                                     std::span<const LpcCoefficients> frames,
                                     const FrameGrid& grid);

// Hann-windowed autocorrelation LP analysis of one frame: autocorrelate to
// lag `order`, Levinson-Durbin, then bandwidth expansion by gamma.
LpcCoefficients analyze_frame_lpc(std::span<const double> frame, int order,
                                  double gamma);

}  // namespace excitnet
