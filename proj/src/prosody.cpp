#include "excitnet/prosody.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace excitnet {

namespace {

// NCC(tau) = sum x_t x_{t+tau} / sqrt(sum x_t^2 * sum x_{t+tau}^2), both sums
// over the overlap region t in [0, n-tau).
double normalized_autocorrelation(std::span<const double> w, int tau) {
  const int n = static_cast<int>(w.size());
  if (tau <= 0 || tau >= n) return 0.0;
  double cross = 0.0, e0 = 0.0, e1 = 0.0;
  for (int t = 0; t + tau < n; ++t) {
    const double a = w[static_cast<std::size_t>(t)];
    const double b = w[static_cast<std::size_t>(t + tau)];
    cross += a * b;
    e0 += a * a;
    e1 += b * b;
  }
  const double denom = std::sqrt(e0 * e1);
  if (denom < 1e-20) return 0.0;
  return cross / denom;
}

}  // namespace

std::vector<ProsodyFrame> estimate_f0(std::span<const double> signal,
                                      const FrameGrid& grid, int sample_rate_hz,
                                      const F0Params& params) {
  if (signal.empty()) throw std::invalid_argument("estimate_f0: empty signal");
  if (params.min_hz <= 0 || params.max_hz <= params.min_hz)
    throw std::invalid_argument("estimate_f0: invalid pitch range");

  const std::size_t count = grid.num_frames(signal.size());
  const int window_len = 2 * grid.frame_length;
  const int lag_min = std::max(1, static_cast<int>(std::floor(sample_rate_hz / params.max_hz)));
  const int lag_max = std::min(window_len - 2,
                               static_cast<int>(std::ceil(sample_rate_hz / params.min_hz)));

  std::vector<ProsodyFrame> prosody(count);

  #pragma omp parallel for schedule(static)
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t start = k * static_cast<std::size_t>(grid.frame_shift);

    // gain over the nominal frame span
    double energy = 0.0;
    for (int n = 0; n < grid.frame_length; ++n) {
      const std::size_t t = start + static_cast<std::size_t>(n);
      if (t < signal.size()) energy += signal[t] * signal[t];
    }
    energy /= grid.frame_length;

    ProsodyFrame frame;
    frame.gain_db = 10.0 * std::log10(energy + 1e-12);

    std::vector<double> w(static_cast<std::size_t>(window_len), 0.0);
    for (int n = 0; n < window_len; ++n) {
      const std::size_t t = start + static_cast<std::size_t>(n);
      if (t < signal.size()) w[static_cast<std::size_t>(n)] = signal[t];
    }

    std::vector<double> ncc(static_cast<std::size_t>(lag_max) + 1, 0.0);
    int best_lag = 0;
    double best_val = 0.0;
    for (int tau = lag_min; tau <= lag_max; ++tau) {
      ncc[static_cast<std::size_t>(tau)] = normalized_autocorrelation(w, tau);
      if (ncc[static_cast<std::size_t>(tau)] > best_val) {
        best_val = ncc[static_cast<std::size_t>(tau)];
        best_lag = tau;
      }
    }

    if (best_lag == 0 || best_val < params.voicing_threshold) {
      prosody[k] = frame;  // unvoiced
      continue;
    }

    // octave check: take the shortest sub-lag that explains the peak
    int lag = best_lag;
    for (int div = 4; div >= 2; --div) {
      const int candidate = (best_lag + div / 2) / div;
      if (candidate >= lag_min &&
          ncc[static_cast<std::size_t>(candidate)] >= 0.9 * best_val) {
        lag = candidate;
        break;
      }
    }

    double refined = static_cast<double>(lag);
    if (lag > lag_min && lag < lag_max) {
      const double left = ncc[static_cast<std::size_t>(lag - 1)];
      const double mid = ncc[static_cast<std::size_t>(lag)];
      const double right = ncc[static_cast<std::size_t>(lag + 1)];
      const double denom = left - 2.0 * mid + right;
      if (std::abs(denom) > 1e-12) {
        const double delta = std::clamp(0.5 * (left - right) / denom, -0.5, 0.5);
        refined += delta;
      }
    }

    frame.voiced = true;
    frame.f0_hz = std::clamp(sample_rate_hz / refined, params.min_hz, params.max_hz);
    prosody[k] = frame;
  }

  return prosody;
}

}  // namespace excitnet
