#include "excitnet/lpc.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace excitnet {

std::vector<double> autocorrelate(std::span<const double> frame, int max_lag) {
  if (frame.empty()) throw std::invalid_argument("autocorrelate: empty frame");
  if (max_lag >= static_cast<int>(frame.size()))
    throw std::invalid_argument("autocorrelate: max_lag must be below frame length");
  std::vector<double> r(static_cast<std::size_t>(max_lag) + 1, 0.0);
  const std::size_t n = frame.size();
  for (int k = 0; k <= max_lag; ++k) {
    double acc = 0.0;
    for (std::size_t t = 0; t + static_cast<std::size_t>(k) < n; ++t)
      acc += frame[t] * frame[t + static_cast<std::size_t>(k)];
    r[static_cast<std::size_t>(k)] = acc;
  }
  return r;
}

LevinsonResult levinson_durbin(std::span<const double> r, int order) {
  if (order < 0) throw std::invalid_argument("levinson_durbin: negative order");
  if (static_cast<int>(r.size()) < order + 1)
    throw std::invalid_argument("levinson_durbin: need order+1 autocorrelation lags");

  LevinsonResult result;
  result.lpc.a.assign(static_cast<std::size_t>(order), 0.0);

  double energy = std::max(r[0], 1e-9);
  std::vector<double> a(static_cast<std::size_t>(order), 0.0);
  std::vector<double> prev(static_cast<std::size_t>(order), 0.0);

  for (int m = 1; m <= order; ++m) {
    double acc = r[static_cast<std::size_t>(m)];
    for (int i = 1; i < m; ++i)
      acc -= a[static_cast<std::size_t>(i - 1)] * r[static_cast<std::size_t>(m - i)];
    double k = acc / energy;
    if (std::abs(k) >= 1.0) {
      k = std::clamp(k, -0.999, 0.999);
      ++result.clamped_reflections;
    }
    prev = a;
    a[static_cast<std::size_t>(m - 1)] = k;
    for (int i = 1; i < m; ++i)
      a[static_cast<std::size_t>(i - 1)] =
          prev[static_cast<std::size_t>(i - 1)] - k * prev[static_cast<std::size_t>(m - i - 1)];
    energy *= (1.0 - k * k);
  }

  result.lpc.a = std::move(a);
  result.residual_energy = energy;
  return result;
}

LpcCoefficients bandwidth_expand(const LpcCoefficients& lpc, double gamma) {
  if (gamma <= 0.0 || gamma > 1.0)
    throw std::invalid_argument("bandwidth_expand: gamma must be in (0, 1]");
  LpcCoefficients out = lpc;
  double factor = 1.0;
  for (auto& coeff : out.a) {
    factor *= gamma;
    coeff *= factor;
  }
  return out;
}

bool is_stable(const LpcCoefficients& lpc) {
  // step-down: recover reflection coefficients from the predictor
  std::vector<double> a = lpc.a;
  for (int m = lpc.order(); m >= 1; --m) {
    const double k = a[static_cast<std::size_t>(m - 1)];
    if (!std::isfinite(k) || std::abs(k) >= 1.0) return false;
    const double denom = 1.0 - k * k;
    std::vector<double> next(static_cast<std::size_t>(m - 1));
    for (int i = 1; i < m; ++i)
      next[static_cast<std::size_t>(i - 1)] =
          (a[static_cast<std::size_t>(i - 1)] + k * a[static_cast<std::size_t>(m - i - 1)]) / denom;
    a = std::move(next);
  }
  return true;
}

namespace {

const LpcCoefficients& frame_coeffs(std::span<const LpcCoefficients> frames,
                                    std::size_t t, int shift) {
  std::size_t idx = t / static_cast<std::size_t>(shift);
  if (idx >= frames.size()) idx = frames.size() - 1;
  return frames[idx];
}

}  // namespace

ExcitationSignal analysis_filter(std::span<const double> samples,
                                 std::span<const LpcCoefficients> frames,
                                 const FrameGrid& grid) {
  if (frames.empty()) throw std::invalid_argument("analysis_filter: no coefficient frames");
  ExcitationSignal e(samples.size());
  for (std::size_t t = 0; t < samples.size(); ++t) {
    const auto& lpc = frame_coeffs(frames, t, grid.frame_shift);
    double pred = 0.0;
    const int order = lpc.order();
    for (int i = 1; i <= order; ++i) {
      if (static_cast<std::size_t>(i) > t) break;
      pred += lpc.a[static_cast<std::size_t>(i - 1)] * samples[t - static_cast<std::size_t>(i)];
    }
    e[t] = samples[t] - pred;
  }
  return e;
}

std::vector<double> synthesis_filter(std::span<const double> excitation,
                                     std::span<const LpcCoefficients> frames,
                                     const FrameGrid& grid) {
  if (frames.empty()) throw std::invalid_argument("synthesis_filter: no coefficient frames");
  std::vector<double> x(excitation.size());
  for (std::size_t t = 0; t < excitation.size(); ++t) {
    const auto& lpc = frame_coeffs(frames, t, grid.frame_shift);
    double pred = 0.0;
    const int order = lpc.order();
    for (int i = 1; i <= order; ++i) {
      if (static_cast<std::size_t>(i) > t) break;
      pred += lpc.a[static_cast<std::size_t>(i - 1)] * x[t - static_cast<std::size_t>(i)];
    }
    x[t] = excitation[t] + pred;
    if (std::abs(x[t]) > 100.0)
      throw std::runtime_error(
          "synthesis_filter: diverged at sample " + std::to_string(t) + " (frame " +
          std::to_string(t / static_cast<std::size_t>(grid.frame_shift)) + ")");
  }
  return x;
}

LpcCoefficients analyze_frame_lpc(std::span<const double> frame, int order,
                                  double gamma) {
  const std::vector<double> window = hann_window(static_cast<int>(frame.size()));
  std::vector<double> windowed(frame.size());
  for (std::size_t i = 0; i < frame.size(); ++i) windowed[i] = frame[i] * window[i];
  const std::vector<double> r = autocorrelate(windowed, order);
  LevinsonResult lev = levinson_durbin(r, order);
  if (gamma < 1.0) return bandwidth_expand(lev.lpc, gamma);
  return lev.lpc;
}

}  // namespace excitnet
