#include "excitnet/tfte.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "excitnet/fft.hpp"

namespace excitnet {

namespace {

constexpr double kPi = 3.141592653589793238462643383280;

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

// Triangular mel filterbank, unit peak, over [0, nyquist].
std::vector<std::vector<double>> mel_filterbank(int num_bins, int fft_size,
                                                int sample_rate_hz) {
  const int num_fft_bins = fft_size / 2 + 1;
  const double nyquist = sample_rate_hz / 2.0;
  std::vector<double> centers(static_cast<std::size_t>(num_bins) + 2);
  const double mel_max = hz_to_mel(nyquist);
  for (int i = 0; i < num_bins + 2; ++i)
    centers[static_cast<std::size_t>(i)] = mel_to_hz(mel_max * i / (num_bins + 1));

  std::vector<std::vector<double>> bank(static_cast<std::size_t>(num_bins));
  for (int b = 0; b < num_bins; ++b) {
    auto& filter = bank[static_cast<std::size_t>(b)];
    filter.assign(static_cast<std::size_t>(num_fft_bins), 0.0);
    const double lo = centers[static_cast<std::size_t>(b)];
    const double mid = centers[static_cast<std::size_t>(b) + 1];
    const double hi = centers[static_cast<std::size_t>(b) + 2];
    for (int k = 0; k < num_fft_bins; ++k) {
      const double f = nyquist * k / (num_fft_bins - 1);
      double w = 0.0;
      if (f > lo && f < mid)
        w = (f - lo) / (mid - lo);
      else if (f >= mid && f < hi)
        w = (hi - f) / (hi - mid);
      filter[static_cast<std::size_t>(k)] = w;
    }
  }
  return bank;
}

}  // namespace

TfteMatrix compute_tfte(std::span<const double> excitation, const FrameGrid& grid,
                        int sample_rate_hz, const TfteParams& params) {
  if (params.num_bins < 36)
    throw std::invalid_argument("compute_tfte: need at least 36 bands");
  if (params.fft_size < grid.frame_length)
    throw std::invalid_argument("compute_tfte: fft_size below frame length");

  const std::size_t count = grid.num_frames(excitation.size());
  const auto bank = mel_filterbank(params.num_bins, params.fft_size, sample_rate_hz);
  const std::vector<double> window = hann_window(grid.frame_length);

  TfteMatrix tfte(count);

  #pragma omp parallel for schedule(static)
  for (std::size_t k = 0; k < count; ++k) {
    std::vector<double> frame(static_cast<std::size_t>(grid.frame_length), 0.0);
    const std::size_t start = k * static_cast<std::size_t>(grid.frame_shift);
    for (int n = 0; n < grid.frame_length; ++n) {
      const std::size_t t = start + static_cast<std::size_t>(n);
      if (t < excitation.size())
        frame[static_cast<std::size_t>(n)] = excitation[t] * window[static_cast<std::size_t>(n)];
    }
    const std::vector<double> mag = magnitude_spectrum(frame, params.fft_size);

    auto& row = tfte[k];
    row.assign(static_cast<std::size_t>(params.num_bins), 0.0);
    for (int b = 0; b < params.num_bins; ++b) {
      const auto& filter = bank[static_cast<std::size_t>(b)];
      double acc = 0.0;
      for (std::size_t i = 0; i < mag.size(); ++i) acc += filter[i] * mag[i];
      row[static_cast<std::size_t>(b)] = acc;
    }
  }

  return tfte;
}

TfteTracks split_tfte_tracks(const TfteMatrix& tfte, double cutoff_hz,
                             double frame_rate_hz) {
  if (cutoff_hz <= 0 || cutoff_hz >= frame_rate_hz / 2.0)
    throw std::invalid_argument(
        "split_tfte_tracks: cutoff must be inside (0, frame_rate/2)");

  const std::size_t num_frames = tfte.size();
  TfteTracks tracks;
  tracks.sew.resize(num_frames);
  tracks.rew.resize(num_frames);
  if (num_frames == 0) return tracks;

  const std::size_t num_bins = tfte[0].size();
  const int half = std::max(1, static_cast<int>(std::floor(frame_rate_hz / cutoff_hz / 2.0)));

  #pragma omp parallel for schedule(static)
  for (std::size_t t = 0; t < num_frames; ++t) {
    // shrink the half width at the edges to keep the average symmetric
    const int h = std::min({half, static_cast<int>(t),
                            static_cast<int>(num_frames - 1 - t)});
    auto& sew_row = tracks.sew[t];
    auto& rew_row = tracks.rew[t];
    sew_row.assign(num_bins, 0.0);
    rew_row.assign(num_bins, 0.0);
    for (std::size_t b = 0; b < num_bins; ++b) {
      double acc = 0.0;
      for (int d = -h; d <= h; ++d)
        acc += tfte[static_cast<std::size_t>(static_cast<long>(t) + d)][b];
      const double sew = acc / (2 * h + 1);
      sew_row[b] = sew;
      rew_row[b] = tfte[t][b] - sew;
    }
  }
  return tracks;
}

std::vector<double> dct_orthonormal(std::span<const double> x, int num_coeffs) {
  const int n = static_cast<int>(x.size());
  if (num_coeffs > n)
    throw std::invalid_argument("dct_orthonormal: more coefficients than samples");
  std::vector<double> out(static_cast<std::size_t>(num_coeffs));
  for (int k = 0; k < num_coeffs; ++k) {
    double acc = 0.0;
    for (int i = 0; i < n; ++i)
      acc += x[static_cast<std::size_t>(i)] * std::cos(kPi * (i + 0.5) * k / n);
    const double scale = k == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
    out[static_cast<std::size_t>(k)] = scale * acc;
  }
  return out;
}

std::vector<double> idct_orthonormal(std::span<const double> coeffs, int length) {
  std::vector<double> out(static_cast<std::size_t>(length), 0.0);
  const int m = static_cast<int>(coeffs.size());
  for (int i = 0; i < length; ++i) {
    double acc = 0.0;
    for (int k = 0; k < m; ++k) {
      const double scale = k == 0 ? std::sqrt(1.0 / length) : std::sqrt(2.0 / length);
      acc += scale * coeffs[static_cast<std::size_t>(k)] *
             std::cos(kPi * (i + 0.5) * k / length);
    }
    out[static_cast<std::size_t>(i)] = acc;
  }
  return out;
}

std::vector<SewRewFrame> decompose_sew_rew(const TfteMatrix& tfte, double cutoff_hz,
                                           double frame_rate_hz, int sew_dims,
                                           int rew_dims) {
  const TfteTracks tracks = split_tfte_tracks(tfte, cutoff_hz, frame_rate_hz);
  std::vector<SewRewFrame> frames(tfte.size());

  #pragma omp parallel for schedule(static)
  for (std::size_t t = 0; t < tfte.size(); ++t) {
    frames[t].sew = dct_orthonormal(tracks.sew[t], sew_dims);
    frames[t].rew = dct_orthonormal(tracks.rew[t], rew_dims);
  }
  return frames;
}

}  // namespace excitnet
