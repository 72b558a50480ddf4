#include "excitnet/framing.hpp"

#include <cmath>
#include <stdexcept>

namespace excitnet {

FrameGrid FrameGrid::from_ms(double frame_ms, double shift_ms, int sample_rate_hz) {
  if (frame_ms <= 0 || shift_ms <= 0 || sample_rate_hz <= 0)
    throw std::invalid_argument("FrameGrid::from_ms: all arguments must be positive");
  FrameGrid grid;
  grid.frame_length = static_cast<int>(std::lround(frame_ms * sample_rate_hz / 1000.0));
  grid.frame_shift = static_cast<int>(std::lround(shift_ms * sample_rate_hz / 1000.0));
  if (grid.frame_length <= 0 || grid.frame_shift <= 0)
    throw std::invalid_argument("FrameGrid::from_ms: degenerate grid");
  return grid;
}

std::size_t FrameGrid::num_frames(std::size_t num_samples) const {
  const std::size_t shift = static_cast<std::size_t>(frame_shift);
  return (num_samples + shift - 1) / shift;
}

std::vector<double> hann_window(int length) {
  std::vector<double> w(static_cast<std::size_t>(length));
  if (length == 1) {
    w[0] = 1.0;
    return w;
  }
  const double two_pi = 6.283185307179586476925286766559;
  for (int n = 0; n < length; ++n)
    w[static_cast<std::size_t>(n)] =
        0.5 * (1.0 - std::cos(two_pi * n / (length - 1)));
  return w;
}

std::vector<double> extract_frame(std::span<const double> samples,
                                  const FrameGrid& grid, std::size_t index,
                                  Window window) {
  std::vector<double> frame(static_cast<std::size_t>(grid.frame_length), 0.0);
  const std::size_t start = index * static_cast<std::size_t>(grid.frame_shift);
  for (int n = 0; n < grid.frame_length; ++n) {
    const std::size_t t = start + static_cast<std::size_t>(n);
    if (t < samples.size()) frame[static_cast<std::size_t>(n)] = samples[t];
  }
  if (window == Window::kHann) {
    const std::vector<double> w = hann_window(grid.frame_length);
    for (int n = 0; n < grid.frame_length; ++n)
      frame[static_cast<std::size_t>(n)] *= w[static_cast<std::size_t>(n)];
  }
  return frame;
}

std::vector<std::vector<double>> frame_signal(const Waveform& waveform,
                                              const FrameGrid& grid,
                                              Window window) {
  if (waveform.samples.empty())
    throw std::invalid_argument("frame_signal: empty waveform");
  const std::size_t count = grid.num_frames(waveform.samples.size());
  std::vector<std::vector<double>> frames;
  frames.reserve(count);
  for (std::size_t k = 0; k < count; ++k)
    frames.push_back(extract_frame(waveform.samples, grid, k, window));
  return frames;
}

}  // namespace excitnet
