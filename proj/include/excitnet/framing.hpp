#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "excitnet/wav_io.hpp"

namespace excitnet {

enum class Window { kRectangular, kHann };

// Analysis grid in samples. Frame k covers [k*shift, k*shift + length) with
// zero padding past either edge of the signal.
struct FrameGrid {
  int frame_length = 480;
  int frame_shift = 120;

  static FrameGrid from_ms(double frame_ms, double shift_ms, int sample_rate_hz);

  // ceil(num_samples / frame_shift)
  std::size_t num_frames(std::size_t num_samples) const;
};

// Symmetric Hann window of the given length.
std::vector<double> hann_window(int length);

// Extracts frame `index` with optional windowing; samples outside the signal
// are zero.
std::vector<double> extract_frame(std::span<const double> samples,
                                  const FrameGrid& grid, std::size_t index,
                                  Window window = Window::kRectangular);

std::vector<std::vector<double>> frame_signal(const Waveform& waveform,
                                              const FrameGrid& grid,
                                              Window window = Window::kRectangular);

}  // namespace excitnet
