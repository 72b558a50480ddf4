#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

namespace excitnet {

// Mono waveform with samples normalized to [-1, 1].
struct Waveform {
  std::vector<double> samples;
  int sample_rate_hz = 24000;

  std::size_t size() const { return samples.size(); }
  double duration_seconds() const {
    return static_cast<double>(samples.size()) / sample_rate_hz;
  }
};

// Reads a RIFF/WAVE file. Only PCM 16-bit mono is accepted; anything else
// fails loudly instead of being converted. Samples are scaled by 1/32768.
Waveform read_wav(const std::filesystem::path& path);

struct WavWriteResult {
  // number of input samples outside [-1, 1] that were clipped
  std::size_t clipped = 0;
};

// Writes PCM 16-bit mono little-endian. Out-of-range samples clip and are
// counted in the result.
WavWriteResult write_wav(const Waveform& waveform,
                         const std::filesystem::path& path);

}  // namespace excitnet
