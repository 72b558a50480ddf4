#pragma once

// Shared helpers for the test suites: a deterministic formant-style speech
// generator (voiced pulse trains through moving resonators, fricative noise
// bursts, short silences) plus temp-dir utilities. The generator produces
// material with genuine pitch, voicing and spectral-envelope structure so
// the LP/SEW/REW pipeline has something real to model.

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "excitnet/rng.hpp"
#include "excitnet/wav_io.hpp"

namespace testsupport {

// second-order resonator y[t] = 2 r cosθ y[t-1] - r^2 y[t-2] + x[t]
class Resonator {
 public:
  void set(double center_hz, double bandwidth_hz, int sample_rate) {
    const double pi = 3.141592653589793238462643383280;
    r_ = std::exp(-pi * bandwidth_hz / sample_rate);
    c_ = 2.0 * r_ * std::cos(2.0 * pi * center_hz / sample_rate);
  }
  double process(double x) {
    const double y = c_ * y1_ - r_ * r_ * y2_ + x;
    y2_ = y1_;
    y1_ = y;
    return y;
  }

 private:
  double r_ = 0.0, c_ = 0.0, y1_ = 0.0, y2_ = 0.0;
};

inline excitnet::Waveform synthetic_speech(std::uint64_t seed, double seconds,
                                           int sample_rate = 24000) {
  excitnet::Rng rng(seed);
  const std::size_t total = static_cast<std::size_t>(seconds * sample_rate);
  std::vector<double> out;
  out.reserve(total);

  Resonator f1, f2, f3, f4, f5;
  while (out.size() < total) {
    const double kind = rng.uniform();
    if (kind < 0.55) {
      // voiced segment: jittered glottal pulses through five formants, with
      // high-band aspiration noise so the spectrum is speech-like rather
      // than a clean harmonic comb
      const double dur = rng.uniform(0.12, 0.35);
      const std::size_t n = static_cast<std::size_t>(dur * sample_rate);
      double f0 = rng.uniform(90.0, 220.0);
      const double f0_drift = rng.uniform(-0.25, 0.25) * f0 / (dur * sample_rate);
      f1.set(rng.uniform(280.0, 850.0), rng.uniform(60.0, 120.0), sample_rate);
      f2.set(rng.uniform(900.0, 2300.0), rng.uniform(80.0, 160.0), sample_rate);
      f3.set(rng.uniform(2400.0, 3300.0), rng.uniform(120.0, 220.0), sample_rate);
      f4.set(rng.uniform(3400.0, 4600.0), rng.uniform(200.0, 350.0), sample_rate);
      f5.set(rng.uniform(5000.0, 8000.0), rng.uniform(500.0, 1200.0), sample_rate);
      const double amp = rng.uniform(0.4, 1.0);
      // per-segment breathiness: the degree of periodicity varies, which is
      // exactly the structure the SEW/REW features describe
      const double aspiration_level = rng.uniform(0.05, 0.3);

      double phase = 1.0;
      double pulse = 0.0;
      double smooth = 0.0;
      double jitter = 1.0, shimmer = 1.0;
      double prev_white = 0.0;
      for (std::size_t i = 0; i < n && out.size() < total; ++i) {
        phase += jitter * f0 / sample_rate;
        f0 += f0_drift;
        if (phase >= 1.0) {
          phase -= 1.0;
          pulse = shimmer;
          jitter = 1.0 + 0.02 * rng.normal();   // cycle-to-cycle period wobble
          shimmer = 1.0 + 0.08 * rng.normal();  // pulse amplitude wobble
        }
        pulse *= 0.985;  // decaying excitation pulse
        smooth = 0.6 * smooth + 0.4 * pulse;  // rounded glottal shape
        const double env =
            std::min({1.0, i / (0.01 * sample_rate), (n - i) / (0.02 * sample_rate)});
        const double white = rng.normal();
        const double aspiration = aspiration_level * (white - 0.6 * prev_white);
        prev_white = white;
        const double excitation = smooth + aspiration;
        out.push_back(amp * env *
                      f1.process(f2.process(f3.process(f4.process(f5.process(excitation))))) *
                      0.02);
      }
    } else if (kind < 0.85) {
      // unvoiced segment: filtered noise burst
      const double dur = rng.uniform(0.06, 0.18);
      const std::size_t n = static_cast<std::size_t>(dur * sample_rate);
      f1.set(rng.uniform(1500.0, 5000.0), rng.uniform(400.0, 1200.0), sample_rate);
      const double amp = rng.uniform(0.05, 0.25);
      double prev = 0.0;
      for (std::size_t i = 0; i < n && out.size() < total; ++i) {
        const double env =
            std::min({1.0, i / (0.005 * sample_rate), (n - i) / (0.01 * sample_rate)});
        const double white = rng.normal();
        const double high = white - 0.7 * prev;  // tilt toward high band
        prev = white;
        out.push_back(amp * env * f1.process(high) * 0.02);
      }
    } else {
      // silence gap
      const std::size_t n = static_cast<std::size_t>(rng.uniform(0.02, 0.08) * sample_rate);
      for (std::size_t i = 0; i < n && out.size() < total; ++i)
        out.push_back(1e-5 * rng.normal());
    }
  }

  double peak = 0.0;
  for (double v : out) peak = std::max(peak, std::abs(v));
  if (peak > 0) {
    const double scale = 0.6 / peak;
    for (auto& v : out) v *= scale;
  }
  // recording noise floor (~-44 dB vs peak); keeps the LP prediction gain in
  // the range of real captured speech instead of an exactly-AR signal
  for (auto& v : out) v += 0.004 * rng.normal();

  excitnet::Waveform w;
  w.sample_rate_hz = sample_rate;
  w.samples = std::move(out);
  return w;
}

// fresh scratch directory under the system temp root
inline std::filesystem::path make_temp_dir(const std::string& tag) {
  const auto dir = std::filesystem::temp_directory_path() /
                   ("excitnet_" + tag + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline double snr_db(std::span<const double> reference, std::span<const double> test) {
  const std::size_t n = std::min(reference.size(), test.size());
  double signal = 0.0, noise = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    signal += reference[i] * reference[i];
    const double e = reference[i] - test[i];
    noise += e * e;
  }
  if (noise <= 0.0) return 300.0;
  return 10.0 * std::log10(signal / noise);
}

}  // namespace testsupport
