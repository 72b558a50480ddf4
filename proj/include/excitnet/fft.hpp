#pragma once

#include <complex>
#include <span>
#include <vector>

namespace excitnet {

// In-place radix-2 FFT; size must be a power of two. The inverse transform
// includes the 1/N factor.
void fft_inplace(std::vector<std::complex<double>>& data, bool inverse = false);

// Magnitude spectrum |X_k| for k = 0..fft_size/2 of the zero-padded frame.
std::vector<double> magnitude_spectrum(std::span<const double> frame, int fft_size);

}  // namespace excitnet
