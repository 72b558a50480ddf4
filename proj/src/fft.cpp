#include "excitnet/fft.hpp"

#include <cmath>
#include <stdexcept>

namespace excitnet {

void fft_inplace(std::vector<std::complex<double>>& data, bool inverse) {
  const std::size_t n = data.size();
  if (n == 0 || (n & (n - 1)) != 0)
    throw std::invalid_argument("fft_inplace: size must be a power of two");

  // bit reversal permutation
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(data[i], data[j]);
  }

  const double pi = 3.141592653589793238462643383280;
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double angle = (inverse ? 2.0 : -2.0) * pi / static_cast<double>(len);
    const std::complex<double> wlen(std::cos(angle), std::sin(angle));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const std::complex<double> u = data[i + k];
        const std::complex<double> v = data[i + k + len / 2] * w;
        data[i + k] = u + v;
        data[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }

  if (inverse) {
    const double scale = 1.0 / static_cast<double>(n);
    for (auto& x : data) x *= scale;
  }
}

std::vector<double> magnitude_spectrum(std::span<const double> frame, int fft_size) {
  if (fft_size <= 0 || (fft_size & (fft_size - 1)) != 0)
    throw std::invalid_argument("magnitude_spectrum: fft_size must be a power of two");
  if (static_cast<int>(frame.size()) > fft_size)
    throw std::invalid_argument("magnitude_spectrum: frame longer than fft_size");

  std::vector<std::complex<double>> buf(static_cast<std::size_t>(fft_size));
  for (std::size_t i = 0; i < frame.size(); ++i) buf[i] = frame[i];
  fft_inplace(buf);

  std::vector<double> mag(static_cast<std::size_t>(fft_size / 2 + 1));
  for (std::size_t k = 0; k < mag.size(); ++k) mag[k] = std::abs(buf[k]);
  return mag;
}

}  // namespace excitnet
