#include "excitnet/mulaw.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace excitnet {

double mu_law_compand(double x, int mu) {
  const double m = static_cast<double>(mu);
  const double s = x < 0.0 ? -1.0 : 1.0;
  return s * std::log1p(m * std::abs(x)) / std::log1p(m);
}

double mu_law_expand(double y, int mu) {
  const double m = static_cast<double>(mu);
  const double s = y < 0.0 ? -1.0 : 1.0;
  return s * std::expm1(std::abs(y) * std::log1p(m)) / m;
}

std::uint8_t mu_law_encode_sample(double x, int mu) {
  if (!std::isfinite(x))
    throw std::invalid_argument("mu_law_encode: non-finite sample");
  const double f = mu_law_compand(x, mu);
  const double idx = std::floor((f + 1.0) / 2.0 * 256.0);
  return static_cast<std::uint8_t>(std::clamp(idx, 0.0, 255.0));
}

double mu_law_decode_sample(std::uint8_t symbol, int mu) {
  // bin center in the companded domain
  const double y = (static_cast<double>(symbol) + 0.5) / 128.0 - 1.0;
  return mu_law_expand(y, mu);
}

SymbolSequence mu_law_encode(std::span<const double> samples, int mu) {
  SymbolSequence out(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i)
    out[i] = mu_law_encode_sample(samples[i], mu);
  return out;
}

std::vector<double> mu_law_decode(std::span<const std::uint8_t> symbols, int mu) {
  std::vector<double> out(symbols.size());
  for (std::size_t i = 0; i < symbols.size(); ++i)
    out[i] = mu_law_decode_sample(symbols[i], mu);
  return out;
}

std::vector<float> one_hot(std::uint8_t symbol, int num_classes) {
  std::vector<float> row(static_cast<std::size_t>(num_classes), 0.0f);
  row[symbol] = 1.0f;
  return row;
}

}  // namespace excitnet
