#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace excitnet {

// 8-bit symbol stream; one symbol per waveform sample.
using SymbolSequence = std::vector<std::uint8_t>;

// Companding curve f(x) = sign(x) * ln(1 + mu|x|) / ln(1 + mu), odd and
// monotone on [-1, 1].
double mu_law_compand(double x, int mu = 255);
double mu_law_expand(double y, int mu = 255);

// symbol = clamp(floor((f(x) + 1) / 2 * 256), 0, 255)
std::uint8_t mu_law_encode_sample(double x, int mu = 255);

// Decodes to the center of the symbol's companded-domain bin.
double mu_law_decode_sample(std::uint8_t symbol, int mu = 255);

SymbolSequence mu_law_encode(std::span<const double> samples, int mu = 255);
std::vector<double> mu_law_decode(std::span<const std::uint8_t> symbols, int mu = 255);

// One-hot row for a symbol: 256 entries, all zero except [symbol] = 1.
std::vector<float> one_hot(std::uint8_t symbol, int num_classes = 256);

}  // namespace excitnet
