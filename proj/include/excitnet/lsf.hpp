#pragma once

#include <vector>

#include "excitnet/lpc.hpp"

namespace excitnet {

// Line spectral frequencies: strictly increasing angles in (0, π). The
// interlacing of the underlying P/Q roots makes lsf_to_lpc produce a stable
// (minimum-phase) filter for any valid vector.
struct LsfVector {
  std::vector<double> frequencies;

  int order() const { return static_cast<int>(frequencies.size()); }
};

// Converts predictor coefficients to LSFs by isolating the unit-circle roots
// of P(z) = A(z) + z^-(M+1) A(1/z) and Q(z) = A(z) - z^-(M+1) A(1/z) with a
// dense grid search plus bisection. Requires even order. If root isolation
// fails (A not minimum phase), the input is bandwidth-expanded and retried;
// a persistent failure throws with a coefficient dump.
LsfVector lpc_to_lsf(const LpcCoefficients& lpc);

// Rebuilds A(z) = (P(z) + Q(z)) / 2 from the interleaved root pairs.
// Frequencies must be strictly increasing inside (0, π).
LpcCoefficients lsf_to_lpc(const LsfVector& lsf);

}  // namespace excitnet
