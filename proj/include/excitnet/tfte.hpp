#pragma once

#include <span>
#include <vector>

#include "excitnet/framing.hpp"

namespace excitnet {

// Per-frame excitation magnitude spectrum on a mel-spaced band axis:
// num_frames rows of num_bins non-negative entries. The band axis carries
// the spectral shape of the excitation; its row-to-row evolution carries the
// periodicity structure.
using TfteMatrix = std::vector<std::vector<double>>;

struct TfteParams {
  int num_bins = 36;
  int fft_size = 1024;
};

TfteMatrix compute_tfte(std::span<const double> excitation, const FrameGrid& grid,
                        int sample_rate_hz, const TfteParams& params = {});

// Full-band split of the TFTE along the time axis: the slowly evolving part
// is a zero-phase moving average of each band track (half width set by the
// cutoff), the rapidly evolving part is the remainder. sew + rew == tfte
// exactly, row by row.
struct TfteTracks {
  TfteMatrix sew;
  TfteMatrix rew;
};

TfteTracks split_tfte_tracks(const TfteMatrix& tfte, double cutoff_hz,
                             double frame_rate_hz);

// Per-frame SEW/REW conditioning coefficients: leading orthonormal-DCT
// coefficients of each track along the band axis.
struct SewRewFrame {
  std::vector<double> sew;  // sew_dims entries
  std::vector<double> rew;  // rew_dims entries
};

std::vector<SewRewFrame> decompose_sew_rew(const TfteMatrix& tfte,
                                           double cutoff_hz = 20.0,
                                           double frame_rate_hz = 200.0,
                                           int sew_dims = 32, int rew_dims = 4);

// Orthonormal DCT-II over a vector and its inverse (DCT-III); truncating the
// coefficient vector is an orthogonal projection.
std::vector<double> dct_orthonormal(std::span<const double> x, int num_coeffs);
std::vector<double> idct_orthonormal(std::span<const double> coeffs, int length);

}  // namespace excitnet
