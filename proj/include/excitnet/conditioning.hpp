#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "excitnet/framing.hpp"
#include "excitnet/lsf.hpp"
#include "excitnet/prosody.hpp"
#include "excitnet/tfte.hpp"

namespace excitnet {

// Fixed per-frame feature row: [lsf, f0, vuv, gain, sew, rew].
struct FeatureLayout {
  int lsf_dims = 40;
  int sew_dims = 32;
  int rew_dims = 4;

  int f0_index() const { return lsf_dims; }
  int vuv_index() const { return lsf_dims + 1; }
  int gain_index() const { return lsf_dims + 2; }
  int sew_index() const { return lsf_dims + 3; }
  int rew_index() const { return lsf_dims + 3 + sew_dims; }
  int dim() const { return lsf_dims + 3 + sew_dims + rew_dims; }

  std::string describe() const;
};

// Row-major frame-by-dim matrix of auxiliary features.
using FeatureMatrix = std::vector<std::vector<double>>;

struct SpectralFrame {
  LsfVector lsf;
  ProsodyFrame prosody;
};

// Packs per-frame spectral and excitation features into fixed layout rows.
// Unvoiced frames carry f0 = 0; the voicing flag is written as 0/1.
FeatureMatrix assemble(std::span<const SpectralFrame> spectral,
                       std::span<const SewRewFrame> excitation,
                       const FeatureLayout& layout);

struct NormStats {
  std::vector<double> mean;
  std::vector<double> std;
  std::string layout;
};

// Per-dimension population mean/std over the given rows, std floored at
// 1e-6. The voicing flag dimension is excluded (mean 0, std 1) and passes
// through normalization untouched.
NormStats fit_normalizer(const FeatureMatrix& features, const FeatureLayout& layout);

void normalize_rows(FeatureMatrix& features, const NormStats& stats);
void denormalize_rows(FeatureMatrix& features, const NormStats& stats);

// Zero-order-hold upsampling: row t of the output equals the frame row
// floor(t / frame_shift). Output is row-major num_samples-by-dim, float, the
// layout the network consumes.
std::vector<float> upsample(const FeatureMatrix& frames, const FrameGrid& grid,
                            std::size_t num_samples);

// Feature file: magic "EXCF", format-version u32 LE, frame-count u32 LE,
// dim u32 LE, then row-major float32 LE. Golden-file contract.
inline constexpr std::uint32_t kFeatureFileVersion = 1;

void write_feature_file(const std::filesystem::path& path, const FeatureMatrix& rows);
FeatureMatrix read_feature_file(const std::filesystem::path& path);

// NormStats persist as JSON with the layout string plus mean/std arrays.
void save_norm_stats(const std::filesystem::path& path, const NormStats& stats);
NormStats load_norm_stats(const std::filesystem::path& path);

}  // namespace excitnet
