#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>

#include "excitnet/adam.hpp"
#include "excitnet/conditioning.hpp"
#include "excitnet/lpc.hpp"
#include "excitnet/net.hpp"

namespace excitnet {

enum class VariantTag { kWn, kWnNs, kExcitnet };

std::string variant_name(VariantTag tag);
VariantTag variant_from_name(const std::string& name);

// Checkpoint file: 4-byte magic "EXCK", u32 LE header length, JSON header,
// then the concatenated float32 LE tensor blob. The header carries the
// format version, network config, variant tag, training step, seed, RNG
// state, normalization stats, the optional noise-shaping filter, and a
// tensor manifest with shapes and byte offsets into the blob.
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  NetConfig config;
  VariantTag variant = VariantTag::kExcitnet;
  std::int64_t step = 0;
  std::uint64_t seed = 0;
  std::array<std::uint64_t, 4> rng_state{};
  NormStats norm_stats;
  std::optional<LpcCoefficients> noise_shaping;
  double best_dev_nll = 0.0;
  bool zero_sew_rew = false;  // model was trained with SEW/REW dims ablated
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& meta,
                     WaveNet<float>& net, const AdamState<float>& adam);

// Loads metadata and fills `net` (constructed by the caller from the header
// config obtained via load_checkpoint_meta) and `adam`.
Checkpoint load_checkpoint_meta(const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path, WaveNet<float>& net,
                           AdamState<float>* adam);

}  // namespace excitnet
