#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "excitnet/config.hpp"
#include "excitnet/conditioning.hpp"
#include "excitnet/wav_io.hpp"

namespace excitnet {

// One analysis pass over an utterance: per-frame LP analysis (Hann window,
// autocorrelation, Levinson-Durbin, bandwidth expansion, LSF conversion),
// LP inverse filtering to the excitation, prosody and SEW/REW extraction,
// packed into raw (unnormalized) feature rows.
struct UtteranceAnalysis {
  FeatureMatrix features;
  ExcitationSignal excitation;
  std::vector<LpcCoefficients> frame_lpcs;
  std::vector<ProsodyFrame> prosody;
};

UtteranceAnalysis analyze_utterance(const Waveform& waveform, const RunConfig& config);

// Corpus manifest: one entry per line, "<relative-wav-path> <split>" with
// split one of train/dev/test. '#' starts a comment.
struct ManifestEntry {
  std::string path;   // relative to the wav directory
  std::string split;  // train | dev | test
};

std::vector<ManifestEntry> parse_manifest(const std::filesystem::path& path);

}  // namespace excitnet
