#include "excitnet/pipeline.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "excitnet/lpc.hpp"
#include "excitnet/lsf.hpp"
#include "excitnet/prosody.hpp"
#include "excitnet/tfte.hpp"
#include "excitnet/variants.hpp"

namespace excitnet {

UtteranceAnalysis analyze_utterance(const Waveform& waveform, const RunConfig& config) {
  if (waveform.samples.empty())
    throw std::invalid_argument("analyze_utterance: empty waveform");
  if (waveform.sample_rate_hz != config.sample_rate_hz)
    throw std::invalid_argument("analyze_utterance: sample rate " +
                                std::to_string(waveform.sample_rate_hz) +
                                " does not match configured " +
                                std::to_string(config.sample_rate_hz));

  const FrameGrid grid = config.grid();
  const FeatureLayout layout = config.layout();
  const std::size_t num_frames = grid.num_frames(waveform.samples.size());

  UtteranceAnalysis out;
  std::vector<LsfVector> lsfs(num_frames);
  FeatureMatrix lsf_rows(num_frames);

  #pragma omp parallel for schedule(static)
  for (std::size_t k = 0; k < num_frames; ++k) {
    const std::vector<double> frame =
        extract_frame(waveform.samples, grid, k, Window::kRectangular);
    const LpcCoefficients lpc =
        analyze_frame_lpc(frame, config.lp_order, config.bandwidth_gamma);
    lsfs[k] = lpc_to_lsf(lpc);
    // round to feature-file precision now, so the excitation is extracted
    // with exactly the filters synthesis will rebuild from the stored LSFs
    for (auto& w : lsfs[k].frequencies) w = static_cast<double>(static_cast<float>(w));
    lsf_rows[k] = lsfs[k].frequencies;
  }

  out.frame_lpcs = frame_lpcs_from_features(lsf_rows, layout);
  out.excitation = analysis_filter(waveform.samples, out.frame_lpcs, grid);
  out.prosody = estimate_f0(out.excitation, grid, config.sample_rate_hz,
                            config.f0_params());

  const TfteMatrix tfte = compute_tfte(out.excitation, grid, config.sample_rate_hz,
                                       config.tfte_params());
  const double frame_rate = 1000.0 / config.shift_ms;
  const auto sewrew = decompose_sew_rew(tfte, config.sew_cutoff_hz, frame_rate,
                                        config.sew_dims, config.rew_dims);

  std::vector<SpectralFrame> spectral(num_frames);
  for (std::size_t k = 0; k < num_frames; ++k) {
    spectral[k].lsf = std::move(lsfs[k]);
    spectral[k].prosody = out.prosody[k];
  }
  out.features = assemble(spectral, sewrew, layout);
  return out;
}

std::vector<ManifestEntry> parse_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open manifest " + path.string());

  std::vector<ManifestEntry> entries;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    std::istringstream row(line);
    std::string p, split, extra;
    if (!(row >> p)) continue;  // blank line
    if (!(row >> split) || (row >> extra))
      throw std::runtime_error("manifest line " + std::to_string(line_no) +
                               ": expected '<path> <split>'");
    if (split != "train" && split != "dev" && split != "test")
      throw std::runtime_error("manifest line " + std::to_string(line_no) +
                               ": split must be train/dev/test, got '" + split + "'");
    entries.push_back({std::move(p), std::move(split)});
  }
  return entries;
}

}  // namespace excitnet
