#include "excitnet/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "excitnet/fft.hpp"

namespace excitnet {

std::vector<double> lsd_per_frame(const Waveform& reference, const Waveform& test,
                                  const FrameGrid& grid, const MetricParams& params) {
  const std::size_t n = std::min(reference.samples.size(), test.samples.size());
  const std::size_t longer = std::max(reference.samples.size(), test.samples.size());
  if (longer - n > static_cast<std::size_t>(grid.frame_length))
    throw std::invalid_argument("lsd: length mismatch exceeds one frame (" +
                                std::to_string(reference.samples.size()) + " vs " +
                                std::to_string(test.samples.size()) + ")");
  if (n == 0) throw std::invalid_argument("lsd: empty signals");

  const std::size_t count = grid.num_frames(n);
  const std::vector<double> window = hann_window(grid.frame_length);
  const std::size_t bins = static_cast<std::size_t>(params.fft_size / 2 + 1);
  std::vector<double> per_frame(count, 0.0);

  #pragma omp parallel for schedule(static)
  for (std::size_t k = 0; k < count; ++k) {
    std::vector<double> fa(static_cast<std::size_t>(grid.frame_length), 0.0);
    std::vector<double> fb(static_cast<std::size_t>(grid.frame_length), 0.0);
    const std::size_t start = k * static_cast<std::size_t>(grid.frame_shift);
    for (int i = 0; i < grid.frame_length; ++i) {
      const std::size_t t = start + static_cast<std::size_t>(i);
      if (t < n) {
        fa[static_cast<std::size_t>(i)] = reference.samples[t] * window[static_cast<std::size_t>(i)];
        fb[static_cast<std::size_t>(i)] = test.samples[t] * window[static_cast<std::size_t>(i)];
      }
    }
    const auto ma = magnitude_spectrum(fa, params.fft_size);
    const auto mb = magnitude_spectrum(fb, params.fft_size);
    double acc = 0.0;
    for (std::size_t b = 0; b < bins; ++b) {
      // subtract before scaling so identical spectra cancel exactly
      const double diff =
          20.0 * (std::log10(ma[b] + params.eps) - std::log10(mb[b] + params.eps));
      acc += diff * diff;
    }
    per_frame[k] = std::sqrt(acc / static_cast<double>(bins));
  }
  return per_frame;
}

double lsd(const Waveform& reference, const Waveform& test, const FrameGrid& grid,
           const MetricParams& params) {
  const auto per_frame = lsd_per_frame(reference, test, grid, params);
  double total = 0.0;
  for (double v : per_frame) total += v;
  return total / static_cast<double>(per_frame.size());
}

namespace {

std::vector<bool> uv_transition_mask(std::span<const ProsodyFrame> prosody) {
  const std::size_t n = prosody.size();
  std::vector<bool> mask(n, false);
  for (std::size_t k = 0; k < n; ++k) {
    if (!prosody[k].voiced) {
      mask[k] = true;
      continue;
    }
    // transition: voicing differs from either neighbor
    const bool differs_prev = k > 0 && prosody[k - 1].voiced != prosody[k].voiced;
    const bool differs_next = k + 1 < n && prosody[k + 1].voiced != prosody[k].voiced;
    if (differs_prev || differs_next) mask[k] = true;
  }
  return mask;
}

}  // namespace

RegionLsd lsd_by_region(const Waveform& reference, const Waveform& test,
                        std::span<const ProsodyFrame> prosody, const FrameGrid& grid,
                        const MetricParams& params) {
  const auto per_frame = lsd_per_frame(reference, test, grid, params);
  if (prosody.size() != per_frame.size())
    throw std::invalid_argument("lsd_by_region: prosody not aligned to frame grid (" +
                                std::to_string(prosody.size()) + " vs " +
                                std::to_string(per_frame.size()) + ")");

  const auto mask = uv_transition_mask(prosody);
  double voiced_sum = 0.0, uvt_sum = 0.0;
  RegionLsd out;
  for (std::size_t k = 0; k < per_frame.size(); ++k) {
    if (mask[k]) {
      uvt_sum += per_frame[k];
      ++out.uv_transition_frames;
    } else {
      voiced_sum += per_frame[k];
      ++out.voiced_frames;
    }
  }
  if (out.voiced_frames > 0)
    out.voiced_db = voiced_sum / static_cast<double>(out.voiced_frames);
  if (out.uv_transition_frames > 0)
    out.uv_transition_db = uvt_sum / static_cast<double>(out.uv_transition_frames);
  return out;
}

F0Rmse f0_rmse(std::span<const ProsodyFrame> reference,
               std::span<const ProsodyFrame> test) {
  const std::size_t n = std::min(reference.size(), test.size());
  F0Rmse out;
  double acc = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    if (!reference[k].voiced || !test[k].voiced) continue;
    const double d = reference[k].f0_hz - test[k].f0_hz;
    acc += d * d;
    ++out.compared_frames;
  }
  if (out.compared_frames > 0)
    out.rmse_hz = std::sqrt(acc / static_cast<double>(out.compared_frames));
  return out;
}

EvalReport evaluate_pair(const std::string& name, const Waveform& reference,
                         const Waveform& test, const FrameGrid& grid,
                         const F0Params& f0_params, const MetricParams& params) {
  EvalReport report;
  report.name = name;

  const auto per_frame = lsd_per_frame(reference, test, grid, params);
  report.frames_total = per_frame.size();
  double total = 0.0;
  for (double v : per_frame) total += v;
  report.lsd_db = total / static_cast<double>(per_frame.size());

  const std::size_t n = std::min(reference.samples.size(), test.samples.size());
  std::vector<double> ref_trimmed(reference.samples.begin(),
                                  reference.samples.begin() + static_cast<std::ptrdiff_t>(n));
  const auto ref_prosody = estimate_f0(ref_trimmed, grid, reference.sample_rate_hz, f0_params);
  std::vector<double> test_trimmed(test.samples.begin(),
                                   test.samples.begin() + static_cast<std::ptrdiff_t>(n));
  const auto test_prosody = estimate_f0(test_trimmed, grid, test.sample_rate_hz, f0_params);

  const RegionLsd regions = lsd_by_region(reference, test, ref_prosody, grid, params);
  report.lsd_voiced_db = regions.voiced_db;
  report.lsd_uv_transition_db = regions.uv_transition_db;
  report.frames_voiced_region = regions.voiced_frames;
  report.frames_uv_transition = regions.uv_transition_frames;

  const F0Rmse f0 = f0_rmse(ref_prosody, test_prosody);
  report.f0_rmse_hz = f0.rmse_hz;
  report.frames_f0_compared = f0.compared_frames;
  return report;
}

EvalReport aggregate_reports(std::span<const EvalReport> reports) {
  EvalReport agg;
  agg.name = "aggregate";
  double lsd_sum = 0.0, voiced_sum = 0.0, uvt_sum = 0.0, f0_sum = 0.0;
  for (const auto& r : reports) {
    agg.frames_total += r.frames_total;
    lsd_sum += r.lsd_db * static_cast<double>(r.frames_total);
    if (r.lsd_voiced_db) {
      voiced_sum += *r.lsd_voiced_db * static_cast<double>(r.frames_voiced_region);
      agg.frames_voiced_region += r.frames_voiced_region;
    }
    if (r.lsd_uv_transition_db) {
      uvt_sum += *r.lsd_uv_transition_db * static_cast<double>(r.frames_uv_transition);
      agg.frames_uv_transition += r.frames_uv_transition;
    }
    if (r.f0_rmse_hz) {
      f0_sum += *r.f0_rmse_hz * static_cast<double>(r.frames_f0_compared);
      agg.frames_f0_compared += r.frames_f0_compared;
    }
  }
  if (agg.frames_total > 0) agg.lsd_db = lsd_sum / static_cast<double>(agg.frames_total);
  if (agg.frames_voiced_region > 0)
    agg.lsd_voiced_db = voiced_sum / static_cast<double>(agg.frames_voiced_region);
  if (agg.frames_uv_transition > 0)
    agg.lsd_uv_transition_db = uvt_sum / static_cast<double>(agg.frames_uv_transition);
  if (agg.frames_f0_compared > 0)
    agg.f0_rmse_hz = f0_sum / static_cast<double>(agg.frames_f0_compared);
  return agg;
}

namespace {

nlohmann::json report_to_json(const EvalReport& r) {
  nlohmann::json j;
  j["name"] = r.name;
  j["lsd_db"] = r.lsd_db;
  if (r.lsd_voiced_db) j["lsd_voiced_db"] = *r.lsd_voiced_db;
  if (r.lsd_uv_transition_db) j["lsd_uv_transition_db"] = *r.lsd_uv_transition_db;
  if (r.f0_rmse_hz) j["f0_rmse_hz"] = *r.f0_rmse_hz;
  j["frames_total"] = r.frames_total;
  j["frames_voiced_region"] = r.frames_voiced_region;
  j["frames_uv_transition"] = r.frames_uv_transition;
  j["frames_f0_compared"] = r.frames_f0_compared;
  return j;
}

std::string opt_to_string(const std::optional<double>& v) {
  if (!v) return "-";
  std::ostringstream os;
  os << std::fixed << std::setprecision(3) << *v;
  return os.str();
}

}  // namespace

void write_report_json(const std::filesystem::path& path,
                       std::span<const EvalReport> reports,
                       const EvalReport& aggregate,
                       std::span<const std::string> unmatched) {
  nlohmann::json doc;
  doc["utterances"] = nlohmann::json::array();
  for (const auto& r : reports) doc["utterances"].push_back(report_to_json(r));
  doc["aggregate"] = report_to_json(aggregate);
  doc["unmatched"] = std::vector<std::string>(unmatched.begin(), unmatched.end());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("write_report_json: cannot open " + path.string());
  out << doc.dump(2) << '\n';
}

std::string format_report_table(std::span<const EvalReport> reports,
                                const EvalReport& aggregate) {
  std::ostringstream os;
  os << std::left << std::setw(24) << "utterance" << std::right << std::setw(10)
     << "LSD(dB)" << std::setw(14) << "uv/tr(dB)" << std::setw(14) << "F0RMSE(Hz)"
     << std::setw(10) << "frames" << '\n';
  os << std::string(72, '-') << '\n';
  const auto row = [&os](const EvalReport& r) {
    os << std::left << std::setw(24) << r.name << std::right << std::setw(10)
       << std::fixed << std::setprecision(3) << r.lsd_db << std::setw(14)
       << opt_to_string(r.lsd_uv_transition_db) << std::setw(14)
       << opt_to_string(r.f0_rmse_hz) << std::setw(10) << r.frames_total << '\n';
  };
  for (const auto& r : reports) row(r);
  os << std::string(72, '-') << '\n';
  row(aggregate);
  return os.str();
}

}  // namespace excitnet
