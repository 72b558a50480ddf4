#include "excitnet/conditioning.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace excitnet {

std::string FeatureLayout::describe() const {
  return "lsf:" + std::to_string(lsf_dims) + ",f0:1,vuv:1,gain:1,sew:" +
         std::to_string(sew_dims) + ",rew:" + std::to_string(rew_dims);
}

FeatureMatrix assemble(std::span<const SpectralFrame> spectral,
                       std::span<const SewRewFrame> excitation,
                       const FeatureLayout& layout) {
  if (spectral.size() != excitation.size())
    throw std::invalid_argument("assemble: frame-count mismatch (" +
                                std::to_string(spectral.size()) + " vs " +
                                std::to_string(excitation.size()) + ")");

  FeatureMatrix rows(spectral.size());
  for (std::size_t k = 0; k < spectral.size(); ++k) {
    const auto& sp = spectral[k];
    const auto& ex = excitation[k];
    if (sp.lsf.order() != layout.lsf_dims)
      throw std::invalid_argument("assemble: LSF dimension mismatch");
    if (static_cast<int>(ex.sew.size()) != layout.sew_dims ||
        static_cast<int>(ex.rew.size()) != layout.rew_dims)
      throw std::invalid_argument("assemble: SEW/REW dimension mismatch");

    auto& row = rows[k];
    row.resize(static_cast<std::size_t>(layout.dim()));
    std::copy(sp.lsf.frequencies.begin(), sp.lsf.frequencies.end(), row.begin());
    row[static_cast<std::size_t>(layout.f0_index())] = sp.prosody.voiced ? sp.prosody.f0_hz : 0.0;
    row[static_cast<std::size_t>(layout.vuv_index())] = sp.prosody.voiced ? 1.0 : 0.0;
    row[static_cast<std::size_t>(layout.gain_index())] = sp.prosody.gain_db;
    std::copy(ex.sew.begin(), ex.sew.end(),
              row.begin() + layout.sew_index());
    std::copy(ex.rew.begin(), ex.rew.end(),
              row.begin() + layout.rew_index());
  }
  return rows;
}

NormStats fit_normalizer(const FeatureMatrix& features, const FeatureLayout& layout) {
  if (features.size() < 2)
    throw std::invalid_argument("fit_normalizer: need at least 2 frames");

  const std::size_t dim = features[0].size();
  NormStats stats;
  stats.layout = layout.describe();
  stats.mean.assign(dim, 0.0);
  stats.std.assign(dim, 1.0);

  const double n = static_cast<double>(features.size());
  for (const auto& row : features)
    for (std::size_t d = 0; d < dim; ++d) stats.mean[d] += row[d];
  for (std::size_t d = 0; d < dim; ++d) stats.mean[d] /= n;

  std::vector<double> var(dim, 0.0);
  for (const auto& row : features)
    for (std::size_t d = 0; d < dim; ++d) {
      const double delta = row[d] - stats.mean[d];
      var[d] += delta * delta;
    }
  for (std::size_t d = 0; d < dim; ++d)
    stats.std[d] = std::max(std::sqrt(var[d] / n), 1e-6);

  // binary flag passes through untouched
  const std::size_t vuv = static_cast<std::size_t>(layout.vuv_index());
  if (vuv < dim) {
    stats.mean[vuv] = 0.0;
    stats.std[vuv] = 1.0;
  }
  return stats;
}

void normalize_rows(FeatureMatrix& features, const NormStats& stats) {
  for (auto& row : features) {
    if (row.size() != stats.mean.size())
      throw std::invalid_argument("normalize_rows: dimension mismatch");
    for (std::size_t d = 0; d < row.size(); ++d)
      row[d] = (row[d] - stats.mean[d]) / stats.std[d];
  }
}

void denormalize_rows(FeatureMatrix& features, const NormStats& stats) {
  for (auto& row : features) {
    if (row.size() != stats.mean.size())
      throw std::invalid_argument("denormalize_rows: dimension mismatch");
    for (std::size_t d = 0; d < row.size(); ++d)
      row[d] = row[d] * stats.std[d] + stats.mean[d];
  }
}

std::vector<float> upsample(const FeatureMatrix& frames, const FrameGrid& grid,
                            std::size_t num_samples) {
  if (frames.empty()) throw std::invalid_argument("upsample: no frames");
  const std::size_t shift = static_cast<std::size_t>(grid.frame_shift);
  if (num_samples > frames.size() * shift)
    throw std::invalid_argument("upsample: not enough frames for requested length");

  const std::size_t dim = frames[0].size();
  std::vector<float> out(num_samples * dim);
  for (std::size_t t = 0; t < num_samples; ++t) {
    const auto& row = frames[t / shift];
    float* dst = out.data() + t * dim;
    for (std::size_t d = 0; d < dim; ++d) dst[d] = static_cast<float>(row[d]);
  }
  return out;
}

namespace {

void put_u32le(std::ofstream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32le(std::ifstream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw std::runtime_error("feature file truncated");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

void write_feature_file(const std::filesystem::path& path, const FeatureMatrix& rows) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("write_feature_file: cannot open " + path.string());

  const std::uint32_t count = static_cast<std::uint32_t>(rows.size());
  const std::uint32_t dim = rows.empty() ? 0 : static_cast<std::uint32_t>(rows[0].size());
  out.write("EXCF", 4);
  put_u32le(out, kFeatureFileVersion);
  put_u32le(out, count);
  put_u32le(out, dim);

  std::vector<float> buffer(dim);
  for (const auto& row : rows) {
    if (row.size() != dim)
      throw std::invalid_argument("write_feature_file: ragged rows");
    for (std::size_t d = 0; d < dim; ++d) buffer[d] = static_cast<float>(row[d]);
    out.write(reinterpret_cast<const char*>(buffer.data()),
              static_cast<std::streamsize>(sizeof(float) * dim));
  }
  if (!out) throw std::runtime_error("write_feature_file: write failed for " + path.string());
}

FeatureMatrix read_feature_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_feature_file: cannot open " + path.string());

  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "EXCF", 4) != 0)
    throw std::runtime_error("read_feature_file: bad magic in " + path.string());
  const std::uint32_t version = get_u32le(in);
  if (version != kFeatureFileVersion)
    throw std::runtime_error("read_feature_file: unsupported version " +
                             std::to_string(version));
  const std::uint32_t count = get_u32le(in);
  const std::uint32_t dim = get_u32le(in);

  FeatureMatrix rows(count);
  std::vector<float> buffer(dim);
  for (std::uint32_t k = 0; k < count; ++k) {
    in.read(reinterpret_cast<char*>(buffer.data()),
            static_cast<std::streamsize>(sizeof(float) * dim));
    if (!in) throw std::runtime_error("read_feature_file: truncated " + path.string());
    rows[k].assign(buffer.begin(), buffer.end());
  }
  return rows;
}

void save_norm_stats(const std::filesystem::path& path, const NormStats& stats) {
  nlohmann::json doc;
  doc["layout"] = stats.layout;
  doc["mean"] = stats.mean;
  doc["std"] = stats.std;
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("save_norm_stats: cannot open " + path.string());
  out << doc.dump(2) << '\n';
}

NormStats load_norm_stats(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_norm_stats: cannot open " + path.string());
  nlohmann::json doc = nlohmann::json::parse(in);
  NormStats stats;
  stats.layout = doc.at("layout").get<std::string>();
  stats.mean = doc.at("mean").get<std::vector<double>>();
  stats.std = doc.at("std").get<std::vector<double>>();
  if (stats.mean.size() != stats.std.size())
    throw std::runtime_error("load_norm_stats: mean/std size mismatch");
  return stats;
}

}  // namespace excitnet
