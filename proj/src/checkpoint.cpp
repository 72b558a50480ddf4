#include "excitnet/checkpoint.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace excitnet {

using nlohmann::json;

std::string variant_name(VariantTag tag) {
  switch (tag) {
    case VariantTag::kWn: return "WN";
    case VariantTag::kWnNs: return "WN-NS";
    case VariantTag::kExcitnet: return "ExcitNet";
  }
  throw std::logic_error("variant_name: bad tag");
}

VariantTag variant_from_name(const std::string& name) {
  if (name == "WN" || name == "wn") return VariantTag::kWn;
  if (name == "WN-NS" || name == "wn-ns" || name == "WN_NS") return VariantTag::kWnNs;
  if (name == "ExcitNet" || name == "excitnet" || name == "EXCITNET")
    return VariantTag::kExcitnet;
  throw std::invalid_argument("unknown vocoder variant: " + name);
}

namespace {

json config_to_json(const NetConfig& cfg) {
  return json{{"num_blocks", cfg.num_blocks},
              {"layers_per_block", cfg.layers_per_block},
              {"dilation_base", cfg.dilation_base},
              {"residual_channels", cfg.residual_channels},
              {"gate_channels", cfg.gate_channels},
              {"skip_channels", cfg.skip_channels},
              {"post_channels", cfg.post_channels},
              {"output_classes", cfg.output_classes},
              {"condition_dim", cfg.condition_dim},
              {"kernel_size", cfg.kernel_size}};
}

NetConfig config_from_json(const json& j) {
  NetConfig cfg;
  cfg.num_blocks = j.at("num_blocks").get<int>();
  cfg.layers_per_block = j.at("layers_per_block").get<int>();
  cfg.dilation_base = j.at("dilation_base").get<int>();
  cfg.residual_channels = j.at("residual_channels").get<int>();
  cfg.gate_channels = j.at("gate_channels").get<int>();
  cfg.skip_channels = j.at("skip_channels").get<int>();
  cfg.post_channels = j.at("post_channels").get<int>();
  cfg.output_classes = j.at("output_classes").get<int>();
  cfg.condition_dim = j.at("condition_dim").get<int>();
  cfg.kernel_size = j.at("kernel_size").get<int>();
  return cfg;
}

struct BlobEntry {
  std::string name;
  const Tensor<float>* tensor;
};

std::vector<BlobEntry> blob_entries(WaveNet<float>& net, const AdamState<float>* adam) {
  std::vector<BlobEntry> entries;
  auto params = net.parameters();
  for (const auto* p : params) entries.push_back({p->name, &p->value});
  if (adam) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      entries.push_back({"adam.m." + params[i]->name, &adam->m[i]});
      entries.push_back({"adam.v." + params[i]->name, &adam->v[i]});
    }
  }
  return entries;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& meta,
                     WaveNet<float>& net, const AdamState<float>& adam) {
  const auto entries = blob_entries(net, &adam);

  json manifest = json::array();
  std::uint64_t offset = 0;
  for (const auto& e : entries) {
    json item;
    item["name"] = e.name;
    item["shape"] = e.tensor->shape;
    item["offset"] = offset;
    item["dtype"] = "f32";
    manifest.push_back(item);
    offset += static_cast<std::uint64_t>(e.tensor->numel()) * sizeof(float);
  }

  json header;
  header["format"] = "excitnet-checkpoint";
  header["version"] = kCheckpointVersion;
  header["variant"] = variant_name(meta.variant);
  header["config"] = config_to_json(meta.config);
  header["step"] = meta.step;
  header["seed"] = meta.seed;
  header["rng_state"] = meta.rng_state;
  header["adam_step"] = adam.step;
  // JSON has no infinity; an untrained best marker becomes a large sentinel
  header["best_dev_nll"] = std::isfinite(meta.best_dev_nll) ? meta.best_dev_nll : 1e30;
  header["zero_sew_rew"] = meta.zero_sew_rew;
  header["norm_stats"] = {{"layout", meta.norm_stats.layout},
                          {"mean", meta.norm_stats.mean},
                          {"std", meta.norm_stats.std}};
  if (meta.noise_shaping) header["noise_shaping"] = meta.noise_shaping->a;
  header["tensors"] = manifest;

  const std::string header_text = header.dump();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("save_checkpoint: cannot open " + path.string());
  out.write("EXCK", 4);
  const std::uint32_t len = static_cast<std::uint32_t>(header_text.size());
  const unsigned char lb[4] = {static_cast<unsigned char>(len & 0xff),
                               static_cast<unsigned char>((len >> 8) & 0xff),
                               static_cast<unsigned char>((len >> 16) & 0xff),
                               static_cast<unsigned char>((len >> 24) & 0xff)};
  out.write(reinterpret_cast<const char*>(lb), 4);
  out.write(header_text.data(), static_cast<std::streamsize>(header_text.size()));
  for (const auto& e : entries)
    out.write(reinterpret_cast<const char*>(e.tensor->ptr()),
              static_cast<std::streamsize>(e.tensor->numel() * sizeof(float)));
  if (!out) throw std::runtime_error("save_checkpoint: write failed for " + path.string());
}

namespace {

json read_header(std::ifstream& in, const std::filesystem::path& path) {
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "EXCK", 4) != 0)
    throw std::runtime_error("checkpoint: bad magic in " + path.string());
  unsigned char lb[4];
  in.read(reinterpret_cast<char*>(lb), 4);
  if (!in) throw std::runtime_error("checkpoint: truncated header length");
  const std::uint32_t len = static_cast<std::uint32_t>(lb[0]) |
                            (static_cast<std::uint32_t>(lb[1]) << 8) |
                            (static_cast<std::uint32_t>(lb[2]) << 16) |
                            (static_cast<std::uint32_t>(lb[3]) << 24);
  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  if (!in) throw std::runtime_error("checkpoint: truncated header");
  return json::parse(text);
}

Checkpoint meta_from_header(const json& header) {
  if (header.at("version").get<std::uint32_t>() != kCheckpointVersion)
    throw std::runtime_error("checkpoint: unsupported version");
  Checkpoint meta;
  meta.config = config_from_json(header.at("config"));
  meta.variant = variant_from_name(header.at("variant").get<std::string>());
  meta.step = header.at("step").get<std::int64_t>();
  meta.seed = header.at("seed").get<std::uint64_t>();
  const auto rng = header.at("rng_state").get<std::vector<std::uint64_t>>();
  if (rng.size() != 4) throw std::runtime_error("checkpoint: bad rng state");
  std::copy(rng.begin(), rng.end(), meta.rng_state.begin());
  meta.best_dev_nll = header.at("best_dev_nll").get<double>();
  meta.zero_sew_rew = header.value("zero_sew_rew", false);
  const auto& stats = header.at("norm_stats");
  meta.norm_stats.layout = stats.at("layout").get<std::string>();
  meta.norm_stats.mean = stats.at("mean").get<std::vector<double>>();
  meta.norm_stats.std = stats.at("std").get<std::vector<double>>();
  if (header.contains("noise_shaping")) {
    LpcCoefficients nsf;
    nsf.a = header.at("noise_shaping").get<std::vector<double>>();
    meta.noise_shaping = std::move(nsf);
  }
  return meta;
}

}  // namespace

Checkpoint load_checkpoint_meta(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path.string());
  return meta_from_header(read_header(in, path));
}

Checkpoint load_checkpoint(const std::filesystem::path& path, WaveNet<float>& net,
                           AdamState<float>* adam) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path.string());
  const json header = read_header(in, path);
  Checkpoint meta = meta_from_header(header);

  const std::streampos blob_start = in.tellg();
  // parameter tensors come first in the manifest; optimizer moments follow,
  // so an inference-only load (adam == nullptr) just reads the prefix
  auto entries = blob_entries(net, adam);
  const auto& manifest = header.at("tensors");
  if (manifest.size() < entries.size())
    throw std::runtime_error("load_checkpoint: tensor manifest mismatch (" +
                             std::to_string(manifest.size()) + " vs " +
                             std::to_string(entries.size()) + ")");

  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& item = manifest[i];
    if (item.at("name").get<std::string>() != entries[i].name)
      throw std::runtime_error("load_checkpoint: unexpected tensor " +
                               item.at("name").get<std::string>());
    const auto shape = item.at("shape").get<std::vector<std::int64_t>>();
    if (shape != entries[i].tensor->shape)
      throw std::runtime_error("load_checkpoint: shape mismatch at " + entries[i].name);
    const std::uint64_t offset = item.at("offset").get<std::uint64_t>();
    in.seekg(blob_start + static_cast<std::streamoff>(offset));
    auto* tensor = const_cast<Tensor<float>*>(entries[i].tensor);
    in.read(reinterpret_cast<char*>(tensor->ptr()),
            static_cast<std::streamsize>(tensor->numel() * sizeof(float)));
    if (!in) throw std::runtime_error("load_checkpoint: truncated blob at " + entries[i].name);
  }

  if (adam) adam->step = header.at("adam_step").get<std::int64_t>();
  return meta;
}

}  // namespace excitnet
