#include "excitnet/config.hpp"

#include <charconv>
#include <iomanip>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

namespace excitnet {

NetConfig RunConfig::net_config() const {
  NetConfig cfg;
  if (net_preset == "paper") {
    cfg = NetConfig::paper();
  } else if (net_preset == "desk") {
    cfg = NetConfig::desk();
  } else {
    throw std::invalid_argument("net preset must be 'paper' or 'desk', got '" +
                                net_preset + "'");
  }
  if (net_blocks > 0) cfg.num_blocks = net_blocks;
  if (net_layers_per_block > 0) cfg.layers_per_block = net_layers_per_block;
  if (net_residual_channels > 0) cfg.residual_channels = net_residual_channels;
  if (net_gate_channels > 0) cfg.gate_channels = net_gate_channels;
  if (net_skip_channels > 0) cfg.skip_channels = net_skip_channels;
  cfg.condition_dim = layout().dim();
  return cfg;
}

TrainConfig RunConfig::train_config() const {
  TrainConfig cfg;
  cfg.learning_rate = learning_rate;
  cfg.batch_size_samples = batch_size_samples;
  cfg.adam_beta1 = adam_beta1;
  cfg.adam_beta2 = adam_beta2;
  cfg.adam_eps = adam_eps;
  cfg.max_steps = max_steps;
  cfg.seed = seed;
  cfg.eval_interval = eval_interval;
  cfg.zero_sew_rew = zero_sew_rew;
  cfg.mu = mu;
  return cfg;
}

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

struct Field {
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <typename T>
T parse_number(const std::string& raw, const std::string& key) {
  std::istringstream in(raw);
  T value{};
  in >> value;
  if (in.fail() || !(in >> std::ws).eof())
    throw std::invalid_argument("config: bad numeric value for " + key + ": '" + raw + "'");
  return value;
}

bool parse_bool(const std::string& raw, const std::string& key) {
  if (raw == "true") return true;
  if (raw == "false") return false;
  throw std::invalid_argument("config: bad boolean for " + key + ": '" + raw + "'");
}

std::string parse_string(const std::string& raw, const std::string& key) {
  if (raw.size() >= 2 && raw.front() == '"' && raw.back() == '"')
    return raw.substr(1, raw.size() - 2);
  throw std::invalid_argument("config: string value for " + key + " must be quoted");
}

std::string quote(const std::string& s) { return '"' + s + '"'; }

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);  // shortest round trip
  std::string s(buf, res.ptr);
  if (s.find('.') == std::string::npos && s.find('e') == std::string::npos)
    s += ".0";
  return s;
}

const std::map<std::string, Field>& field_registry() {
  static const std::map<std::string, Field> registry = [] {
    std::map<std::string, Field> r;
    auto add_int = [&r](const std::string& key, auto member) {
      r[key] = Field{[member, key](RunConfig& c, const std::string& v) {
                       c.*member = parse_number<std::remove_reference_t<decltype(std::declval<RunConfig>().*member)>>(v, key);
                     },
                     [member](const RunConfig& c) { return std::to_string(c.*member); }};
    };
    auto add_double = [&r](const std::string& key, auto member) {
      r[key] = Field{[member, key](RunConfig& c, const std::string& v) {
                       c.*member = parse_number<double>(v, key);
                     },
                     [member](const RunConfig& c) { return format_double(c.*member); }};
    };
    auto add_bool = [&r](const std::string& key, auto member) {
      r[key] = Field{[member, key](RunConfig& c, const std::string& v) {
                       c.*member = parse_bool(v, key);
                     },
                     [member](const RunConfig& c) { return (c.*member) ? "true" : "false"; }};
    };
    auto add_string = [&r](const std::string& key, auto member) {
      r[key] = Field{[member, key](RunConfig& c, const std::string& v) {
                       c.*member = parse_string(v, key);
                     },
                     [member](const RunConfig& c) { return quote(c.*member); }};
    };

    add_int("seed", &RunConfig::seed);
    add_int("audio.sample_rate_hz", &RunConfig::sample_rate_hz);
    add_int("audio.mu", &RunConfig::mu);
    add_double("framing.frame_ms", &RunConfig::frame_ms);
    add_double("framing.shift_ms", &RunConfig::shift_ms);
    add_int("lp.order", &RunConfig::lp_order);
    add_double("lp.bandwidth_gamma", &RunConfig::bandwidth_gamma);
    add_int("features.sew_dims", &RunConfig::sew_dims);
    add_int("features.rew_dims", &RunConfig::rew_dims);
    add_int("features.tfte_bands", &RunConfig::tfte_bands);
    add_int("features.fft_size", &RunConfig::fft_size);
    add_double("features.f0_min_hz", &RunConfig::f0_min_hz);
    add_double("features.f0_max_hz", &RunConfig::f0_max_hz);
    add_double("features.voicing_threshold", &RunConfig::voicing_threshold);
    add_double("features.sew_cutoff_hz", &RunConfig::sew_cutoff_hz);
    add_string("net.preset", &RunConfig::net_preset);
    add_int("net.blocks", &RunConfig::net_blocks);
    add_int("net.layers_per_block", &RunConfig::net_layers_per_block);
    add_int("net.residual_channels", &RunConfig::net_residual_channels);
    add_int("net.gate_channels", &RunConfig::net_gate_channels);
    add_int("net.skip_channels", &RunConfig::net_skip_channels);
    add_double("train.learning_rate", &RunConfig::learning_rate);
    add_int("train.batch_size_samples", &RunConfig::batch_size_samples);
    add_double("train.adam_beta1", &RunConfig::adam_beta1);
    add_double("train.adam_beta2", &RunConfig::adam_beta2);
    add_double("train.adam_eps", &RunConfig::adam_eps);
    add_int("train.max_steps", &RunConfig::max_steps);
    add_int("train.eval_interval", &RunConfig::eval_interval);
    add_bool("train.zero_sew_rew", &RunConfig::zero_sew_rew);
    add_string("paths.wav_dir", &RunConfig::wav_dir);
    add_string("paths.feature_dir", &RunConfig::feature_dir);
    add_string("paths.out_dir", &RunConfig::out_dir);
    add_string("paths.manifest", &RunConfig::manifest);
    return r;
  }();
  return registry;
}

}  // namespace

RunConfig parse_run_config_text(const std::string& text) {
  RunConfig config;
  const auto& registry = field_registry();

  std::istringstream in(text);
  std::string line;
  std::string section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']')
        throw std::invalid_argument("config line " + std::to_string(line_no) +
                                    ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(line_no) +
                                  ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const std::string full_key = section.empty() ? key : section + "." + key;

    const auto it = registry.find(full_key);
    if (it == registry.end())
      throw std::invalid_argument("config line " + std::to_string(line_no) +
                                  ": unknown key '" + full_key + "'");
    it->second.set(config, value);
  }
  return config;
}

RunConfig parse_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_run_config_text(buffer.str());
}

std::string dump_run_config(const RunConfig& config) {
  const auto& registry = field_registry();
  std::ostringstream os;
  os << "# excitnet run configuration\n";

  auto emit = [&](const std::string& key) {
    const auto dot = key.find('.');
    os << key.substr(dot == std::string::npos ? 0 : dot + 1) << " = "
       << registry.at(key).get(config) << '\n';
  };

  emit("seed");
  os << "\n[audio]\n";
  emit("audio.sample_rate_hz");
  emit("audio.mu");
  os << "\n[framing]\n";
  emit("framing.frame_ms");
  emit("framing.shift_ms");
  os << "\n[lp]\n";
  emit("lp.order");
  emit("lp.bandwidth_gamma");
  os << "\n[features]\n";
  emit("features.sew_dims");
  emit("features.rew_dims");
  emit("features.tfte_bands");
  emit("features.fft_size");
  emit("features.f0_min_hz");
  emit("features.f0_max_hz");
  emit("features.voicing_threshold");
  emit("features.sew_cutoff_hz");
  os << "\n[net]\n";
  os << "# preset paper|desk; positive values below override preset fields\n";
  emit("net.preset");
  emit("net.blocks");
  emit("net.layers_per_block");
  emit("net.residual_channels");
  emit("net.gate_channels");
  emit("net.skip_channels");
  os << "\n[train]\n";
  emit("train.learning_rate");
  emit("train.batch_size_samples");
  emit("train.adam_beta1");
  emit("train.adam_beta2");
  emit("train.adam_eps");
  emit("train.max_steps");
  emit("train.eval_interval");
  emit("train.zero_sew_rew");
  os << "\n[paths]\n";
  emit("paths.wav_dir");
  emit("paths.feature_dir");
  emit("paths.out_dir");
  emit("paths.manifest");
  return os.str();
}

}  // namespace excitnet
