#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <vector>

#include "excitnet/adam.hpp"
#include "excitnet/checkpoint.hpp"
#include "excitnet/net.hpp"
#include "excitnet/rng.hpp"

using namespace excitnet;

namespace {

NetConfig tiny_config(int layers = 2, int channels = 4, int cond = 5) {
  NetConfig cfg;
  cfg.num_blocks = 1;
  cfg.layers_per_block = layers;
  cfg.residual_channels = channels;
  cfg.gate_channels = channels;
  cfg.skip_channels = channels;
  cfg.condition_dim = cond;
  return cfg;
}

template <typename T>
std::vector<T> random_condition(Rng& rng, std::int64_t steps, int dim) {
  std::vector<T> cond(static_cast<std::size_t>(steps * dim));
  for (auto& v : cond) v = static_cast<T>(rng.normal());
  return cond;
}

SymbolSequence random_symbols(Rng& rng, std::int64_t steps) {
  SymbolSequence s(static_cast<std::size_t>(steps));
  for (auto& v : s) v = static_cast<std::uint8_t>(rng.uniform_index(256));
  return s;
}

}  // namespace

TEST_CASE("receptive field formula") {
  CHECK(receptive_field(NetConfig::paper()) == 3070);

  NetConfig one = tiny_config(1);
  CHECK(receptive_field(one) == 2);

  NetConfig three = tiny_config(3);  // dilations 1, 2, 4
  CHECK(receptive_field(three) == 8);
}

TEST_CASE("softmax rows sum to one and nll of uniform logits is ln 256") {
  const NetConfig cfg = tiny_config();
  WaveNet<double> net(cfg);
  Rng rng(201);
  net.init_xavier(rng);

  const std::int64_t steps = 40;
  const auto cond = random_condition<double>(rng, steps, cfg.condition_dim);
  const auto symbols = random_symbols(rng, steps);
  const auto& logits = net.forward(symbols, cond.data(), steps);

  REQUIRE(logits.shape == std::vector<std::int64_t>{steps, 256});
  for (std::int64_t t = 0; t < steps; ++t) {
    const double* row = logits.ptr() + t * 256;
    double max_logit = row[0];
    for (int c = 1; c < 256; ++c) max_logit = std::max(max_logit, row[c]);
    double sum = 0.0;
    for (int c = 0; c < 256; ++c) sum += std::exp(row[c] - max_logit);
    // softmax normalization: probabilities sum to 1
    double total = 0.0;
    for (int c = 0; c < 256; ++c) total += std::exp(row[c] - max_logit) / sum;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-6));
  }

  // uniform logits: loss is exactly ln 256 regardless of targets
  Tensor<double> uniform({steps, 256});
  uniform.fill(3.25);
  CHECK(nll_loss(uniform, symbols) == doctest::Approx(std::log(256.0)).epsilon(1e-12));

  // 2-class toy: logits (ln 3, 0) on the correct class give p = 3/4
  Tensor<double> toy({1, 2});
  toy.data = {std::log(3.0), 0.0};
  SymbolSequence target{0};
  CHECK(nll_loss(toy, target) == doctest::Approx(-std::log(0.75)).epsilon(1e-12));
}

TEST_CASE("network is causal end to end") {
  const NetConfig cfg = tiny_config(3, 6, 4);
  WaveNet<double> net(cfg);
  Rng rng(211);
  net.init_xavier(rng);

  const std::int64_t steps = 64;
  const auto cond = random_condition<double>(rng, steps, cfg.condition_dim);
  auto symbols = random_symbols(rng, steps);

  Tensor<double> base = net.forward(symbols, cond.data(), steps);

  // perturbing the symbol at t changes no logit at t' <= t (input shift:
  // symbol t feeds the network at step t+1)
  const std::int64_t t_perturb = 30;
  auto symbols2 = symbols;
  symbols2[t_perturb] = static_cast<std::uint8_t>((symbols[t_perturb] + 97) % 256);
  Tensor<double> changed = net.forward(symbols2, cond.data(), steps);
  for (std::int64_t t = 0; t <= t_perturb; ++t)
    for (int c = 0; c < 256; ++c)
      CHECK(base.ptr()[t * 256 + c] == changed.ptr()[t * 256 + c]);

  // perturbing the condition at t changes no logit before t
  auto cond2 = cond;
  cond2[static_cast<std::size_t>(t_perturb * cfg.condition_dim) + 1] += 2.5;
  Tensor<double> cond_changed = net.forward(symbols, cond2.data(), steps);
  for (std::int64_t t = 0; t < t_perturb; ++t)
    for (int c = 0; c < 256; ++c)
      CHECK(base.ptr()[t * 256 + c] == cond_changed.ptr()[t * 256 + c]);
}

TEST_CASE("empirical receptive field matches the formula on a 2-block toy") {
  const NetConfig cfg = [] {
    NetConfig c = tiny_config(3, 6, 3);
    c.num_blocks = 2;  // dilations 1,2,4,1,2,4 -> rf = 1 + 14 = 15
    return c;
  }();
  const std::int64_t rf = receptive_field(cfg);
  CHECK(rf == 15);

  WaveNet<double> net(cfg);
  Rng rng(223);
  net.init_xavier(rng);

  const std::int64_t steps = 48;
  const auto cond = random_condition<double>(rng, steps, cfg.condition_dim);
  auto symbols = random_symbols(rng, steps);
  Tensor<double> base = net.forward(symbols, cond.data(), steps);

  const std::int64_t t_out = 40;
  // symbol at t_out - rf is the oldest input that can reach logits[t_out]
  {
    auto s2 = symbols;
    s2[t_out - rf] = static_cast<std::uint8_t>((s2[t_out - rf] + 120) % 256);
    Tensor<double> probe = net.forward(s2, cond.data(), steps);
    double delta = 0.0;
    for (int c = 0; c < 256; ++c)
      delta += std::abs(probe.ptr()[t_out * 256 + c] - base.ptr()[t_out * 256 + c]);
    CHECK(delta > 0.0);
  }
  // one sample older has no path to logits[t_out]
  {
    auto s2 = symbols;
    s2[t_out - rf - 1] = static_cast<std::uint8_t>((s2[t_out - rf - 1] + 120) % 256);
    Tensor<double> probe = net.forward(s2, cond.data(), steps);
    for (int c = 0; c < 256; ++c)
      CHECK(probe.ptr()[t_out * 256 + c] == base.ptr()[t_out * 256 + c]);
  }
}

TEST_CASE("gated block contracts: zero weights and saturated gate") {
  const NetConfig cfg = tiny_config(1, 4, 3);
  WaveNet<float> net(cfg);
  // all parameters zero: z = tanh(0)*sigmoid(0) = 0, skip sum 0, logits 0
  const std::int64_t steps = 16;
  std::vector<float> cond(static_cast<std::size_t>(steps * cfg.condition_dim), 0.5f);
  SymbolSequence symbols(static_cast<std::size_t>(steps), 100);
  const auto& logits = net.forward(symbols, cond.data(), steps);
  for (std::int64_t i = 0; i < logits.numel(); ++i) CHECK(logits.ptr()[i] == 0.0f);

  // saturated-closed gate: large negative gate bias makes z vanish
  WaveNet<double> dnet(cfg);
  Rng rng(227);
  dnet.init_xavier(rng);
  for (auto* p : dnet.parameters()) {
    if (p->name == "layer0.conv.b") {
      const int gate = cfg.gate_channels;
      for (int c = 0; c < gate; ++c) p->value.data[static_cast<std::size_t>(gate + c)] = -40.0;
    }
    if (p->name == "layer0.cond.w") p->value.fill(0.0);
  }
  std::vector<double> dcond(static_cast<std::size_t>(steps * cfg.condition_dim), 0.0);
  dnet.forward(symbols, dcond.data(), steps);
  // with the only layer's gate closed, skip input is zero, so logits collapse
  // to the post-stack constant (bias chain); check against zero-z reference
  WaveNet<double> ref(cfg);
  {
    auto src = dnet.parameters();
    auto dst = ref.parameters();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i]->value = src[i]->value;
    // zero every layer weight so z is structurally zero
    for (auto* p : dst)
      if (p->name.find("conv.w") != std::string::npos) p->value.fill(0.0);
  }
  const auto& a = dnet.logits();
  const auto& b = ref.forward(symbols, dcond.data(), steps);
  for (std::int64_t i = 0; i < a.numel(); ++i)
    CHECK(std::abs(a.ptr()[i] - b.ptr()[i]) < 1e-6);
}

TEST_CASE("analytic gradients match central finite differences") {
  const NetConfig cfg = tiny_config(2, 4, 3);
  WaveNet<double> net(cfg);
  Rng rng(229);
  net.init_xavier(rng);

  const std::int64_t steps = 32;
  const auto cond = random_condition<double>(rng, steps, cfg.condition_dim);
  const auto symbols = random_symbols(rng, steps);

  net.forward(symbols, cond.data(), steps);
  net.zero_grad();
  net.loss_and_backward(symbols, 0);

  const double h = 1e-5;
  double max_rel = 0.0;
  for (auto* p : net.parameters()) {
    // probe all entries of small tensors, a deterministic subset of big ones
    const std::int64_t n = p->value.numel();
    const std::int64_t stride = n <= 64 ? 1 : n / 48;
    for (std::int64_t j = 0; j < n; j += stride) {
      const double saved = p->value.data[static_cast<std::size_t>(j)];
      p->value.data[static_cast<std::size_t>(j)] = saved + h;
      net.forward(symbols, cond.data(), steps);
      const double lp = nll_loss(net.logits(), symbols);
      p->value.data[static_cast<std::size_t>(j)] = saved - h;
      net.forward(symbols, cond.data(), steps);
      const double lm = nll_loss(net.logits(), symbols);
      p->value.data[static_cast<std::size_t>(j)] = saved;

      const double fd = (lp - lm) / (2.0 * h);
      const double an = p->grad.data[static_cast<std::size_t>(j)];
      const double rel = std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-6});
      max_rel = std::max(max_rel, rel);
    }
  }
  CHECK(max_rel < 1e-4);
}

TEST_CASE("gradient of a gate frozen by construction is zero") {
  const NetConfig cfg = tiny_config(1, 4, 3);
  WaveNet<double> net(cfg);
  Rng rng(233);
  net.init_xavier(rng);
  // freeze the gate hard shut; the filter half then has zero gradient
  for (auto* p : net.parameters()) {
    if (p->name == "layer0.conv.b") {
      for (int c = 0; c < cfg.gate_channels; ++c)
        p->value.data[static_cast<std::size_t>(cfg.gate_channels + c)] = -500.0;
    }
    if (p->name == "layer0.cond.w") {
      // zero the gate-half columns so the gate stays saturated
      for (int i = 0; i < cfg.condition_dim; ++i)
        for (int c = 0; c < cfg.gate_channels; ++c)
          p->value.data[static_cast<std::size_t>(i * 2 * cfg.gate_channels +
                                                 cfg.gate_channels + c)] = 0.0;
    }
  }

  const std::int64_t steps = 24;
  const auto cond = random_condition<double>(rng, steps, cfg.condition_dim);
  const auto symbols = random_symbols(rng, steps);
  net.forward(symbols, cond.data(), steps);
  net.zero_grad();
  net.loss_and_backward(symbols, 0);

  for (auto* p : net.parameters()) {
    if (p->name != "layer0.conv.w0") continue;
    // filter-half columns [0, gate) of the conv weights see sigmoid(-500) = 0
    for (int i = 0; i < cfg.residual_channels; ++i)
      for (int c = 0; c < cfg.gate_channels; ++c)
        CHECK(std::abs(p->grad.data[static_cast<std::size_t>(i * 2 * cfg.gate_channels + c)]) < 1e-30);
  }
}

TEST_CASE("zero gradient leaves adam parameters unchanged while moments decay") {
  const NetConfig cfg = tiny_config(1, 4, 3);
  WaveNet<float> net(cfg);
  Rng rng(239);
  net.init_xavier(rng);
  auto params = net.parameters();
  auto adam = AdamState<float>::init(params);

  // seed the moments with one real step
  adam.m[0].fill(0.25f);
  adam.v[0].fill(0.5f);
  net.zero_grad();
  const auto before = params[0]->value.data;
  AdamConfig acfg;
  acfg.learning_rate = 1e-3;
  CHECK(adam_step(params, adam, acfg));
  // m decays by beta1, v by beta2, parameters move by ~0 (m_hat tiny vs sqrt(v_hat))
  CHECK(adam.m[0].data[0] == doctest::Approx(0.225f));
  CHECK(adam.v[0].data[0] == doctest::Approx(0.4995f));
  for (std::size_t i = 0; i < before.size(); ++i)
    CHECK(params[0]->value.data[i] == doctest::Approx(before[i]).epsilon(1e-2));
}

TEST_CASE("adam first step moves a scalar by about the learning rate") {
  const NetConfig cfg = tiny_config(1, 4, 3);
  WaveNet<float> net(cfg);
  auto params = net.parameters();
  auto adam = AdamState<float>::init(params);
  params[0]->grad.fill(1.0f);
  AdamConfig acfg;
  acfg.learning_rate = 0.01;
  CHECK(adam_step(params, adam, acfg));
  // bias-corrected first step: delta = -lr * 1 / (1 + eps)
  CHECK(params[0]->value.data[0] == doctest::Approx(-0.01f).epsilon(1e-4));
}

TEST_CASE("adam skips steps with non-finite gradients") {
  const NetConfig cfg = tiny_config(1, 4, 3);
  WaveNet<float> net(cfg);
  Rng rng(241);
  net.init_xavier(rng);
  auto params = net.parameters();
  auto adam = AdamState<float>::init(params);
  const auto before = params[3]->value.data;
  params[0]->grad.fill(1.0f);
  params[1]->grad.data[2] = std::numeric_limits<float>::quiet_NaN();
  CHECK_FALSE(adam_step(params, adam, AdamConfig{}));
  CHECK(adam.step == 0);
  CHECK(params[3]->value.data == before);
}

TEST_CASE("adam is deterministic across identical runs") {
  const auto run = [] {
    const NetConfig cfg = tiny_config(2, 4, 3);
    WaveNet<float> net(cfg);
    Rng rng(251);
    net.init_xavier(rng);
    auto params = net.parameters();
    auto adam = AdamState<float>::init(params);
    const std::int64_t steps = 24;
    const auto cond = random_condition<float>(rng, steps, cfg.condition_dim);
    const auto symbols = random_symbols(rng, steps);
    AdamConfig acfg;
    acfg.learning_rate = 1e-3;
    for (int it = 0; it < 100; ++it) {
      net.forward(symbols, cond.data(), steps);
      net.zero_grad();
      net.loss_and_backward(symbols, 0);
      adam_step(params, adam, acfg);
    }
    std::vector<float> flat;
    for (auto* p : params)
      flat.insert(flat.end(), p->value.data.begin(), p->value.data.end());
    return flat;
  };
  CHECK(run() == run());
}

TEST_CASE("incremental generation matches the batch forward pass") {
  const NetConfig cfg = tiny_config(3, 8, 5);
  WaveNet<float> net(cfg);
  Rng rng(257);
  net.init_xavier(rng);

  const std::int64_t steps = 200;
  const auto cond = random_condition<float>(rng, steps, cfg.condition_dim);
  const auto symbols = random_symbols(rng, steps);

  // teacher-forced batch logits
  Tensor<float> batch = net.forward(symbols, cond.data(), steps);

  // incremental pass over the same symbol stream
  auto state = net.make_incremental_state();
  std::vector<float> row(256);
  double worst = 0.0;
  for (std::int64_t t = 0; t < steps; ++t) {
    const int prev = t == 0 ? -1 : symbols[static_cast<std::size_t>(t - 1)];
    net.incremental_logits(state, prev, cond.data() + t * cfg.condition_dim, row.data());
    for (int c = 0; c < 256; ++c)
      worst = std::max(worst, std::abs(static_cast<double>(row[static_cast<std::size_t>(c)] -
                                                           batch.ptr()[t * 256 + c])));
  }
  CHECK(worst < 1e-5);
}

TEST_CASE("generation contracts: forced symbol, determinism, seeds") {
  const NetConfig cfg = tiny_config(2, 4, 3);
  WaveNet<float> net(cfg);
  // forced one-hot: huge bias on class 128 in the final projection
  for (auto* p : net.parameters())
    if (p->name == "post2.b") p->value.data[128] = 50.0f;

  const std::int64_t steps = 64;
  std::vector<float> cond(static_cast<std::size_t>(steps * cfg.condition_dim), 0.0f);
  const auto forced = generate(net, cond.data(), steps, 1234);
  for (auto s : forced) CHECK(s == 128);

  // non-degenerate model: same seed reproduces, different seed diverges
  WaveNet<float> live(cfg);
  Rng rng(263);
  live.init_xavier(rng);
  for (auto& v : cond) v = static_cast<float>(rng.normal());
  const auto a = generate(live, cond.data(), steps, 42);
  const auto b = generate(live, cond.data(), steps, 42);
  const auto c = generate(live, cond.data(), steps, 43);
  CHECK(a == b);
  CHECK(a != c);

  // argmax mode is deterministic without a seed effect
  const auto d = generate(live, cond.data(), steps, 1, GenerationMode::kArgmax);
  const auto e = generate(live, cond.data(), steps, 2, GenerationMode::kArgmax);
  CHECK(d == e);
}

TEST_CASE("xavier init variance tracks 2/(fan_in+fan_out)") {
  const NetConfig cfg = tiny_config(2, 16, 8);
  double accum_ratio = 0.0;
  int count = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    WaveNet<float> net(cfg);
    Rng rng(seed);
    net.init_xavier(rng);
    for (auto* p : net.parameters()) {
      if (p->value.shape.size() != 2) continue;
      double fan_in = static_cast<double>(p->value.shape[0]);
      double fan_out = static_cast<double>(p->value.shape[1]);
      if (p->name.find(".conv.w") != std::string::npos) {
        fan_in *= 2;
        fan_out *= 2;
      }
      const double expected = 2.0 / (fan_in + fan_out);
      double var = 0.0;
      for (float v : p->value.data) var += static_cast<double>(v) * v;
      var /= static_cast<double>(p->value.numel());
      accum_ratio += var / expected;
      ++count;
    }
  }
  const double mean_ratio = accum_ratio / count;
  CHECK(mean_ratio > 0.8);
  CHECK(mean_ratio < 1.2);
}

TEST_CASE("checkpoint round trip preserves parameters, moments and metadata") {
  const NetConfig cfg = tiny_config(2, 6, 4);
  WaveNet<float> net(cfg);
  Rng rng(269);
  net.init_xavier(rng);
  auto params = net.parameters();
  auto adam = AdamState<float>::init(params);
  adam.step = 17;
  for (auto& t : adam.m) for (auto& v : t.data) v = static_cast<float>(rng.normal());
  for (auto& t : adam.v) for (auto& v : t.data) v = static_cast<float>(std::abs(rng.normal()));

  Checkpoint meta;
  meta.config = cfg;
  meta.variant = VariantTag::kWnNs;
  meta.step = 4200;
  meta.seed = 99;
  meta.rng_state = {1, 2, 3, 4};
  meta.norm_stats.layout = "test";
  meta.norm_stats.mean = {0.0, 1.0};
  meta.norm_stats.std = {1.0, 2.0};
  LpcCoefficients nsf;
  nsf.a = {0.5, -0.25};
  meta.noise_shaping = nsf;
  meta.best_dev_nll = 3.21;

  const auto path = std::filesystem::temp_directory_path() / "excitnet_ckpt_test.ckpt";
  save_checkpoint(path, meta, net, adam);

  const Checkpoint loaded_meta = load_checkpoint_meta(path);
  CHECK(loaded_meta.variant == VariantTag::kWnNs);
  CHECK(loaded_meta.step == 4200);
  CHECK(loaded_meta.seed == 99);
  CHECK(loaded_meta.rng_state == std::array<std::uint64_t, 4>{1, 2, 3, 4});
  CHECK(loaded_meta.norm_stats.mean == meta.norm_stats.mean);
  REQUIRE(loaded_meta.noise_shaping.has_value());
  CHECK(loaded_meta.noise_shaping->a == nsf.a);
  CHECK(loaded_meta.best_dev_nll == doctest::Approx(3.21));

  WaveNet<float> restored(loaded_meta.config);
  auto restored_params = restored.parameters();
  auto restored_adam = AdamState<float>::init(restored_params);
  load_checkpoint(path, restored, &restored_adam);
  CHECK(restored_adam.step == 17);
  for (std::size_t i = 0; i < params.size(); ++i) {
    CHECK(restored_params[i]->value.data == params[i]->value.data);
    CHECK(restored_adam.m[i].data == adam.m[i].data);
    CHECK(restored_adam.v[i].data == adam.v[i].data);
  }

  // inference-only load reads just the parameter prefix
  WaveNet<float> inference(loaded_meta.config);
  load_checkpoint(path, inference, nullptr);
  auto inf_params = inference.parameters();
  for (std::size_t i = 0; i < params.size(); ++i)
    CHECK(inf_params[i]->value.data == params[i]->value.data);

  std::filesystem::remove(path);
}
