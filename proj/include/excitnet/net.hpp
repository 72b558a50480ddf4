#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "excitnet/kernels.hpp"
#include "excitnet/mulaw.hpp"
#include "excitnet/rng.hpp"
#include "excitnet/tensor.hpp"

namespace excitnet {

struct NetConfig {
  int num_blocks = 3;
  int layers_per_block = 10;
  int dilation_base = 2;
  int residual_channels = 512;
  int gate_channels = 512;
  int skip_channels = 256;
  int post_channels = 256;  // 1x1 width between the skip sum and the softmax
  int output_classes = 256;
  int condition_dim = 79;
  int kernel_size = 2;

  // dilations 1, 2, 4, ..., 512 in each of three 512-channel blocks
  static NetConfig paper() { return NetConfig{}; }

  // small enough to train on a CPU in minutes
  static NetConfig desk() {
    NetConfig cfg;
    cfg.num_blocks = 2;
    cfg.layers_per_block = 6;
    cfg.residual_channels = 64;
    cfg.gate_channels = 64;
    cfg.skip_channels = 64;
    return cfg;
  }

  std::vector<int> dilations() const {
    std::vector<int> d;
    d.reserve(static_cast<std::size_t>(num_blocks) * layers_per_block);
    for (int b = 0; b < num_blocks; ++b) {
      int dilation = 1;
      for (int l = 0; l < layers_per_block; ++l) {
        d.push_back(dilation);
        dilation *= dilation_base;
      }
    }
    return d;
  }
};

// 1 + num_blocks * (kernel_size - 1) * Σ dilations-per-block
inline std::int64_t receptive_field(const NetConfig& cfg) {
  std::int64_t rf = 1;
  for (int d : cfg.dilations()) rf += static_cast<std::int64_t>(cfg.kernel_size - 1) * d;
  return rf;
}

// mean over time of -log softmax(logits_t)[target_t], in nats, over
// t >= loss_start
template <typename T>
double nll_loss(const Tensor<T>& logits, std::span<const std::uint8_t> targets,
                std::int64_t loss_start = 0) {
  if (logits.shape.size() != 2)
    throw std::invalid_argument("nll_loss: logits must be 2-D");
  const std::int64_t steps = logits.shape[0];
  const int classes = static_cast<int>(logits.shape[1]);
  if (static_cast<std::int64_t>(targets.size()) != steps)
    throw std::invalid_argument("nll_loss: target length mismatch");
  if (loss_start < 0 || loss_start >= steps)
    throw std::invalid_argument("nll_loss: bad loss_start");

  double total = 0.0;
  for (std::int64_t t = loss_start; t < steps; ++t) {
    const T* row = logits.ptr() + t * classes;
    T max_logit = row[0];
    for (int c = 1; c < classes; ++c) max_logit = std::max(max_logit, row[c]);
    double sum = 0.0;
    for (int c = 0; c < classes; ++c)
      sum += std::exp(static_cast<double>(row[c] - max_logit));
    total += std::log(sum) -
             static_cast<double>(row[targets[static_cast<std::size_t>(t)]] - max_logit);
  }
  return total / static_cast<double>(steps - loss_start);
}

// Autoregressive dilated-convolution network over mu-law symbols with
// per-sample conditioning. Teacher-forced input at step t is the one-hot of
// symbol t-1 (realized as an embedding row lookup, which is the same linear
// map); logits at step t parameterize p(x_t | x_<t, h_t).
template <typename T>
class WaveNet {
 public:
  explicit WaveNet(NetConfig cfg) : cfg_(cfg), dilations_(cfg.dilations()) {
    if (cfg.kernel_size != 2)
      throw std::invalid_argument("WaveNet: kernel_size must be 2");
    if (cfg.num_blocks < 1 || cfg.layers_per_block < 1)
      throw std::invalid_argument("WaveNet: need at least one layer");

    const std::int64_t classes = cfg.output_classes;
    const std::int64_t res = cfg.residual_channels;
    const std::int64_t gate = cfg.gate_channels;
    const std::int64_t skip = cfg.skip_channels;
    const std::int64_t post = cfg.post_channels;
    const std::int64_t cond = cfg.condition_dim;

    embed_.init("embed.w", {classes, res});
    layers_.resize(dilations_.size());
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      const std::string tag = "layer" + std::to_string(l);
      layers_[l].conv_w0.init(tag + ".conv.w0", {res, 2 * gate});
      layers_[l].conv_w1.init(tag + ".conv.w1", {res, 2 * gate});
      layers_[l].conv_b.init(tag + ".conv.b", {2 * gate});
      layers_[l].cond_w.init(tag + ".cond.w", {cond, 2 * gate});
      layers_[l].res_w.init(tag + ".res.w", {gate, res});
      layers_[l].res_b.init(tag + ".res.b", {res});
      layers_[l].skip_w.init(tag + ".skip.w", {gate, skip});
      layers_[l].skip_b.init(tag + ".skip.b", {skip});
    }
    post1_w_.init("post1.w", {skip, post});
    post1_b_.init("post1.b", {post});
    post2_w_.init("post2.w", {post, classes});
    post2_b_.init("post2.b", {classes});
  }

  const NetConfig& config() const { return cfg_; }
  const std::vector<int>& dilations() const { return dilations_; }

  std::vector<Param<T>*> parameters() {
    std::vector<Param<T>*> out;
    out.push_back(&embed_);
    for (auto& l : layers_) {
      out.push_back(&l.conv_w0);
      out.push_back(&l.conv_w1);
      out.push_back(&l.conv_b);
      out.push_back(&l.cond_w);
      out.push_back(&l.res_w);
      out.push_back(&l.res_b);
      out.push_back(&l.skip_w);
      out.push_back(&l.skip_b);
    }
    out.push_back(&post1_w_);
    out.push_back(&post1_b_);
    out.push_back(&post2_w_);
    out.push_back(&post2_b_);
    return out;
  }

  std::int64_t parameter_count() {
    std::int64_t n = 0;
    for (const auto* p : parameters()) n += p->value.numel();
    return n;
  }

  // Xavier-uniform weights, zero biases. Draw order is the parameters()
  // order, so a seed pins the full initialization.
  void init_xavier(Rng& rng) {
    for (auto* p : parameters()) {
      if (p->value.shape.size() == 1) {
        p->value.fill(T{});
        continue;
      }
      double fan_in = static_cast<double>(p->value.shape[0]);
      double fan_out = static_cast<double>(p->value.shape[1]);
      // the two conv taps act as one kernel of width 2
      if (p->name.find(".conv.w") != std::string::npos) {
        fan_in *= 2.0;
        fan_out *= 2.0;
      }
      const double bound = std::sqrt(6.0 / (fan_in + fan_out));
      for (auto& v : p->value.data)
        v = static_cast<T>(rng.uniform(-bound, bound));
    }
  }

  void zero_grad() {
    for (auto* p : parameters()) p->grad.fill(T{});
  }

  // Teacher-forced forward pass. `condition` points at steps*condition_dim
  // values and must stay alive until backward() is done.
  const Tensor<T>& forward(std::span<const std::uint8_t> symbols,
                           const T* condition, std::int64_t steps) {
    if (static_cast<std::int64_t>(symbols.size()) != steps)
      throw std::invalid_argument("forward: symbol/step mismatch");
    if (condition == nullptr)
      throw std::invalid_argument("forward: null condition");

    steps_ = steps;
    condition_ = condition;
    input_ids_.resize(static_cast<std::size_t>(steps));
    input_ids_[0] = -1;  // no previous sample at t = 0
    for (std::int64_t t = 1; t < steps; ++t)
      input_ids_[static_cast<std::size_t>(t)] = symbols[static_cast<std::size_t>(t - 1)];

    const int res = cfg_.residual_channels;
    const int gate = cfg_.gate_channels;
    const int skip = cfg_.skip_channels;
    const int post = cfg_.post_channels;
    const int classes = cfg_.output_classes;
    const std::size_t L = layers_.size();

    x_cache_.resize(L + 1);
    a_cache_.resize(L);
    z_cache_.resize(L);
    for (auto& x : x_cache_) x.resize({steps, res});
    for (auto& a : a_cache_) a.resize({steps, 2 * gate});
    for (auto& z : z_cache_) z.resize({steps, gate});
    skip_sum_.resize({steps, skip});
    skip_relu_.resize({steps, skip});
    h1_.resize({steps, post});
    h1_relu_.resize({steps, post});
    logits_.resize({steps, classes});

    kernels::embed_forward(input_ids_.data(), embed_.value.ptr(),
                           x_cache_[0].ptr(), steps, res);
    skip_sum_.fill(T{});

    for (std::size_t l = 0; l < L; ++l) {
      auto& layer = layers_[l];
      kernels::conv2_forward(x_cache_[l].ptr(), layer.conv_w0.value.ptr(),
                             layer.conv_w1.value.ptr(), layer.conv_b.value.ptr(),
                             a_cache_[l].ptr(), steps, res, 2 * gate, dilations_[l]);
      kernels::linear_forward(condition_, layer.cond_w.value.ptr(), (const T*)nullptr,
                              a_cache_[l].ptr(), steps, cfg_.condition_dim, 2 * gate,
                              /*accumulate=*/true);
      kernels::gated_forward(a_cache_[l].ptr(), z_cache_[l].ptr(), steps, gate);
      // residual: x_{l+1} = x_l + res(z)
      kernels::linear_forward(z_cache_[l].ptr(), layer.res_w.value.ptr(),
                              layer.res_b.value.ptr(), x_cache_[l + 1].ptr(), steps,
                              gate, res);
      kernels::add_inplace(x_cache_[l + 1].ptr(), x_cache_[l].ptr(),
                           steps * static_cast<std::int64_t>(res));
      kernels::linear_forward(z_cache_[l].ptr(), layer.skip_w.value.ptr(),
                              layer.skip_b.value.ptr(), skip_sum_.ptr(), steps, gate,
                              skip, /*accumulate=*/true);
    }

    kernels::relu_forward(skip_sum_.ptr(), skip_relu_.ptr(),
                          steps * static_cast<std::int64_t>(skip));
    kernels::linear_forward(skip_relu_.ptr(), post1_w_.value.ptr(),
                            post1_b_.value.ptr(), h1_.ptr(), steps, skip, post);
    kernels::relu_forward(h1_.ptr(), h1_relu_.ptr(),
                          steps * static_cast<std::int64_t>(post));
    kernels::linear_forward(h1_relu_.ptr(), post2_w_.value.ptr(),
                            post2_b_.value.ptr(), logits_.ptr(), steps, post, classes);
    return logits_;
  }

  const Tensor<T>& logits() const { return logits_; }

  // Cross-entropy over t >= loss_start plus full backward pass; gradients
  // accumulate into the parameter .grad tensors (call zero_grad() first).
  double loss_and_backward(std::span<const std::uint8_t> targets,
                           std::int64_t loss_start = 0) {
    const std::int64_t steps = steps_;
    const int classes = cfg_.output_classes;
    if (static_cast<std::int64_t>(targets.size()) != steps)
      throw std::invalid_argument("loss_and_backward: target length mismatch");
    if (loss_start < 0 || loss_start >= steps)
      throw std::invalid_argument("loss_and_backward: bad loss_start");

    // softmax + dlogits
    dlogits_.resize({steps, classes});
    const std::int64_t count = steps - loss_start;
    const double inv_count = 1.0 / static_cast<double>(count);

    std::vector<double> per_step(static_cast<std::size_t>(steps), 0.0);
    #pragma omp parallel for schedule(static)
    for (std::int64_t t = 0; t < steps; ++t) {
      T* drow = dlogits_.ptr() + t * classes;
      if (t < loss_start) {
        for (int c = 0; c < classes; ++c) drow[c] = T{};
        continue;
      }
      const T* row = logits_.ptr() + t * classes;
      T max_logit = row[0];
      for (int c = 1; c < classes; ++c) max_logit = std::max(max_logit, row[c]);
      double sum = 0.0;
      for (int c = 0; c < classes; ++c)
        sum += std::exp(static_cast<double>(row[c] - max_logit));
      const double log_sum = std::log(sum);
      const int target = targets[static_cast<std::size_t>(t)];
      per_step[static_cast<std::size_t>(t)] =
          log_sum - static_cast<double>(row[target] - max_logit);
      for (int c = 0; c < classes; ++c) {
        const double p = std::exp(static_cast<double>(row[c] - max_logit)) / sum;
        drow[c] = static_cast<T>((p - (c == target ? 1.0 : 0.0)) * inv_count);
      }
    }
    double total = 0.0;
    for (std::int64_t t = loss_start; t < steps; ++t)
      total += per_step[static_cast<std::size_t>(t)];

    backward_from_dlogits();
    return total * inv_count;
  }

  // Incremental generation state: per-layer ring buffers of the layer inputs
  // so each step touches only the two taps it needs.
  struct IncrementalState {
    std::vector<std::vector<T>> ring;  // layer -> dilation * res values
    std::int64_t step = 0;
    std::vector<T> x, x_next, a, z, skip_sum, skip_relu, h1, h1_relu;
  };

  IncrementalState make_incremental_state() const {
    IncrementalState st;
    st.ring.resize(layers_.size());
    for (std::size_t l = 0; l < layers_.size(); ++l)
      st.ring[l].assign(static_cast<std::size_t>(dilations_[l]) *
                            static_cast<std::size_t>(cfg_.residual_channels),
                        T{});
    st.x.resize(static_cast<std::size_t>(cfg_.residual_channels));
    st.x_next.resize(static_cast<std::size_t>(cfg_.residual_channels));
    st.a.resize(static_cast<std::size_t>(2 * cfg_.gate_channels));
    st.z.resize(static_cast<std::size_t>(cfg_.gate_channels));
    st.skip_sum.resize(static_cast<std::size_t>(cfg_.skip_channels));
    st.skip_relu.resize(static_cast<std::size_t>(cfg_.skip_channels));
    st.h1.resize(static_cast<std::size_t>(cfg_.post_channels));
    st.h1_relu.resize(static_cast<std::size_t>(cfg_.post_channels));
    return st;
  }

  // One autoregressive step: prev_symbol is x_{t-1} (-1 at t = 0), cond_row
  // the conditioning for time t. Writes output_classes logits.
  void incremental_logits(IncrementalState& st, int prev_symbol,
                          const T* cond_row, T* out_logits) {
    const int res = cfg_.residual_channels;
    const int gate = cfg_.gate_channels;
    const int skip = cfg_.skip_channels;
    const int post = cfg_.post_channels;
    const int classes = cfg_.output_classes;

    const int id = prev_symbol;
    kernels::serial::embed_forward(&id, embed_.value.ptr(), st.x.data(), 1, res);

    std::fill(st.skip_sum.begin(), st.skip_sum.end(), T{});
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      auto& layer = layers_[l];
      const int d = dilations_[l];
      T* slot = st.ring[l].data() +
                static_cast<std::size_t>(st.step % d) * static_cast<std::size_t>(res);

      // a = conv_b + w0' x_t + w1' x_{t-d} + cond_w' h_t
      for (int o = 0; o < 2 * gate; ++o) st.a[static_cast<std::size_t>(o)] = layer.conv_b.value.data[static_cast<std::size_t>(o)];
      kernels::serial::linear_forward(st.x.data(), layer.conv_w0.value.ptr(),
                                      (const T*)nullptr, st.a.data(), 1, res,
                                      2 * gate, /*accumulate=*/true);
      if (st.step >= d)
        kernels::serial::linear_forward(slot, layer.conv_w1.value.ptr(),
                                        (const T*)nullptr, st.a.data(), 1, res,
                                        2 * gate, /*accumulate=*/true);
      kernels::serial::linear_forward(cond_row, layer.cond_w.value.ptr(),
                                      (const T*)nullptr, st.a.data(), 1,
                                      cfg_.condition_dim, 2 * gate,
                                      /*accumulate=*/true);
      kernels::serial::gated_forward(st.a.data(), st.z.data(), 1, gate);

      // store the layer input before overwriting x with the residual output
      std::copy(st.x.begin(), st.x.end(), slot);
      kernels::serial::linear_forward(st.z.data(), layer.res_w.value.ptr(),
                                      layer.res_b.value.ptr(), st.x_next.data(), 1,
                                      gate, res);
      for (int c = 0; c < res; ++c) st.x[static_cast<std::size_t>(c)] += st.x_next[static_cast<std::size_t>(c)];
      kernels::serial::linear_forward(st.z.data(), layer.skip_w.value.ptr(),
                                      layer.skip_b.value.ptr(), st.skip_sum.data(),
                                      1, gate, skip, /*accumulate=*/true);
    }

    kernels::serial::relu_forward(st.skip_sum.data(), st.skip_relu.data(), skip);
    kernels::serial::linear_forward(st.skip_relu.data(), post1_w_.value.ptr(),
                                    post1_b_.value.ptr(), st.h1.data(), 1, skip, post);
    kernels::serial::relu_forward(st.h1.data(), st.h1_relu.data(), post);
    kernels::serial::linear_forward(st.h1_relu.data(), post2_w_.value.ptr(),
                                    post2_b_.value.ptr(), out_logits, 1, post, classes);
    ++st.step;
  }

 private:
  struct Layer {
    Param<T> conv_w0, conv_w1, conv_b, cond_w, res_w, res_b, skip_w, skip_b;
  };

  void backward_from_dlogits() {
    const std::int64_t steps = steps_;
    const int res = cfg_.residual_channels;
    const int gate = cfg_.gate_channels;
    const int skip = cfg_.skip_channels;
    const int post = cfg_.post_channels;
    const int classes = cfg_.output_classes;
    const std::size_t L = layers_.size();

    dh1_relu_.resize({steps, post});
    dh1_.resize({steps, post});
    dskip_relu_.resize({steps, skip});
    dskip_sum_.resize({steps, skip});
    dx_.resize({steps, res});
    dz_.resize({steps, gate});
    da_.resize({steps, 2 * gate});

    // post stage
    dh1_relu_.fill(T{});
    kernels::linear_backward_input(dlogits_.ptr(), post2_w_.value.ptr(),
                                   dh1_relu_.ptr(), steps, post, classes);
    kernels::linear_backward_params(h1_relu_.ptr(), dlogits_.ptr(),
                                    post2_w_.grad.ptr(), post2_b_.grad.ptr(), steps,
                                    post, classes);
    dh1_.fill(T{});
    kernels::relu_backward(h1_.ptr(), dh1_relu_.ptr(), dh1_.ptr(),
                           steps * static_cast<std::int64_t>(post));
    dskip_relu_.fill(T{});
    kernels::linear_backward_input(dh1_.ptr(), post1_w_.value.ptr(),
                                   dskip_relu_.ptr(), steps, skip, post);
    kernels::linear_backward_params(skip_relu_.ptr(), dh1_.ptr(), post1_w_.grad.ptr(),
                                    post1_b_.grad.ptr(), steps, skip, post);
    dskip_sum_.fill(T{});
    kernels::relu_backward(skip_sum_.ptr(), dskip_relu_.ptr(), dskip_sum_.ptr(),
                           steps * static_cast<std::int64_t>(skip));

    // layers in reverse; dx_ carries d(loss)/d(x_{l+1})
    dx_.fill(T{});
    for (std::size_t li = L; li-- > 0;) {
      auto& layer = layers_[li];

      // z gets gradient from both the skip path and the residual projection
      dz_.fill(T{});
      kernels::linear_backward_input(dskip_sum_.ptr(), layer.skip_w.value.ptr(),
                                     dz_.ptr(), steps, gate, skip);
      kernels::linear_backward_params(z_cache_[li].ptr(), dskip_sum_.ptr(),
                                      layer.skip_w.grad.ptr(),
                                      layer.skip_b.grad.ptr(), steps, gate, skip);
      kernels::linear_backward_input(dx_.ptr(), layer.res_w.value.ptr(), dz_.ptr(),
                                     steps, gate, res);
      kernels::linear_backward_params(z_cache_[li].ptr(), dx_.ptr(),
                                      layer.res_w.grad.ptr(), layer.res_b.grad.ptr(),
                                      steps, gate, res);

      da_.fill(T{});
      kernels::gated_backward(a_cache_[li].ptr(), dz_.ptr(), da_.ptr(), steps, gate);

      kernels::linear_backward_params(condition_, da_.ptr(), layer.cond_w.grad.ptr(),
                                      (T*)nullptr, steps, cfg_.condition_dim,
                                      2 * gate);
      kernels::conv2_backward_params(x_cache_[li].ptr(), da_.ptr(),
                                     layer.conv_w0.grad.ptr(),
                                     layer.conv_w1.grad.ptr(),
                                     layer.conv_b.grad.ptr(), steps, res, 2 * gate,
                                     dilations_[li]);
      // dx_l = dx_{l+1} (residual identity) + conv backward of da
      kernels::conv2_backward_input(da_.ptr(), layer.conv_w0.value.ptr(),
                                    layer.conv_w1.value.ptr(), dx_.ptr(), steps, res,
                                    2 * gate, dilations_[li]);
    }

    kernels::embed_backward(input_ids_.data(), dx_.ptr(), embed_.grad.ptr(), steps,
                            res);
  }

  NetConfig cfg_;
  std::vector<int> dilations_;

  Param<T> embed_;
  std::vector<Layer> layers_;
  Param<T> post1_w_, post1_b_, post2_w_, post2_b_;

  // forward cache
  std::int64_t steps_ = 0;
  const T* condition_ = nullptr;
  std::vector<int> input_ids_;
  std::vector<Tensor<T>> x_cache_, a_cache_, z_cache_;
  Tensor<T> skip_sum_, skip_relu_, h1_, h1_relu_, logits_;

  // backward scratch
  Tensor<T> dlogits_, dh1_relu_, dh1_, dskip_relu_, dskip_sum_, dx_, dz_, da_;
};

enum class GenerationMode { kSample, kArgmax };

// Autoregressive generation: draws symbol_t from softmax(logits_t) (or takes
// the argmax) and feeds it back. Deterministic given the seed.
template <typename T>
SymbolSequence generate(WaveNet<T>& net, const T* condition, std::int64_t steps,
                        std::uint64_t seed,
                        GenerationMode mode = GenerationMode::kSample) {
  const int classes = net.config().output_classes;
  SymbolSequence out(static_cast<std::size_t>(steps));
  Rng rng(seed);
  auto state = net.make_incremental_state();
  std::vector<T> logits(static_cast<std::size_t>(classes));
  std::vector<double> probs(static_cast<std::size_t>(classes));

  int prev = -1;
  for (std::int64_t t = 0; t < steps; ++t) {
    net.incremental_logits(state, prev, condition + t * net.config().condition_dim,
                           logits.data());
    int symbol = 0;
    if (mode == GenerationMode::kArgmax) {
      for (int c = 1; c < classes; ++c)
        if (logits[static_cast<std::size_t>(c)] > logits[static_cast<std::size_t>(symbol)])
          symbol = c;
    } else {
      double max_logit = logits[0];
      for (int c = 1; c < classes; ++c)
        max_logit = std::max(max_logit, static_cast<double>(logits[static_cast<std::size_t>(c)]));
      double sum = 0.0;
      for (int c = 0; c < classes; ++c) {
        probs[static_cast<std::size_t>(c)] =
            std::exp(static_cast<double>(logits[static_cast<std::size_t>(c)]) - max_logit);
        sum += probs[static_cast<std::size_t>(c)];
      }
      const double u = rng.uniform() * sum;
      double acc = 0.0;
      symbol = classes - 1;
      for (int c = 0; c < classes; ++c) {
        acc += probs[static_cast<std::size_t>(c)];
        if (u < acc) {
          symbol = c;
          break;
        }
      }
    }
    out[static_cast<std::size_t>(t)] = static_cast<std::uint8_t>(symbol);
    prev = symbol;
  }
  return out;
}

}  // namespace excitnet
