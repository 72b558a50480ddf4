#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "excitnet/tensor.hpp"

namespace excitnet {

struct AdamConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// First/second moment estimates, one pair per parameter, in parameters()
// order. Serialized with checkpoints so a resumed run continues bit-exactly.
template <typename T>
struct AdamState {
  std::vector<Tensor<T>> m;
  std::vector<Tensor<T>> v;
  std::int64_t step = 0;

  template <typename Params>
  static AdamState init(const Params& params) {
    AdamState st;
    st.m.reserve(params.size());
    st.v.reserve(params.size());
    for (const auto* p : params) {
      st.m.emplace_back(p->value.shape);
      st.v.emplace_back(p->value.shape);
    }
    return st;
  }
};

// Standard Adam update with bias correction. If any gradient entry is
// non-finite the whole step is skipped (parameters, moments and step count
// untouched) and false is returned.
template <typename T>
bool adam_step(std::vector<Param<T>*>& params, AdamState<T>& state,
               const AdamConfig& cfg) {
  if (params.size() != state.m.size())
    throw std::invalid_argument("adam_step: state/parameter count mismatch");

  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i]->grad.numel() != state.m[i].numel())
      throw std::invalid_argument("adam_step: shape mismatch at " + params[i]->name);
    for (const T g : params[i]->grad.data)
      if (!std::isfinite(static_cast<double>(g))) return false;
  }

  state.step += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));

  for (std::size_t i = 0; i < params.size(); ++i) {
    T* p = params[i]->value.ptr();
    const T* g = params[i]->grad.ptr();
    T* m = state.m[i].ptr();
    T* v = state.v[i].ptr();
    const std::int64_t n = params[i]->value.numel();
    #pragma omp parallel for schedule(static)
    for (std::int64_t j = 0; j < n; ++j) {
      const double gj = static_cast<double>(g[j]);
      const double mj = cfg.beta1 * static_cast<double>(m[j]) + (1.0 - cfg.beta1) * gj;
      const double vj = cfg.beta2 * static_cast<double>(v[j]) + (1.0 - cfg.beta2) * gj * gj;
      m[j] = static_cast<T>(mj);
      v[j] = static_cast<T>(vj);
      const double m_hat = mj / bc1;
      const double v_hat = vj / bc2;
      p[j] = static_cast<T>(static_cast<double>(p[j]) -
                            cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.eps));
    }
  }
  return true;
}

}  // namespace excitnet
