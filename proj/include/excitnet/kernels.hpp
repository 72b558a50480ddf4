#pragma once

#include <cmath>
#include <cstdint>

// Data-parallel kernels behind the network. Every kernel comes in two
// flavors: the OpenMP version used by the model and a serial reference in
// kernels::serial with the same contract, kept for testing and benchmarking.
// Both lanes share the same per-element arithmetic (kernels::detail), so
// results agree bit for bit; the parallel lane only splits non-reduction
// axes (time for activations, input index for weight gradients), which keeps
// results identical for any thread count.
//
// Layouts are row-major: activations x[t][i] with t the time step, weights
// w[i][o] (input-major so the inner loops run over contiguous outputs).
// The hot kernels are register-blocked: 4 rows by 32 outputs for the
// matrix-vector sweeps, 4 inputs by 32 outputs for the weight gradients.
// Blocking never changes the per-element accumulation order (ascending i or
// t with one fused multiply-add per term), so blocked and row-at-a-time
// paths produce identical bits.

namespace excitnet::kernels {

namespace detail {

inline constexpr int kTile = 32;
inline constexpr int kRows = 4;

// y[0..out) += Σ_i x[i] * w[i][0..out); accumulators live in registers
// across the i loop, one tile of outputs at a time
template <typename T>
inline void matvec_acc(const T* __restrict x, const T* __restrict w,
                       T* __restrict y, int in, int out) {
  int o0 = 0;
  for (; o0 + kTile <= out; o0 += kTile) {
    T acc[kTile];
    #pragma omp simd
    for (int j = 0; j < kTile; ++j) acc[j] = y[o0 + j];
    const T* __restrict wr = w + o0;
    for (int i = 0; i < in; ++i) {
      const T xv = x[i];
      #pragma omp simd
      for (int j = 0; j < kTile; ++j) acc[j] = std::fma(xv, wr[j], acc[j]);
      wr += out;
    }
    #pragma omp simd
    for (int j = 0; j < kTile; ++j) y[o0 + j] = acc[j];
  }
  if (o0 < out) {
    const int rem = out - o0;
    T acc[kTile];
    for (int j = 0; j < rem; ++j) acc[j] = y[o0 + j];
    for (int i = 0; i < in; ++i) {
      const T xv = x[i];
      const T* wr = w + static_cast<std::int64_t>(i) * out + o0;
      for (int j = 0; j < rem; ++j) acc[j] += xv * wr[j];
    }
    for (int j = 0; j < rem; ++j) y[o0 + j] = acc[j];
  }
}

// four consecutive rows at once: w streams once per tile for all four rows
template <typename T>
inline void matvec_acc_rows4(const T* __restrict x, const T* __restrict w,
                             T* __restrict y, int in, int out) {
  int o0 = 0;
  for (; o0 + kTile <= out; o0 += kTile) {
    T acc[kRows][kTile];
    for (int r = 0; r < kRows; ++r)
      #pragma omp simd
      for (int j = 0; j < kTile; ++j) acc[r][j] = y[r * out + o0 + j];
    const T* __restrict wr = w + o0;
    for (int i = 0; i < in; ++i) {
      T xv[kRows];
      for (int r = 0; r < kRows; ++r) xv[r] = x[r * in + i];
      #pragma omp simd
      for (int j = 0; j < kTile; ++j) {
        const T wv = wr[j];
        for (int r = 0; r < kRows; ++r) acc[r][j] = std::fma(xv[r], wv, acc[r][j]);
      }
      wr += out;
    }
    for (int r = 0; r < kRows; ++r)
      #pragma omp simd
      for (int j = 0; j < kTile; ++j) y[r * out + o0 + j] = acc[r][j];
  }
  if (o0 < out)
    for (int r = 0; r < kRows; ++r) {
      const int rem = out - o0;
      T acc[kTile];
      for (int j = 0; j < rem; ++j) acc[j] = y[r * out + o0 + j];
      for (int i = 0; i < in; ++i) {
        const T xv = x[r * in + i];
        const T* wr = w + static_cast<std::int64_t>(i) * out + o0;
        for (int j = 0; j < rem; ++j) acc[j] += xv * wr[j];
      }
      for (int j = 0; j < rem; ++j) y[r * out + o0 + j] = acc[j];
    }
}

// dx[0..in) += Σ_o dy[o] * w[i][o]; 32 partial lanes per input so the dot
// is not bound by fused-multiply-add latency
template <typename T>
inline void matvec_transposed_acc(const T* __restrict dy, const T* __restrict w,
                                  T* __restrict dx, int in, int out) {
  for (int i = 0; i < in; ++i) {
    const T* __restrict wr = w + static_cast<std::int64_t>(i) * out;
    T part[kTile]{};
    int o0 = 0;
    for (; o0 + kTile <= out; o0 += kTile) {
      #pragma omp simd
      for (int j = 0; j < kTile; ++j) part[j] = std::fma(dy[o0 + j], wr[o0 + j], part[j]);
    }
    T acc{};
    for (; o0 < out; ++o0) acc += dy[o0] * wr[o0];
    for (int j = 0; j < kTile; ++j) acc += part[j];
    dx[i] += acc;
  }
}

// dw[i][0..out) += Σ_t x[t][i] dy[t][0..out) for four consecutive i; the
// time loop runs innermost with register accumulators per output tile
template <typename T>
inline void outer_acc_rows4(const T* __restrict x, const T* __restrict dy,
                            T* __restrict dw, std::int64_t steps, int in, int out,
                            int i0) {
  for (int o0 = 0; o0 < out; o0 += kTile) {
    const int rem = out - o0 < kTile ? out - o0 : kTile;
    if (rem == kTile) {
      T acc[kRows][kTile]{};
      for (std::int64_t t = 0; t < steps; ++t) {
        const T* __restrict xr = x + t * in + i0;
        const T* __restrict dyr = dy + t * out + o0;
        #pragma omp simd
        for (int j = 0; j < kTile; ++j) {
          const T dv = dyr[j];
          for (int r = 0; r < kRows; ++r) acc[r][j] = std::fma(xr[r], dv, acc[r][j]);
        }
      }
      for (int r = 0; r < kRows; ++r)
        #pragma omp simd
        for (int j = 0; j < kTile; ++j)
          dw[static_cast<std::int64_t>(i0 + r) * out + o0 + j] += acc[r][j];
    } else {
      for (int r = 0; r < kRows; ++r) {
        T acc[kTile]{};
        for (std::int64_t t = 0; t < steps; ++t) {
          const T xv = x[t * in + i0 + r];
          const T* dyr = dy + t * out + o0;
          for (int j = 0; j < rem; ++j) acc[j] += xv * dyr[j];
        }
        for (int j = 0; j < rem; ++j)
          dw[static_cast<std::int64_t>(i0 + r) * out + o0 + j] += acc[j];
      }
    }
  }
}

template <typename T>
inline void outer_acc_row(const T* __restrict x, const T* __restrict dy,
                          T* __restrict dw_row, std::int64_t steps, int in, int out,
                          int i) {
  for (int o0 = 0; o0 < out; o0 += kTile) {
    const int rem = out - o0 < kTile ? out - o0 : kTile;
    T acc[kTile]{};
    for (std::int64_t t = 0; t < steps; ++t) {
      const T xv = x[t * in + i];
      const T* dyr = dy + t * out + o0;
      for (int j = 0; j < rem; ++j) acc[j] += xv * dyr[j];
    }
    for (int j = 0; j < rem; ++j) dw_row[o0 + j] += acc[j];
  }
}

template <typename T>
inline void init_row(T* y, const T* b, int out, bool accumulate) {
  if (!accumulate) {
    for (int o = 0; o < out; ++o) y[o] = b ? b[o] : T{};
  } else if (b) {
    for (int o = 0; o < out; ++o) y[o] += b[o];
  }
}

template <typename T>
inline void conv2_row(const T* x_now, const T* x_past, const T* w0, const T* w1,
                      const T* b, T* y, int in, int out) {
  init_row(y, b, out, false);
  matvec_acc(x_now, w0, y, in, out);
  if (x_past) matvec_acc(x_past, w1, y, in, out);
}

template <typename T>
inline void gated_row(const T* a, T* z, int gate) {
  for (int c = 0; c < gate; ++c) {
    const T th = std::tanh(a[c]);
    const T sg = T(1) / (T(1) + std::exp(-a[gate + c]));
    z[c] = th * sg;
  }
}

template <typename T>
inline void gated_backward_row(const T* a, const T* dz, T* da, int gate) {
  for (int c = 0; c < gate; ++c) {
    const T th = std::tanh(a[c]);
    const T sg = T(1) / (T(1) + std::exp(-a[gate + c]));
    da[c] += dz[c] * (T(1) - th * th) * sg;
    da[gate + c] += dz[c] * th * sg * (T(1) - sg);
  }
}

// db[0..out) += Σ_t dy[t][0..out); serial over time by design
template <typename T>
inline void bias_grad(const T* dy, T* db, std::int64_t steps, int out) {
  for (std::int64_t t = 0; t < steps; ++t) {
    const T* dyr = dy + t * out;
    for (int o = 0; o < out; ++o) db[o] += dyr[o];
  }
}

// weight-gradient sweep over all inputs, 4-wide blocks plus remainder rows
template <typename T>
inline void weight_grad_block(const T* x, const T* dy, T* dw, std::int64_t steps,
                              int in, int out, int i0) {
  if (i0 + kRows <= in)
    outer_acc_rows4(x, dy, dw, steps, in, out, i0);
  else
    for (int i = i0; i < in; ++i)
      outer_acc_row(x, dy, dw + static_cast<std::int64_t>(i) * out, steps, in, out, i);
}

}  // namespace detail

namespace serial {

// y[t][o] = b[o] + Σ_i x[t][i] w[i][o]; with accumulate, adds onto y instead
template <typename T>
void linear_forward(const T* x, const T* w, const T* b, T* y, std::int64_t steps,
                    int in, int out, bool accumulate = false) {
  std::int64_t t = 0;
  for (; t + detail::kRows <= steps; t += detail::kRows) {
    for (int r = 0; r < detail::kRows; ++r)
      detail::init_row(y + (t + r) * out, b, out, accumulate);
    detail::matvec_acc_rows4(x + t * in, w, y + t * out, in, out);
  }
  for (; t < steps; ++t) {
    detail::init_row(y + t * out, b, out, accumulate);
    detail::matvec_acc(x + t * in, w, y + t * out, in, out);
  }
}

// dx[t][i] += Σ_o dy[t][o] w[i][o]
template <typename T>
void linear_backward_input(const T* dy, const T* w, T* dx, std::int64_t steps,
                           int in, int out) {
  for (std::int64_t t = 0; t < steps; ++t)
    detail::matvec_transposed_acc(dy + t * out, w, dx + t * in, in, out);
}

// dw[i][o] += Σ_t x[t][i] dy[t][o]; db[o] += Σ_t dy[t][o]
template <typename T>
void linear_backward_params(const T* x, const T* dy, T* dw, T* db,
                            std::int64_t steps, int in, int out) {
  for (int i0 = 0; i0 < in; i0 += detail::kRows)
    detail::weight_grad_block(x, dy, dw, steps, in, out, i0);
  if (db) detail::bias_grad(dy, db, steps, out);
}

// causal two-tap dilated convolution:
// y[t][o] = b[o] + Σ_i w0[i][o] x[t][i] + Σ_i w1[i][o] x[t-d][i], x[<0] = 0
template <typename T>
void conv2_forward(const T* x, const T* w0, const T* w1, const T* b, T* y,
                   std::int64_t steps, int in, int out, int dilation) {
  std::int64_t t = 0;
  // rows before the dilation horizon see only tap 0
  for (; t < steps && t < dilation; ++t)
    detail::conv2_row(x + t * in, static_cast<const T*>(nullptr), w0, w1, b,
                      y + t * out, in, out);
  for (; t + detail::kRows <= steps; t += detail::kRows) {
    for (int r = 0; r < detail::kRows; ++r)
      detail::init_row(y + (t + r) * out, b, out, false);
    detail::matvec_acc_rows4(x + t * in, w0, y + t * out, in, out);
    detail::matvec_acc_rows4(x + (t - dilation) * in, w1, y + t * out, in, out);
  }
  for (; t < steps; ++t)
    detail::conv2_row(x + t * in, x + (t - dilation) * in, w0, w1, b, y + t * out,
                      in, out);
}

template <typename T>
void conv2_backward_input(const T* dy, const T* w0, const T* w1, T* dx,
                          std::int64_t steps, int in, int out, int dilation) {
  for (std::int64_t t = 0; t < steps; ++t) {
    detail::matvec_transposed_acc(dy + t * out, w0, dx + t * in, in, out);
    if (t + dilation < steps)
      detail::matvec_transposed_acc(dy + (t + dilation) * out, w1, dx + t * in, in, out);
  }
}

template <typename T>
void conv2_backward_params(const T* x, const T* dy, T* dw0, T* dw1, T* db,
                           std::int64_t steps, int in, int out, int dilation) {
  for (int i0 = 0; i0 < in; i0 += detail::kRows) {
    detail::weight_grad_block(x, dy, dw0, steps, in, out, i0);
    // tap 1 pairs x[t] with dy[t + dilation]
    if (steps > dilation)
      detail::weight_grad_block(x, dy + static_cast<std::int64_t>(dilation) * out,
                                dw1, steps - dilation, in, out, i0);
  }
  if (db) detail::bias_grad(dy, db, steps, out);
}

// z[t][c] = tanh(a[t][c]) * sigmoid(a[t][gate + c]); a has 2*gate channels
template <typename T>
void gated_forward(const T* a, T* z, std::int64_t steps, int gate) {
  for (std::int64_t t = 0; t < steps; ++t)
    detail::gated_row(a + t * 2 * gate, z + t * gate, gate);
}

template <typename T>
void gated_backward(const T* a, const T* dz, T* da, std::int64_t steps, int gate) {
  for (std::int64_t t = 0; t < steps; ++t)
    detail::gated_backward_row(a + t * 2 * gate, dz + t * gate, da + t * 2 * gate, gate);
}

template <typename T>
void relu_forward(const T* x, T* y, std::int64_t n) {
  for (std::int64_t i = 0; i < n; ++i) y[i] = x[i] > T{} ? x[i] : T{};
}

template <typename T>
void relu_backward(const T* x, const T* dy, T* dx, std::int64_t n) {
  for (std::int64_t i = 0; i < n; ++i) dx[i] += x[i] > T{} ? dy[i] : T{};
}

template <typename T>
void add_inplace(T* y, const T* x, std::int64_t n) {
  for (std::int64_t i = 0; i < n; ++i) y[i] += x[i];
}

// y[t] = table[ids[t]]; ids[t] < 0 produces a zero row
template <typename T>
void embed_forward(const int* ids, const T* table, T* y, std::int64_t steps,
                   int width) {
  for (std::int64_t t = 0; t < steps; ++t) {
    T* yr = y + t * width;
    if (ids[t] < 0) {
      for (int c = 0; c < width; ++c) yr[c] = T{};
    } else {
      const T* row = table + static_cast<std::int64_t>(ids[t]) * width;
      for (int c = 0; c < width; ++c) yr[c] = row[c];
    }
  }
}

// scatter-add along time, channel by channel so rows never collide
template <typename T>
void embed_backward(const int* ids, const T* dy, T* dtable, std::int64_t steps,
                    int width) {
  for (int c = 0; c < width; ++c) {
    for (std::int64_t t = 0; t < steps; ++t) {
      if (ids[t] < 0) continue;
      dtable[static_cast<std::int64_t>(ids[t]) * width + c] += dy[t * width + c];
    }
  }
}

}  // namespace serial

template <typename T>
void linear_forward(const T* x, const T* w, const T* b, T* y, std::int64_t steps,
                    int in, int out, bool accumulate = false) {
  const std::int64_t blocks = steps / detail::kRows;
  #pragma omp parallel for schedule(static)
  for (std::int64_t blk = 0; blk < blocks; ++blk) {
    const std::int64_t t = blk * detail::kRows;
    for (int r = 0; r < detail::kRows; ++r)
      detail::init_row(y + (t + r) * out, b, out, accumulate);
    detail::matvec_acc_rows4(x + t * in, w, y + t * out, in, out);
  }
  for (std::int64_t t = blocks * detail::kRows; t < steps; ++t) {
    detail::init_row(y + t * out, b, out, accumulate);
    detail::matvec_acc(x + t * in, w, y + t * out, in, out);
  }
}

template <typename T>
void linear_backward_input(const T* dy, const T* w, T* dx, std::int64_t steps,
                           int in, int out) {
  #pragma omp parallel for schedule(static)
  for (std::int64_t t = 0; t < steps; ++t)
    detail::matvec_transposed_acc(dy + t * out, w, dx + t * in, in, out);
}

template <typename T>
void linear_backward_params(const T* x, const T* dy, T* dw, T* db,
                            std::int64_t steps, int in, int out) {
  const int blocks = (in + detail::kRows - 1) / detail::kRows;
  #pragma omp parallel for schedule(static)
  for (int blk = 0; blk < blocks; ++blk)
    detail::weight_grad_block(x, dy, dw, steps, in, out, blk * detail::kRows);
  // bias reduction stays serial over time: fixed order, negligible cost
  if (db) detail::bias_grad(dy, db, steps, out);
}

template <typename T>
void conv2_forward(const T* x, const T* w0, const T* w1, const T* b, T* y,
                   std::int64_t steps, int in, int out, int dilation) {
  const std::int64_t head = std::min<std::int64_t>(steps, dilation);
  for (std::int64_t t = 0; t < head; ++t)
    detail::conv2_row(x + t * in, static_cast<const T*>(nullptr), w0, w1, b,
                      y + t * out, in, out);
  const std::int64_t blocks = (steps - head) / detail::kRows;
  #pragma omp parallel for schedule(static)
  for (std::int64_t blk = 0; blk < blocks; ++blk) {
    const std::int64_t t = head + blk * detail::kRows;
    for (int r = 0; r < detail::kRows; ++r)
      detail::init_row(y + (t + r) * out, b, out, false);
    detail::matvec_acc_rows4(x + t * in, w0, y + t * out, in, out);
    detail::matvec_acc_rows4(x + (t - dilation) * in, w1, y + t * out, in, out);
  }
  for (std::int64_t t = head + blocks * detail::kRows; t < steps; ++t)
    detail::conv2_row(x + t * in, x + (t - dilation) * in, w0, w1, b, y + t * out,
                      in, out);
}

template <typename T>
void conv2_backward_input(const T* dy, const T* w0, const T* w1, T* dx,
                          std::int64_t steps, int in, int out, int dilation) {
  #pragma omp parallel for schedule(static)
  for (std::int64_t t = 0; t < steps; ++t) {
    detail::matvec_transposed_acc(dy + t * out, w0, dx + t * in, in, out);
    if (t + dilation < steps)
      detail::matvec_transposed_acc(dy + (t + dilation) * out, w1, dx + t * in, in, out);
  }
}

template <typename T>
void conv2_backward_params(const T* x, const T* dy, T* dw0, T* dw1, T* db,
                           std::int64_t steps, int in, int out, int dilation) {
  const int blocks = (in + detail::kRows - 1) / detail::kRows;
  #pragma omp parallel for schedule(static)
  for (int blk = 0; blk < blocks; ++blk) {
    const int i0 = blk * detail::kRows;
    detail::weight_grad_block(x, dy, dw0, steps, in, out, i0);
    if (steps > dilation)
      detail::weight_grad_block(x, dy + static_cast<std::int64_t>(dilation) * out,
                                dw1, steps - dilation, in, out, i0);
  }
  if (db) detail::bias_grad(dy, db, steps, out);
}

template <typename T>
void gated_forward(const T* a, T* z, std::int64_t steps, int gate) {
  #pragma omp parallel for schedule(static)
  for (std::int64_t t = 0; t < steps; ++t)
    detail::gated_row(a + t * 2 * gate, z + t * gate, gate);
}

template <typename T>
void gated_backward(const T* a, const T* dz, T* da, std::int64_t steps, int gate) {
  #pragma omp parallel for schedule(static)
  for (std::int64_t t = 0; t < steps; ++t)
    detail::gated_backward_row(a + t * 2 * gate, dz + t * gate, da + t * 2 * gate, gate);
}

template <typename T>
void relu_forward(const T* x, T* y, std::int64_t n) {
  #pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) y[i] = x[i] > T{} ? x[i] : T{};
}

template <typename T>
void relu_backward(const T* x, const T* dy, T* dx, std::int64_t n) {
  #pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) dx[i] += x[i] > T{} ? dy[i] : T{};
}

template <typename T>
void add_inplace(T* y, const T* x, std::int64_t n) {
  #pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) y[i] += x[i];
}

template <typename T>
void embed_forward(const int* ids, const T* table, T* y, std::int64_t steps,
                   int width) {
  #pragma omp parallel for schedule(static)
  for (std::int64_t t = 0; t < steps; ++t)
    serial::embed_forward(ids + t, table, y + t * width, 1, width);
}

template <typename T>
void embed_backward(const int* ids, const T* dy, T* dtable, std::int64_t steps,
                    int width) {
  #pragma omp parallel for schedule(static)
  for (int c = 0; c < width; ++c) {
    for (std::int64_t t = 0; t < steps; ++t) {
      if (ids[t] < 0) continue;
      dtable[static_cast<std::int64_t>(ids[t]) * width + c] += dy[t * width + c];
    }
  }
}

}  // namespace excitnet::kernels
