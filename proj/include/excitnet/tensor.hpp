#pragma once

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace excitnet {

// Dense row-major tensor, just shape + storage. The network kernels work on
// raw pointers; this type exists to keep shapes and parameter bookkeeping in
// one place.
template <typename T>
struct Tensor {
  std::vector<std::int64_t> shape;
  std::vector<T> data;

  Tensor() = default;
  explicit Tensor(std::vector<std::int64_t> s) { resize(std::move(s)); }

  void resize(std::vector<std::int64_t> s) {
    const std::int64_t n = numel_of(s);
    if (shape == s && static_cast<std::int64_t>(data.size()) == n) return;
    shape = std::move(s);
    data.assign(static_cast<std::size_t>(n), T{});
  }

  static std::int64_t numel_of(const std::vector<std::int64_t>& s) {
    std::int64_t n = 1;
    for (std::int64_t d : s) {
      if (d < 0) throw std::invalid_argument("Tensor: negative dimension");
      n *= d;
    }
    return n;
  }

  std::int64_t numel() const { return static_cast<std::int64_t>(data.size()); }
  T* ptr() { return data.data(); }
  const T* ptr() const { return data.data(); }
  void fill(T v) { std::fill(data.begin(), data.end(), v); }
};

// Learnable tensor with its gradient.
template <typename T>
struct Param {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;

  void init(std::string n, std::vector<std::int64_t> shape) {
    name = std::move(n);
    value.resize(shape);
    grad.resize(std::move(shape));
  }
};

}  // namespace excitnet
