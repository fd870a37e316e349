// Dense row-major float32 tensors. Mostly used as 2D matrices; Eigen maps
// back the matmul-shaped kernels.

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace stylox {

struct Tensor {
  std::vector<int> shape;
  std::vector<float> data;

  Tensor() = default;
  Tensor(std::vector<int> s, std::vector<float> d) : shape(std::move(s)), data(std::move(d)) {
    if (static_cast<int64_t>(data.size()) != size())
      throw std::invalid_argument("tensor data length does not match shape");
  }

  static Tensor zeros(std::vector<int> s) {
    int64_t n = 1;
    for (int d : s) n *= d;
    return Tensor(std::move(s), std::vector<float>(static_cast<size_t>(n), 0.0f));
  }
  static Tensor full(std::vector<int> s, float v) {
    Tensor t = zeros(std::move(s));
    std::fill(t.data.begin(), t.data.end(), v);
    return t;
  }
  static Tensor scalar(float v) { return Tensor({1, 1}, {v}); }

  int64_t size() const {
    int64_t n = 1;
    for (int d : shape) n *= d;
    return n;
  }
  int rows() const { return shape.empty() ? 0 : shape[0]; }
  int cols() const { return shape.size() < 2 ? 1 : shape[1]; }
  bool is_scalar() const { return size() == 1; }
  float item() const {
    if (!is_scalar()) throw std::invalid_argument("item() on non-scalar tensor");
    return data[0];
  }

  float& at(int r, int c) { return data[static_cast<size_t>(r) * cols() + c]; }
  float at(int r, int c) const { return data[static_cast<size_t>(r) * cols() + c]; }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }

  bool operator==(const Tensor&) const = default;
};

using EigenMatrix =
    Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<EigenMatrix>;
using ConstMatMap = Eigen::Map<const EigenMatrix>;

inline MatMap as_matrix(Tensor& t) { return MatMap(t.data.data(), t.rows(), t.cols()); }
inline ConstMatMap as_matrix(const Tensor& t) {
  return ConstMatMap(t.data.data(), t.rows(), t.cols());
}

inline std::string shape_string(const Tensor& t) {
  std::string s = "[";
  for (size_t i = 0; i < t.shape.size(); ++i)
    s += (i ? "x" : "") + std::to_string(t.shape[i]);
  return s + "]";
}

}  // namespace stylox
