#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace planwrite::num {

inline void check(bool cond, const std::string& msg) {
  if (!cond) throw std::runtime_error(msg);
}

// Dense row-major tensor. Rank 1 and 2 are all the model needs.
template <typename T>
struct Tensor {
  std::vector<int> shape;
  std::vector<T> data;

  Tensor() = default;

  explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
    data.assign(static_cast<size_t>(count(shape)), T(0));
  }

  Tensor(std::vector<int> s, std::vector<T> d) : shape(std::move(s)), data(std::move(d)) {
    check(count(shape) == static_cast<long>(data.size()), "tensor: shape/data mismatch");
  }

  static long count(const std::vector<int>& s) {
    check(!s.empty(), "tensor: empty shape");
    long n = 1;
    for (int e : s) {
      check(e > 0, "tensor: non-positive extent");
      n *= e;
    }
    return n;
  }

  static Tensor scalar(T v) { return Tensor({1}, {v}); }

  static Tensor filled(std::vector<int> s, T v) {
    Tensor t(std::move(s));
    for (auto& x : t.data) x = v;
    return t;
  }

  int size() const { return static_cast<int>(data.size()); }
  int ndim() const { return static_cast<int>(shape.size()); }
  int rows() const { return shape[0]; }
  int cols() const {
    check(ndim() == 2, "tensor: cols() on non-matrix");
    return shape[1];
  }

  T& at(int i) { return data[static_cast<size_t>(i)]; }
  const T& at(int i) const { return data[static_cast<size_t>(i)]; }
  T& at(int i, int j) { return data[static_cast<size_t>(i) * shape[1] + j]; }
  const T& at(int i, int j) const { return data[static_cast<size_t>(i) * shape[1] + j]; }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }
  bool is_scalar() const { return size() == 1; }

  bool all_finite() const {
    for (T v : data) {
      if (!std::isfinite(static_cast<double>(v))) return false;
    }
    return true;
  }

  bool operator==(const Tensor& o) const { return shape == o.shape && data == o.data; }
};

}  // namespace planwrite::num
