#pragma once

#include <cstddef>
#include <initializer_list>
#include <vector>

#include "gmtl/error.hpp"

namespace gmtl {

/// Dense row-major array of 64-bit floats. Rank 1..3 is all the model needs;
/// scalars are represented as shape {1}.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape);  // zero-filled
  Tensor(std::vector<std::size_t> shape, std::vector<double> data);

  static Tensor scalar(double v);
  static Tensor row(std::initializer_list<double> v);

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& vec() { return data_; }
  const std::vector<double>& vec() const { return data_; }

  double& at(std::size_t i) { return data_[i]; }
  double at(std::size_t i) const { return data_[i]; }

  // Rank-2 helpers.
  std::size_t rows() const { return shape_.empty() ? 0 : shape_[0]; }
  std::size_t cols() const { return shape_.size() < 2 ? 1 : shape_[1]; }
  double& at2(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  double at2(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

  // Rank-3 helper (e.g. a filter bank indexed as [filter][row][col]).
  double& at3(std::size_t a, std::size_t b, std::size_t c) {
    return data_[(a * shape_[1] + b) * shape_[2] + c];
  }
  double at3(std::size_t a, std::size_t b, std::size_t c) const {
    return data_[(a * shape_[1] + b) * shape_[2] + c];
  }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }
  bool all_finite() const;
  double max_abs() const;
  void fill(double v);

  bool operator==(const Tensor& o) const {
    return shape_ == o.shape_ && data_ == o.data_;
  }

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

// In-place y += a * x, shapes must agree. Used by the optimizers.
void axpy(double a, const Tensor& x, Tensor& y);

}  // namespace gmtl
