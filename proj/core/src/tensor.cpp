#include "gmtl/tensor.hpp"

#include <cmath>

namespace gmtl {

namespace {
std::size_t product(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) {
    if (d == 0) throw InvalidInput("tensor dimensions must be positive");
    n *= d;
  }
  return n;
}
}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), data_(product(shape_), 0.0) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (product(shape_) != data_.size())
    throw InvalidInput("tensor shape does not match data length");
}

Tensor Tensor::scalar(double v) { return Tensor({1}, {v}); }

Tensor Tensor::row(std::initializer_list<double> v) {
  return Tensor({v.size()}, std::vector<double>(v));
}

bool Tensor::all_finite() const {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

double Tensor::max_abs() const {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::fabs(v));
  return m;
}

void Tensor::fill(double v) {
  for (double& x : data_) x = v;
}

void axpy(double a, const Tensor& x, Tensor& y) {
  if (!x.same_shape(y)) throw InvalidInput("axpy: shape mismatch");
  const double* xs = x.data();
  double* ys = y.data();
  for (std::size_t i = 0; i < y.size(); ++i) ys[i] += a * xs[i];
}

}  // namespace gmtl
