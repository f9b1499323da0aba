#include "dermkit/tensor.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cmath>
#include <stdexcept>

namespace dermkit {

std::string Shape::str() const {
  return std::to_string(n) + "x" + std::to_string(c) + "x" +
         std::to_string(h) + "x" + std::to_string(w);
}

Tensor::Tensor(Shape shape, double fill) : shape_(shape) {
  if (shape.n < 0 || shape.c < 0 || shape.h < 0 || shape.w < 0) {
    throw std::invalid_argument("negative tensor dimension " + shape.str());
  }
  data_.assign(shape.size(), fill);
}

Tensor Tensor::uninitialized(Shape shape) {
  Tensor t;
  t.shape_ = shape;
  t.data_.resize(shape.size());
  return t;
}

Tensor::Tensor(Shape shape, std::vector<double> values)
    : shape_(shape), data_(values.begin(), values.end()) {
  if (data_.size() != shape.size()) {
    throw std::invalid_argument("tensor data length " +
                                std::to_string(data_.size()) +
                                " does not match shape " + shape.str());
  }
}

std::span<double> Tensor::sample(int n) {
  return std::span<double>(data_).subspan(n * shape_.sample_size(),
                                          shape_.sample_size());
}

std::span<const double> Tensor::sample(int n) const {
  return std::span<const double>(data_).subspan(n * shape_.sample_size(),
                                                shape_.sample_size());
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor::all_finite() const {
  // Branch-free so the scan vectorizes: a value is non-finite exactly when
  // its exponent bits are all set.
  constexpr std::uint64_t exponent = 0x7ff0000000000000ULL;
  std::uint64_t bad = 0;
  for (double v : data_) bad |= (std::bit_cast<std::uint64_t>(v) & exponent) == exponent;
  return bad == 0;
}

}  // namespace dermkit
