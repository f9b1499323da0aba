#pragma once

#include <cstddef>
#include <new>
#include <utility>
#include <span>
#include <string>
#include <vector>

namespace dermkit {

// 64-byte aligned storage. Vectorized reductions peel a different number of
// leading elements depending on the address, which changes the summation
// order; a fixed alignment keeps results identical from run to run.
template <class T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t kAlign{64};

  AlignedAllocator() = default;
  template <class U>
  AlignedAllocator(const AlignedAllocator<U>&) {}

  T* allocate(std::size_t n) {
    return static_cast<T*>(::operator new(n * sizeof(T), kAlign));
  }
  void deallocate(T* p, std::size_t) { ::operator delete(p, kAlign); }

  // Default-initializes, so resize() leaves doubles unset; Tensor fills
  // explicitly wherever contents matter.
  template <class U>
  void construct(U* p) noexcept {
    ::new (static_cast<void*>(p)) U;
  }
  template <class U, class... Args>
  void construct(U* p, Args&&... args) {
    ::new (static_cast<void*>(p)) U(std::forward<Args>(args)...);
  }

  template <class U>
  bool operator==(const AlignedAllocator<U>&) const { return true; }
};

using AlignedBuffer = std::vector<double, AlignedAllocator<double>>;

// N x C x H x W, row-major.
struct Shape {
  int n = 0;
  int c = 0;
  int h = 0;
  int w = 0;

  std::size_t size() const {
    return static_cast<std::size_t>(n) * c * h * w;
  }
  std::size_t sample_size() const {
    return static_cast<std::size_t>(c) * h * w;
  }
  std::size_t plane_size() const { return static_cast<std::size_t>(h) * w; }
  std::string str() const;

  friend bool operator==(const Shape&, const Shape&) = default;
};

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  // Contents unspecified; for outputs that are written in full.
  static Tensor uninitialized(Shape shape);
  Tensor(Shape shape, std::vector<double> values);

  const Shape& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double& at(int n, int c, int y, int x) { return data_[index(n, c, y, x)]; }
  double at(int n, int c, int y, int x) const {
    return data_[index(n, c, y, x)];
  }

  // Contiguous C*H*W block of one batch element.
  std::span<double> sample(int n);
  std::span<const double> sample(int n) const;

  void fill(double v);
  bool all_finite() const;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  std::size_t index(int n, int c, int y, int x) const {
    return ((static_cast<std::size_t>(n) * shape_.c + c) * shape_.h + y) *
               shape_.w +
           x;
  }

  Shape shape_;
  AlignedBuffer data_;
};

}  // namespace dermkit
