#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace afenet {

/// (batch, channels, height, width). Every tensor in the library is rank 4;
/// matrices are stored as (1, 1, rows, cols) and per-channel vectors as
/// (C, 1, 1, 1).
struct Shape {
  std::int64_t n = 1;
  std::int64_t c = 1;
  std::int64_t h = 1;
  std::int64_t w = 1;

  std::int64_t numel() const { return n * c * h * w; }
  std::int64_t plane() const { return h * w; }
  bool operator==(const Shape&) const = default;
  std::string str() const;
};

/// Dense row-major float64 array, NCHW layout.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> values);

  static Tensor zeros(Shape shape) { return Tensor(shape); }
  static Tensor zeros_like(const Tensor& t) { return Tensor(t.shape()); }

  const Shape& shape() const { return shape_; }
  std::int64_t numel() const { return static_cast<std::int64_t>(data_.size()); }
  bool empty() const { return data_.empty(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  std::int64_t index(std::int64_t n, std::int64_t c, std::int64_t y,
                     std::int64_t x) const {
    return ((n * shape_.c + c) * shape_.h + y) * shape_.w + x;
  }
  double& at(std::int64_t n, std::int64_t c, std::int64_t y, std::int64_t x) {
    return data_[static_cast<std::size_t>(index(n, c, y, x))];
  }
  double at(std::int64_t n, std::int64_t c, std::int64_t y, std::int64_t x) const {
    return data_[static_cast<std::size_t>(index(n, c, y, x))];
  }
  double& operator[](std::int64_t i) { return data_[static_cast<std::size_t>(i)]; }
  double operator[](std::int64_t i) const { return data_[static_cast<std::size_t>(i)]; }

  /// Pointer to the (n, c) plane.
  double* plane(std::int64_t n, std::int64_t c) { return data() + index(n, c, 0, 0); }
  const double* plane(std::int64_t n, std::int64_t c) const {
    return data() + index(n, c, 0, 0);
  }

  /// Same storage, new geometry; element count must match.
  Tensor reshaped(Shape shape) const;

  void fill(double v);
  void add_(const Tensor& other);
  void axpy_(double alpha, const Tensor& other);
  void scale_(double alpha);

  double sum() const;
  double max_abs() const;
  bool all_finite() const;

 private:
  Shape shape_{0, 0, 0, 0};
  std::vector<double> data_;
};

double max_abs_diff(const Tensor& a, const Tensor& b);

}  // namespace afenet
