#include "afenet/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "afenet/error.hpp"

namespace afenet {

std::string Shape::str() const {
  std::ostringstream os;
  os << "(" << n << ", " << c << ", " << h << ", " << w << ")";
  return os.str();
}

Tensor::Tensor(Shape shape, double fill)
    : shape_(shape), data_(static_cast<std::size_t>(shape.numel()), fill) {
  if (shape.n < 0 || shape.c < 0 || shape.h < 0 || shape.w < 0) {
    throw ShapeError("negative tensor dimension " + shape.str());
  }
}

Tensor::Tensor(Shape shape, std::vector<double> values)
    : shape_(shape), data_(std::move(values)) {
  if (static_cast<std::int64_t>(data_.size()) != shape.numel()) {
    throw ShapeError("value count does not match shape " + shape.str());
  }
}

Tensor Tensor::reshaped(Shape shape) const {
  if (shape.numel() != numel()) {
    throw ShapeError("cannot reshape " + shape_.str() + " to " + shape.str());
  }
  Tensor out = *this;
  out.shape_ = shape;
  return out;
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

void Tensor::add_(const Tensor& other) {
  if (other.numel() != numel()) throw ShapeError("add_: size mismatch");
  const double* src = other.data();
  double* dst = data();
  for (std::int64_t i = 0; i < numel(); ++i) dst[i] += src[i];
}

void Tensor::axpy_(double alpha, const Tensor& other) {
  if (other.numel() != numel()) throw ShapeError("axpy_: size mismatch");
  const double* src = other.data();
  double* dst = data();
  for (std::int64_t i = 0; i < numel(); ++i) dst[i] += alpha * src[i];
}

void Tensor::scale_(double alpha) {
  for (double& v : data_) v *= alpha;
}

double Tensor::sum() const {
  double s = 0.0;
  for (double v : data_) s += v;
  return s;
}

double Tensor::max_abs() const {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::abs(v));
  return m;
}

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  if (a.numel() != b.numel()) throw ShapeError("max_abs_diff: size mismatch");
  double m = 0.0;
  for (std::int64_t i = 0; i < a.numel(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace afenet
