#include "attnav/tensor.hpp"

#include <cmath>
#include <cstring>
#include <numeric>
#include <sstream>

#include "attnav/errors.hpp"

namespace attnav {

std::string shape_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << 'x';
    out << shape[i];
  }
  out << ']';
  return out.str();
}

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

namespace {

void check_shape(const Shape& shape) {
  if (shape.empty()) throw DimensionError("tensor shape must have at least one dimension");
  for (std::size_t d : shape) {
    if (d == 0) throw DimensionError("tensor dimension must be positive, got " + shape_string(shape));
  }
}

}  // namespace

Tensor::Tensor() : shape_{1}, data_(std::make_shared<const std::vector<double>>(1, 0.0)) {}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)) {
  check_shape(shape_);
  data_ = std::make_shared<const std::vector<double>>(shape_size(shape_), fill);
}

Tensor::Tensor(Shape shape, std::vector<double> values) : shape_(std::move(shape)) {
  check_shape(shape_);
  if (values.size() != shape_size(shape_)) {
    throw DimensionError("tensor of shape " + shape_string(shape_) + " needs " +
                         std::to_string(shape_size(shape_)) + " values, got " +
                         std::to_string(values.size()));
  }
  data_ = std::make_shared<const std::vector<double>>(std::move(values));
}

Tensor Tensor::scalar(double value) { return Tensor({1}, std::vector<double>{value}); }

Tensor Tensor::vector(std::vector<double> values) {
  const std::size_t n = values.size();
  return Tensor({n}, std::move(values));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> values) {
  return Tensor({rows, cols}, std::move(values));
}

double Tensor::at(std::size_t row, std::size_t col) const {
  if (rank() != 2) throw DimensionError("at(row, col) needs a matrix, got " + shape_string(shape_));
  return (*data_)[row * shape_[1] + col];
}

double Tensor::item() const {
  if (size() != 1) throw ContractError("item() on non-scalar tensor " + shape_string(shape_));
  return (*data_)[0];
}

Tensor Tensor::reshaped(Shape shape) const {
  check_shape(shape);
  if (shape_size(shape) != size()) {
    throw DimensionError("cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
  }
  Tensor out = *this;
  out.shape_ = std::move(shape);
  return out;
}

bool Tensor::identical(const Tensor& other) const {
  if (shape_ != other.shape_) return false;
  return std::memcmp(data_->data(), other.data_->data(), size() * sizeof(double)) == 0;
}

bool Tensor::all_finite() const {
  for (double v : *data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

}  // namespace attnav
