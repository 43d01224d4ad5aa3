#pragma once

#include <cstddef>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace attnav {

using Shape = std::vector<std::size_t>;

std::string shape_string(const Shape& shape);
std::size_t shape_size(const Shape& shape);

// Dense row-major array of doubles. The buffer is shared between copies and
// never mutated after construction, so tensors can be handed across threads
// freely; "updating" a tensor means building a new one.
class Tensor {
 public:
  Tensor();
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> values);

  static Tensor scalar(double value);
  static Tensor vector(std::vector<double> values);
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_->size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }

  std::span<const double> data() const { return *data_; }
  double operator[](std::size_t i) const { return (*data_)[i]; }
  double at(std::size_t row, std::size_t col) const;
  double item() const;

  bool requires_grad() const { return requires_grad_; }
  Tensor& set_requires_grad(bool flag) {
    requires_grad_ = flag;
    return *this;
  }

  // Same buffer under a new shape with an equal element count.
  Tensor reshaped(Shape shape) const;

  // Bitwise equality of shape and values.
  bool identical(const Tensor& other) const;
  bool all_finite() const;

 private:
  Shape shape_;
  std::shared_ptr<const std::vector<double>> data_;
  bool requires_grad_ = false;
};

}  // namespace attnav
