#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace ecgvae::nn {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_to_string(const Shape& shape);

/// Dense row-major array of rank 1-3. Layout conventions used throughout:
/// [length], [channels, length], [batch, channels, length] and [batch, features].
template <typename Real>
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, Real fill = Real(0));
  Tensor(Shape shape, std::vector<Real> data);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<Real> data() { return data_; }
  std::span<const Real> data() const { return data_; }
  const std::vector<Real>& vec() const { return data_; }

  Real& operator[](std::size_t i) { return data_[i]; }
  Real operator[](std::size_t i) const { return data_[i]; }

  /// Same data, new extents with equal element count.
  Tensor reshaped(Shape shape) const;
  void reshape(Shape shape);

  bool all_finite() const;

  template <typename To>
  Tensor<To> cast() const {
    if (shape_.empty()) return {};
    return Tensor<To>(shape_, std::vector<To>(data_.begin(), data_.end()));
  }

  bool operator==(const Tensor&) const = default;

 private:
  Shape shape_;
  std::vector<Real> data_;
};

extern template class Tensor<float>;
extern template class Tensor<double>;

}  // namespace ecgvae::nn
