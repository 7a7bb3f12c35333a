#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dreamhone/error.hpp"

namespace dreamhone {

using Shape = std::vector<std::size_t>;

std::size_t shape_volume(const Shape& dims);
std::string shape_to_string(const Shape& dims);

/// Dense row-major array, last dimension fastest. Pixels and activations
/// share this carrier; images are [C, H, W] with values in [0, 1].
template <typename T>
class BasicTensor {
 public:
  using value_type = T;

  BasicTensor() : dims_{1}, data_(1, T{}) {}
  explicit BasicTensor(Shape dims, T fill = T{});
  BasicTensor(Shape dims, std::vector<T> data);

  const Shape& dims() const noexcept { return dims_; }
  std::size_t rank() const noexcept { return dims_.size(); }
  std::size_t dim(std::size_t i) const { return dims_.at(i); }
  std::size_t size() const noexcept { return data_.size(); }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }
  const std::vector<T>& values() const& noexcept { return data_; }
  std::vector<T> values() && noexcept { return std::move(data_); }

  T& operator[](std::size_t i) noexcept { return data_[i]; }
  const T& operator[](std::size_t i) const noexcept { return data_[i]; }

  // [C, H, W] accessors.
  T& at(std::size_t c, std::size_t y, std::size_t x) noexcept {
    return data_[(c * dims_[1] + y) * dims_[2] + x];
  }
  const T& at(std::size_t c, std::size_t y, std::size_t x) const noexcept {
    return data_[(c * dims_[1] + y) * dims_[2] + x];
  }

  /// Same data, new dims of equal volume.
  BasicTensor reshaped(Shape dims) const;

  template <typename U>
  BasicTensor<U> cast() const {
    std::vector<U> out(data_.begin(), data_.end());
    return BasicTensor<U>(dims_, std::move(out));
  }

  friend bool operator==(const BasicTensor& a, const BasicTensor& b) = default;

 private:
  Shape dims_;
  std::vector<T> data_;
};

using Tensor = BasicTensor<float>;
using TensorD = BasicTensor<double>;

/// Throws ShapeError unless `t` is rank 3.
template <typename T>
void require_chw(const BasicTensor<T>& t, const char* what);

extern template class BasicTensor<float>;
extern template class BasicTensor<double>;

}  // namespace dreamhone
