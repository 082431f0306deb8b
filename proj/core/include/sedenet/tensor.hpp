#pragma once

#include <cassert>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace sedenet {

enum class Dtype : uint8_t { kU8 = 0, kF32 = 1 };

/// Dense N-dimensional array, row-major (last axis fastest).
template <typename T>
class BasicTensor {
 public:
  BasicTensor() = default;
  explicit BasicTensor(std::vector<size_t> shape, T fill = T{})
      : shape_(std::move(shape)), data_(checked_size(shape_), fill) {}

  const std::vector<size_t>& shape() const noexcept { return shape_; }
  size_t rank() const noexcept { return shape_.size(); }
  size_t dim(size_t axis) const { return shape_.at(axis); }
  size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T* data() noexcept { return data_.data(); }
  const T* data() const noexcept { return data_.data(); }

  T& operator[](size_t i) {
    assert(i < data_.size());
    return data_[i];
  }
  const T& operator[](size_t i) const {
    assert(i < data_.size());
    return data_[i];
  }

  /// Multi-axis access; the index count must equal the rank.
  template <typename... Ix>
  T& operator()(Ix... ix) {
    return data_[flat(ix...)];
  }
  template <typename... Ix>
  const T& operator()(Ix... ix) const {
    return data_[flat(ix...)];
  }

  /// Row-major flat offset: ((i0*d1 + i1)*d2 + i2)*...
  template <typename... Ix>
  size_t flat(Ix... ix) const {
    assert(sizeof...(Ix) == shape_.size());
    const size_t idx[] = {static_cast<size_t>(ix)...};
    size_t off = 0;
    for (size_t a = 0; a < sizeof...(Ix); ++a) {
      assert(idx[a] < shape_[a]);
      off = off * shape_[a] + idx[a];
    }
    return off;
  }

  void fill(T value) { std::fill(data_.begin(), data_.end(), value); }

  bool same_shape(const BasicTensor& other) const { return shape_ == other.shape_; }

  bool operator==(const BasicTensor& other) const {
    return shape_ == other.shape_ && data_ == other.data_;
  }

 private:
  static size_t checked_size(const std::vector<size_t>& shape);

  std::vector<size_t> shape_;
  std::vector<T> data_;
};

using Tensor = BasicTensor<float>;
using TensorU8 = BasicTensor<uint8_t>;

std::string shape_to_string(const std::vector<size_t>& shape);

/// True when every element is finite (f32 tensors only, trivially true for u8).
bool all_finite(const Tensor& t);

/// Throws std::runtime_error naming `what` if the tensor holds NaN/Inf.
void require_finite(const Tensor& t, const char* what);

extern template class BasicTensor<float>;
extern template class BasicTensor<uint8_t>;

}  // namespace sedenet
