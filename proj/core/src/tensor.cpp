#include "sedenet/tensor.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace sedenet {

template <typename T>
size_t BasicTensor<T>::checked_size(const std::vector<size_t>& shape) {
  size_t n = 1;
  for (size_t d : shape) {
    if (d == 0) throw std::invalid_argument("tensor axes must be positive");
    if (d != 0 && n > std::numeric_limits<size_t>::max() / d) {
      throw std::invalid_argument("tensor shape overflows size_t");
    }
    n *= d;
  }
  return n;
}

template class BasicTensor<float>;
template class BasicTensor<uint8_t>;

std::string shape_to_string(const std::vector<size_t>& shape) {
  std::ostringstream out;
  out << '[';
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) out << ',';
    out << shape[i];
  }
  out << ']';
  return out.str();
}

bool all_finite(const Tensor& t) {
  const float* p = t.data();
  for (size_t i = 0; i < t.size(); ++i) {
    if (!std::isfinite(p[i])) return false;
  }
  return true;
}

void require_finite(const Tensor& t, const char* what) {
  if (!all_finite(t)) {
    throw std::runtime_error(std::string("non-finite values in ") + what);
  }
}

}  // namespace sedenet
