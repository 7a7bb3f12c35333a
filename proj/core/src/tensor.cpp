#include "dreamhone/tensor.hpp"

#include <sstream>

namespace dreamhone {

std::size_t shape_volume(const Shape& dims) {
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

std::string shape_to_string(const Shape& dims) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < dims.size(); ++i) os << (i ? "," : "") << dims[i];
  os << ']';
  return os.str();
}

namespace {
void validate_dims(const Shape& dims) {
  if (dims.empty()) throw ShapeError("tensor dims must be non-empty");
  for (auto d : dims)
    if (d == 0) throw ShapeError("tensor dims must be positive, got " + shape_to_string(dims));
}
}  // namespace

template <typename T>
BasicTensor<T>::BasicTensor(Shape dims, T fill) : dims_(std::move(dims)) {
  validate_dims(dims_);
  data_.assign(shape_volume(dims_), fill);
}

template <typename T>
BasicTensor<T>::BasicTensor(Shape dims, std::vector<T> data)
    : dims_(std::move(dims)), data_(std::move(data)) {
  validate_dims(dims_);
  if (data_.size() != shape_volume(dims_))
    throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                     " does not match dims " + shape_to_string(dims_));
}

template <typename T>
BasicTensor<T> BasicTensor<T>::reshaped(Shape dims) const {
  return BasicTensor(std::move(dims), data_);
}

template <typename T>
void require_chw(const BasicTensor<T>& t, const char* what) {
  if (t.rank() != 3)
    throw ShapeError(std::string(what) + ": expected [C,H,W], got " + shape_to_string(t.dims()));
}

template class BasicTensor<float>;
template class BasicTensor<double>;
template void require_chw(const BasicTensor<float>&, const char*);
template void require_chw(const BasicTensor<double>&, const char*);

}  // namespace dreamhone
