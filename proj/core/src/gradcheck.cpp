#include "dreamhone/gradcheck.hpp"

namespace dreamhone {

TensorD finite_diff(const std::function<double(const TensorD&)>& loss, const TensorD& x, double eps) {
  if (!(eps > 0.0)) throw InputError("finite_diff: eps must be positive");
  TensorD grad(x.dims());
  TensorD probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + eps;
    const double up = loss(probe);
    probe[i] = orig - eps;
    const double down = loss(probe);
    probe[i] = orig;
    grad[i] = (up - down) / (2.0 * eps);
  }
  return grad;
}

}  // namespace dreamhone
