#pragma once

#include <functional>

#include "dreamhone/tensor.hpp"

namespace dreamhone {

/// Central-difference gradient of `loss` at `x`, one coordinate at a time.
/// Runs in double precision; used as ground truth for the analytic
/// backward pass.
TensorD finite_diff(const std::function<double(const TensorD&)>& loss, const TensorD& x, double eps);

}  // namespace dreamhone
