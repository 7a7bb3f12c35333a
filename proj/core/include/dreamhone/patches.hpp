#pragma once

#include <span>
#include <string>
#include <vector>

#include "dreamhone/network.hpp"

namespace dreamhone {

enum class LossMode {
  DotMax,   // ascend the dot product with the best-matching guide patch
  DistMin,  // descend the squared distance to the nearest guide patch
};

const char* loss_mode_name(LossMode mode);  // "dot_max" / "dist_min"
LossMode parse_loss_mode(const std::string& name);

/// A layer encoding cut into non-overlapping p x p spatial blocks. Each
/// patch is flattened channel-major: index = (c * p + dy) * p + dx.
/// Trailing rows/columns that do not fill a block are dropped.
struct PatchGrid {
  std::string layer_name;
  std::size_t patch_size = 1;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t vector_length = 0;
  std::vector<float> values;  // rows * cols * vector_length

  std::size_t count() const noexcept { return rows * cols; }
  std::span<const float> patch(std::size_t i) const {
    return std::span<const float>(values).subspan(i * vector_length, vector_length);
  }
};

PatchGrid patches_from_activations(const Tensor& activations, const std::string& layer_name,
                                   std::size_t patch_size);

/// forward_to followed by patch extraction.
PatchGrid encode_patches(const Network& net, const Tensor& image, const std::string& layer_name,
                         std::size_t patch_size);

struct PatchMatch {
  std::vector<std::size_t> assignment;  // per canvas patch, the chosen guide patch
  double loss = 0.0;
};

/// Exhaustive best match per canvas patch: maximal dot product (DotMax) or
/// minimal squared distance (DistMin); ties go to the lowest guide index.
/// loss is the sum of the matched dot products or squared distances,
/// accumulated in double in canvas-patch order.
PatchMatch match_patches(const PatchGrid& canvas, const PatchGrid& guide, LossMode mode);

double patch_dot(std::span<const float> a, std::span<const float> b);
double patch_sq_dist(std::span<const float> a, std::span<const float> b);

}  // namespace dreamhone
