#include "dreamhone/patches.hpp"

namespace dreamhone {

const char* loss_mode_name(LossMode mode) {
  return mode == LossMode::DotMax ? "dot_max" : "dist_min";
}

LossMode parse_loss_mode(const std::string& name) {
  if (name == "dot_max") return LossMode::DotMax;
  if (name == "dist_min") return LossMode::DistMin;
  throw InputError("unknown loss mode '" + name + "' (expected dot_max or dist_min)");
}

PatchGrid patches_from_activations(const Tensor& activations, const std::string& layer_name,
                                   std::size_t patch_size) {
  require_chw(activations, "patch grid");
  const std::size_t channels = activations.dim(0);
  const std::size_t h = activations.dim(1);
  const std::size_t w = activations.dim(2);
  if (patch_size == 0) throw InputError("patch_size must be at least 1");
  if (patch_size > h || patch_size > w)
    throw InputError("patch_size " + std::to_string(patch_size) + " exceeds layer '" + layer_name +
                     "' spatial size " + std::to_string(h) + "x" + std::to_string(w));
  PatchGrid g;
  g.layer_name = layer_name;
  g.patch_size = patch_size;
  g.rows = h / patch_size;
  g.cols = w / patch_size;
  g.vector_length = channels * patch_size * patch_size;
  g.values.resize(g.count() * g.vector_length);
  std::size_t k = 0;
  for (std::size_t r = 0; r < g.rows; ++r)
    for (std::size_t c = 0; c < g.cols; ++c)
      for (std::size_t ch = 0; ch < channels; ++ch)
        for (std::size_t dy = 0; dy < patch_size; ++dy)
          for (std::size_t dx = 0; dx < patch_size; ++dx)
            g.values[k++] = activations.at(ch, r * patch_size + dy, c * patch_size + dx);
  return g;
}

PatchGrid encode_patches(const Network& net, const Tensor& image, const std::string& layer_name,
                         std::size_t patch_size) {
  return patches_from_activations(net.forward_to(image, layer_name).activations, layer_name, patch_size);
}

double patch_dot(std::span<const float> a, std::span<const float> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += static_cast<double>(a[k]) * static_cast<double>(b[k]);
  return s;
}

double patch_sq_dist(std::span<const float> a, std::span<const float> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = static_cast<double>(a[k]) - static_cast<double>(b[k]);
    s += d * d;
  }
  return s;
}

PatchMatch match_patches(const PatchGrid& canvas, const PatchGrid& guide, LossMode mode) {
  if (canvas.vector_length != guide.vector_length)
    throw ShapeError("patch vector length mismatch: canvas " + std::to_string(canvas.vector_length) +
                     ", guide " + std::to_string(guide.vector_length));
  if (guide.count() == 0) throw ShapeError("guide grid has no patches");
  PatchMatch m;
  m.assignment.resize(canvas.count());
  for (std::size_t i = 0; i < canvas.count(); ++i) {
    const auto s = canvas.patch(i);
    std::size_t best = 0;
    double best_v = mode == LossMode::DotMax ? patch_dot(s, guide.patch(0)) : patch_sq_dist(s, guide.patch(0));
    for (std::size_t j = 1; j < guide.count(); ++j) {
      if (mode == LossMode::DotMax) {
        const double v = patch_dot(s, guide.patch(j));
        if (v > best_v) {
          best_v = v;
          best = j;
        }
      } else {
        const double v = patch_sq_dist(s, guide.patch(j));
        if (v < best_v) {
          best_v = v;
          best = j;
        }
      }
    }
    m.assignment[i] = best;
    m.loss += best_v;
  }
  return m;
}

}  // namespace dreamhone
