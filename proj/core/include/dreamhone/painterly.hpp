#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dreamhone/dream.hpp"

namespace dreamhone {

/// One brush stroke: a capsule of the given length and width centred at
/// (x, y) in pixel coordinates (pixel (i, j) covers [i, i+1) x [j, j+1)).
struct StrokeSpec {
  double x = 0.0;
  double y = 0.0;
  double orientation = 0.0;  // radians, along the stroke's long axis
  double length = 1.0;
  double width = 1.0;
  std::array<float, 3> color{0.0f, 0.0f, 0.0f};
  double opacity = 1.0;

  friend bool operator==(const StrokeSpec&, const StrokeSpec&) = default;
};

enum class OrientationSource { ImageGradient, Fixed };

struct PaintConfig {
  double stroke_density = 50.0;  // strokes per 1000 pixels
  double length_min = 8.0;
  double length_max = 24.0;
  double width_min = 3.0;
  double width_max = 9.0;
  OrientationSource orientation_source = OrientationSource::ImageGradient;
  /// Used in Fixed mode and wherever the luminance gradient vanishes.
  double fixed_angle = 0.7853981633974483;
  double opacity = 0.85;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Sobel luminance gradient at pixel (x, y), edges clamped.
std::array<double, 2> luminance_gradient(const Tensor& image, std::size_t x, std::size_t y);

/// round(density * H * W / 1000) strokes with uniform centres, colour
/// sampled under the centre and orientation perpendicular to the local
/// luminance gradient. Returned widest first (stable), which is also the
/// render order.
std::vector<StrokeSpec> plan_strokes(const Tensor& image, const PaintConfig& cfg);

/// Composites strokes in list order with alpha = opacity * coverage, where
/// coverage falls off linearly over a one-pixel band at the capsule edge.
Tensor render_strokes(const Tensor& canvas, std::span<const StrokeSpec> strokes);

/// `rounds` times: dream on the current image, then paint strokes planned
/// from the dream output over it. Round r paints with seed cfg.seed + r.
Tensor alternate_passes(const Network& net, const Tensor& source, const std::optional<Tensor>& guide,
                        const Schedule& schedule, const PaintConfig& cfg, std::size_t rounds);

std::string strokes_to_jsonl(std::span<const StrokeSpec> strokes);

}  // namespace dreamhone
