#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "dreamhone/rng.hpp"
#include "dreamhone/tensor.hpp"

namespace dreamhone {

// Procedural textures used as desk-scale style corpora and test fixtures.

enum class TextureKind { HorizontalStripes, VerticalStripes, Checker };

const char* texture_kind_name(TextureKind kind);

struct TextureParams {
  double period = 8.0;  // pixels per cycle
  double phase_x = 0.0;
  double phase_y = 0.0;
  std::array<float, 3> color_a{0.1f, 0.1f, 0.1f};
  std::array<float, 3> color_b{0.9f, 0.9f, 0.9f};
};

/// Smooth (sinusoidal) stripes or checkerboard blending color_a and color_b.
Tensor texture(TextureKind kind, std::size_t height, std::size_t width, const TextureParams& params);

/// Random period in [6, 16), random phases, contrasting color pair.
TextureParams random_texture_params(Rng& rng);

Tensor random_texture(TextureKind kind, std::size_t height, std::size_t width, std::uint64_t seed);

Tensor constant_image(std::size_t height, std::size_t width, std::array<float, 3> rgb);

/// Independent uniform noise per channel value.
Tensor noise_image(std::size_t height, std::size_t width, std::uint64_t seed);

}  // namespace dreamhone
