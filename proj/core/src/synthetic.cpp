#include "dreamhone/synthetic.hpp"

#include <cmath>
#include <numbers>

namespace dreamhone {

const char* texture_kind_name(TextureKind kind) {
  switch (kind) {
    case TextureKind::HorizontalStripes: return "hstripes";
    case TextureKind::VerticalStripes: return "vstripes";
    case TextureKind::Checker: return "checker";
  }
  return "?";
}

Tensor texture(TextureKind kind, std::size_t height, std::size_t width, const TextureParams& params) {
  if (!(params.period > 0.0)) throw InputError("texture period must be positive");
  const double w = 2.0 * std::numbers::pi / params.period;
  Tensor out(Shape{3, height, width});
  for (std::size_t y = 0; y < height; ++y)
    for (std::size_t x = 0; x < width; ++x) {
      const double sx = std::sin(w * (static_cast<double>(x) + params.phase_x));
      const double sy = std::sin(w * (static_cast<double>(y) + params.phase_y));
      double s = 0.0;
      switch (kind) {
        case TextureKind::HorizontalStripes: s = sy; break;
        case TextureKind::VerticalStripes: s = sx; break;
        case TextureKind::Checker: s = sx * sy; break;
      }
      const double t = 0.5 + 0.5 * s;
      for (std::size_t c = 0; c < 3; ++c)
        out.at(c, y, x) = static_cast<float>((1.0 - t) * params.color_a[c] + t * params.color_b[c]);
    }
  return out;
}

TextureParams random_texture_params(Rng& rng) {
  TextureParams p;
  p.period = rng.uniform(6.0, 16.0);
  p.phase_x = rng.uniform(0.0, p.period);
  p.phase_y = rng.uniform(0.0, p.period);
  for (std::size_t c = 0; c < 3; ++c) {
    p.color_a[c] = static_cast<float>(rng.uniform(0.0, 0.4));
    p.color_b[c] = static_cast<float>(rng.uniform(0.6, 1.0));
  }
  return p;
}

Tensor random_texture(TextureKind kind, std::size_t height, std::size_t width, std::uint64_t seed) {
  Rng rng(seed);
  return texture(kind, height, width, random_texture_params(rng));
}

Tensor constant_image(std::size_t height, std::size_t width, std::array<float, 3> rgb) {
  Tensor out(Shape{3, height, width});
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < height * width; ++i) out[c * height * width + i] = rgb[c];
  return out;
}

Tensor noise_image(std::size_t height, std::size_t width, std::uint64_t seed) {
  Rng rng(seed);
  Tensor out(Shape{3, height, width});
  for (auto& v : out.data()) v = static_cast<float>(rng.uniform());
  return out;
}

}  // namespace dreamhone
