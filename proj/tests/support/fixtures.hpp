#pragma once

#include <dreamhone/synthetic.hpp>

#include <filesystem>

namespace fixtures {

inline std::filesystem::path dir() { return DREAMHONE_FIXTURES_DIR; }

/// Parameters of the committed 3x64x64 fixture images.
inline dreamhone::TextureParams stripes_params() {
  dreamhone::TextureParams p;
  p.period = 8.0;
  p.color_a = {0.2f, 0.3f, 0.6f};
  p.color_b = {0.9f, 0.8f, 0.3f};
  return p;
}

inline dreamhone::TextureParams checker_params() {
  dreamhone::TextureParams p;
  p.period = 16.0;
  p.color_a = {0.1f, 0.1f, 0.1f};
  p.color_b = {0.9f, 0.9f, 0.9f};
  return p;
}

inline dreamhone::Tensor stripes_source(std::size_t size = 64) {
  return dreamhone::texture(dreamhone::TextureKind::HorizontalStripes, size, size, stripes_params());
}

inline dreamhone::Tensor checker_guide(std::size_t size = 64) {
  return dreamhone::texture(dreamhone::TextureKind::Checker, size, size, checker_params());
}

}  // namespace fixtures
