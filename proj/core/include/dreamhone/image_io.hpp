#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dreamhone/tensor.hpp"

namespace dreamhone {

/// Interleaved 8-bit RGB raster, row-major.
struct Rgb8Image {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;  // width * height * 3
};

/// [3,H,W] tensor in [0,1] to 8-bit RGB; values are clamped then rounded.
Rgb8Image to_rgb8(const Tensor& image);
Tensor from_rgb8(const Rgb8Image& image);

/// PNG codec. Decoding accepts gray/palette/alpha/16-bit inputs and reduces
/// them to 8-bit RGB; encoding always writes 8-bit RGB.
std::string encode_png(const Tensor& image);
Tensor decode_png(const std::string& bytes, const std::string& name = "<memory>");

Tensor load_png(const std::filesystem::path& path);
void save_png(const Tensor& image, const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& bytes);

}  // namespace dreamhone
