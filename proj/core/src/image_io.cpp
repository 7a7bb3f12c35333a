#include "dreamhone/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

namespace dreamhone {

Rgb8Image to_rgb8(const Tensor& image) {
  require_chw(image, "to_rgb8");
  if (image.dim(0) != 3) throw ShapeError("to_rgb8 expects 3 channels, got " + shape_to_string(image.dims()));
  Rgb8Image out;
  out.height = image.dim(1);
  out.width = image.dim(2);
  out.pixels.resize(out.width * out.height * 3);
  for (std::size_t y = 0; y < out.height; ++y)
    for (std::size_t x = 0; x < out.width; ++x)
      for (std::size_t c = 0; c < 3; ++c) {
        const float v = std::clamp(image.at(c, y, x), 0.0f, 1.0f);
        out.pixels[(y * out.width + x) * 3 + c] = static_cast<std::uint8_t>(std::lround(v * 255.0f));
      }
  return out;
}

Tensor from_rgb8(const Rgb8Image& image) {
  Tensor out(Shape{3, image.height, image.width});
  for (std::size_t y = 0; y < image.height; ++y)
    for (std::size_t x = 0; x < image.width; ++x)
      for (std::size_t c = 0; c < 3; ++c)
        out.at(c, y, x) = static_cast<float>(image.pixels[(y * image.width + x) * 3 + c]) / 255.0f;
  return out;
}

namespace {

struct ReadCursor {
  const std::string* bytes;
  std::size_t pos;
};

void read_callback(png_structp png, png_bytep data, png_size_t length) {
  auto* cur = static_cast<ReadCursor*>(png_get_io_ptr(png));
  if (cur->pos + length > cur->bytes->size()) png_error(png, "unexpected end of PNG data");
  std::memcpy(data, cur->bytes->data() + cur->pos, length);
  cur->pos += length;
}

void write_callback(png_structp png, png_bytep data, png_size_t length) {
  auto* out = static_cast<std::string*>(png_get_io_ptr(png));
  out->append(reinterpret_cast<const char*>(data), length);
}

void flush_callback(png_structp) {}

struct PngError {
  char message[256] = {};
};

// libpng reports errors through longjmp; the message is kept for rethrowing
// as an exception once control is back in C++ frames.
[[noreturn]] void error_callback(png_structp png, png_const_charp msg) {
  auto* err = static_cast<PngError*>(png_get_error_ptr(png));
  std::strncpy(err->message, msg, sizeof(err->message) - 1);
  png_longjmp(png, 1);
}

void warning_callback(png_structp, png_const_charp) {}

}  // namespace

std::string encode_png(const Tensor& image) {
  const Rgb8Image raster = to_rgb8(image);
  std::string out;
  PngError err;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &err, error_callback, warning_callback);
  if (!png) throw Error("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw Error("png_create_info_struct failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(std::string("PNG encoding failed: ") + err.message);
  }
  {
    png_set_write_fn(png, &out, write_callback, flush_callback);
    png_set_IHDR(png, info, static_cast<png_uint_32>(raster.width), static_cast<png_uint_32>(raster.height), 8,
                 PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (std::size_t y = 0; y < raster.height; ++y)
      png_write_row(png, raster.pixels.data() + y * raster.width * 3);
    png_write_end(png, nullptr);
  }
  png_destroy_write_struct(&png, &info);
  return out;
}

Tensor decode_png(const std::string& bytes, const std::string& name) {
  if (bytes.size() < 8 || png_sig_cmp(reinterpret_cast<png_const_bytep>(bytes.data()), 0, 8) != 0)
    throw InputError("'" + name + "' is not a PNG file");
  PngError err;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &err, error_callback, warning_callback);
  if (!png) throw Error("png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw Error("png_create_info_struct failed");
  }
  Rgb8Image raster;
  std::vector<png_bytep> rows;
  ReadCursor cur{&bytes, 0};
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw InputError("cannot decode '" + name + "': " + err.message);
  }
  {
    png_set_read_fn(png, &cur, read_callback);
    png_read_info(png, info);
    const auto color = png_get_color_type(png, info);
    const auto depth = png_get_bit_depth(png, info);
    if (depth == 16) png_set_strip_16(png);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_strip_alpha(png);
    png_set_interlace_handling(png);
    png_read_update_info(png, info);
    raster.width = png_get_image_width(png, info);
    raster.height = png_get_image_height(png, info);
    if (png_get_rowbytes(png, info) != raster.width * 3) png_error(png, "unsupported PNG pixel layout");
    raster.pixels.resize(raster.width * raster.height * 3);
    rows.resize(raster.height);
    for (std::size_t y = 0; y < raster.height; ++y) rows[y] = raster.pixels.data() + y * raster.width * 3;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
  }
  png_destroy_read_struct(&png, &info, nullptr);
  if (raster.width == 0 || raster.height == 0) throw InputError("'" + name + "' has no pixels");
  return from_rgb8(raster);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read '" + path.string() + "'");
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw InputError("failed writing '" + path.string() + "'");
}

Tensor load_png(const std::filesystem::path& path) { return decode_png(read_file(path), path.string()); }

void save_png(const Tensor& image, const std::filesystem::path& path) { write_file(path, encode_png(image)); }

}  // namespace dreamhone
