#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "dreamhone/tensor.hpp"
#include "dreamhone/training.hpp"

namespace dreamhone {

/// Square crop of a source image at one level of the tiling hierarchy.
struct TileRect {
  std::size_t x = 0;
  std::size_t y = 0;
  std::size_t w = 0;
  std::size_t h = 0;
  std::size_t level = 0;

  friend bool operator==(const TileRect&, const TileRect&) = default;
};

struct TileRecord {
  std::string source_id;  // "<category>/<file name>"
  TileRect rect;
  std::string category;

  friend bool operator==(const TileRecord&, const TileRecord&) = default;
};

struct TilingConfig {
  /// One entry per hierarchy level, coarsest first.
  std::vector<std::size_t> tiles_per_level{4, 10, 40};
  std::size_t min_tile = 32;
  std::size_t tile_out_size = 64;
};

inline constexpr int kManifestVersion = 1;

struct Manifest {
  std::vector<std::string> categories;
  std::vector<TileRecord> records;
  std::size_t tile_out_h = 64;
  std::size_t tile_out_w = 64;
  std::uint64_t seed = 0;

  friend bool operator==(const Manifest&, const Manifest&) = default;
};

/// Hierarchical random tiling. At level l the side is drawn uniformly from
/// [m / 2^(l+1), m / 2^l] (m = shorter image side), clamped to at least
/// min_tile; the position is uniform within the image.
std::vector<TileRect> stochastic_tile(std::size_t height, std::size_t width, const TilingConfig& cfg,
                                      std::uint64_t seed);

/// Per-image stream seed, so results do not depend on processing order.
std::uint64_t tile_seed(std::uint64_t seed, const std::string& source_id);

/// Bilinear resample with pixel-center alignment and edge clamping.
Tensor resize_bilinear(const Tensor& image, std::size_t out_h, std::size_t out_w);

/// Crop `rect` out of `image` and resample it to out_h x out_w.
Tensor extract_tile(const Tensor& image, const TileRect& rect, std::size_t out_h, std::size_t out_w);

/// Tiles every PNG under corpus_dir/<category>/. Categories and files are
/// visited in sorted order.
Manifest build_manifest(const std::filesystem::path& corpus_dir, const TilingConfig& cfg, std::uint64_t seed);

/// JSON Lines: a header record, then one record per tile.
std::string manifest_to_jsonl(const Manifest& manifest);
Manifest manifest_from_jsonl(const std::string& text);
void write_manifest(const Manifest& manifest, const std::filesystem::path& path);
Manifest read_manifest(const std::filesystem::path& path);

/// Training view of a manifest. Tiles are cut lazily from `sources`, keyed
/// by source_id.
LabeledSet tile_dataset(const Manifest& manifest, std::map<std::string, Tensor> sources);
/// Loads every referenced source image from corpus_dir.
LabeledSet tile_dataset(const Manifest& manifest, const std::filesystem::path& corpus_dir);

}  // namespace dreamhone
