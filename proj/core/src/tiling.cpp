#include "dreamhone/tiling.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <nlohmann/json.hpp>
#include <sstream>

#include "dreamhone/image_io.hpp"
#include "dreamhone/rng.hpp"

namespace dreamhone {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<TileRect> stochastic_tile(std::size_t height, std::size_t width, const TilingConfig& cfg,
                                      std::uint64_t seed) {
  if (cfg.tiles_per_level.empty()) throw InputError("tiling needs at least one level");
  if (cfg.min_tile == 0) throw InputError("min_tile must be positive");
  const std::size_t m = std::min(height, width);
  if (cfg.min_tile > m)
    throw InputError("min_tile " + std::to_string(cfg.min_tile) + " larger than image " +
                     std::to_string(height) + "x" + std::to_string(width));
  Rng rng(seed);
  std::vector<TileRect> rects;
  for (std::size_t level = 0; level < cfg.tiles_per_level.size(); ++level) {
    const std::size_t lo = std::max(m >> (level + 1), cfg.min_tile);
    const std::size_t hi = std::min(std::max(m >> level, cfg.min_tile), m);
    for (std::size_t i = 0; i < cfg.tiles_per_level[level]; ++i) {
      TileRect r;
      r.level = level;
      r.w = r.h = static_cast<std::size_t>(rng.uniform_int(static_cast<std::int64_t>(lo), static_cast<std::int64_t>(hi)));
      r.x = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(width - r.w)));
      r.y = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(height - r.h)));
      rects.push_back(r);
    }
  }
  return rects;
}

std::uint64_t tile_seed(std::uint64_t seed, const std::string& source_id) {
  return derive_seed(seed, source_id);
}

namespace {

// Source coordinate of output sample i when n_in samples span n_out.
struct Tap {
  std::size_t i0, i1;
  double t;
};

std::vector<Tap> taps(std::size_t n_in, std::size_t n_out) {
  std::vector<Tap> out(n_out);
  const double scale = static_cast<double>(n_in) / static_cast<double>(n_out);
  for (std::size_t i = 0; i < n_out; ++i) {
    double s = (static_cast<double>(i) + 0.5) * scale - 0.5;
    s = std::clamp(s, 0.0, static_cast<double>(n_in - 1));
    const auto i0 = static_cast<std::size_t>(std::floor(s));
    const std::size_t i1 = std::min(i0 + 1, n_in - 1);
    out[i] = {i0, i1, s - static_cast<double>(i0)};
  }
  return out;
}

Tensor resample_region(const Tensor& image, std::size_t x0, std::size_t y0, std::size_t w, std::size_t h,
                       std::size_t out_h, std::size_t out_w) {
  const auto ty = taps(h, out_h);
  const auto tx = taps(w, out_w);
  const std::size_t channels = image.dim(0);
  Tensor out(Shape{channels, out_h, out_w});
  for (std::size_t c = 0; c < channels; ++c)
    for (std::size_t oy = 0; oy < out_h; ++oy) {
      const auto& a = ty[oy];
      for (std::size_t ox = 0; ox < out_w; ++ox) {
        const auto& b = tx[ox];
        const double p00 = image.at(c, y0 + a.i0, x0 + b.i0);
        const double p01 = image.at(c, y0 + a.i0, x0 + b.i1);
        const double p10 = image.at(c, y0 + a.i1, x0 + b.i0);
        const double p11 = image.at(c, y0 + a.i1, x0 + b.i1);
        const double top = p00 + (p01 - p00) * b.t;
        const double bot = p10 + (p11 - p10) * b.t;
        out.at(c, oy, ox) = static_cast<float>(top + (bot - top) * a.t);
      }
    }
  return out;
}

}  // namespace

Tensor resize_bilinear(const Tensor& image, std::size_t out_h, std::size_t out_w) {
  require_chw(image, "resize_bilinear");
  if (out_h == 0 || out_w == 0) throw InputError("resize target must be positive");
  return resample_region(image, 0, 0, image.dim(2), image.dim(1), out_h, out_w);
}

Tensor extract_tile(const Tensor& image, const TileRect& rect, std::size_t out_h, std::size_t out_w) {
  require_chw(image, "extract_tile");
  if (rect.w == 0 || rect.h == 0 || rect.x + rect.w > image.dim(2) || rect.y + rect.h > image.dim(1))
    throw InputError("tile rect (" + std::to_string(rect.x) + "," + std::to_string(rect.y) + "," +
                     std::to_string(rect.w) + "," + std::to_string(rect.h) + ") outside image " +
                     shape_to_string(image.dims()));
  if (out_h == 0 || out_w == 0) throw InputError("tile output size must be positive");
  return resample_region(image, rect.x, rect.y, rect.w, rect.h, out_h, out_w);
}

namespace {

bool is_png(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".png";
}

std::vector<fs::path> sorted_entries(const fs::path& dir, bool directories) {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (directories ? e.is_directory() : (e.is_regular_file() && is_png(e.path()))) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

Manifest build_manifest(const fs::path& corpus_dir, const TilingConfig& cfg, std::uint64_t seed) {
  if (!fs::is_directory(corpus_dir)) throw InputError("corpus directory '" + corpus_dir.string() + "' not found");
  Manifest manifest;
  manifest.seed = seed;
  manifest.tile_out_h = manifest.tile_out_w = cfg.tile_out_size;
  for (const auto& cat_dir : sorted_entries(corpus_dir, true)) {
    const std::string category = cat_dir.filename().string();
    const auto images = sorted_entries(cat_dir, false);
    if (images.empty()) throw InputError("category '" + category + "' contains no PNG images");
    manifest.categories.push_back(category);
    for (const auto& path : images) {
      const std::string source_id = category + "/" + path.filename().string();
      const Tensor image = load_png(path);
      auto rects = stochastic_tile(image.dim(1), image.dim(2), cfg, tile_seed(seed, source_id));
      for (const auto& r : rects) manifest.records.push_back({source_id, r, category});
    }
  }
  if (manifest.categories.empty()) throw InputError("corpus '" + corpus_dir.string() + "' has no categories");
  return manifest;
}

std::string manifest_to_jsonl(const Manifest& manifest) {
  std::ostringstream os;
  json header = {{"version", kManifestVersion},
                 {"categories", manifest.categories},
                 {"tile_out_size", {manifest.tile_out_h, manifest.tile_out_w}},
                 {"seed", manifest.seed}};
  os << header.dump() << '\n';
  for (const auto& r : manifest.records) {
    json j = {{"source_id", r.source_id}, {"x", r.rect.x}, {"y", r.rect.y}, {"w", r.rect.w},
              {"h", r.rect.h}, {"level", r.rect.level}, {"category", r.category}};
    os << j.dump() << '\n';
  }
  return os.str();
}

Manifest manifest_from_jsonl(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  Manifest m;
  std::size_t line_no = 0;
  std::uint64_t offset = 0;
  bool have_header = false;
  while (std::getline(is, line)) {
    ++line_no;
    const std::uint64_t line_offset = offset;
    offset += line.size() + 1;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      if (!have_header) {
        const int version = j.at("version").get<int>();
        if (version != kManifestVersion)
          throw VersionError("manifest version " + std::to_string(version) + " is not supported");
        m.categories = j.at("categories").get<std::vector<std::string>>();
        const auto size = j.at("tile_out_size").get<std::vector<std::size_t>>();
        if (size.size() != 2) throw InputError("tile_out_size must have two entries");
        m.tile_out_h = size[0];
        m.tile_out_w = size[1];
        m.seed = j.at("seed").get<std::uint64_t>();
        have_header = true;
        continue;
      }
      TileRecord r;
      r.source_id = j.at("source_id").get<std::string>();
      r.rect.x = j.at("x");
      r.rect.y = j.at("y");
      r.rect.w = j.at("w");
      r.rect.h = j.at("h");
      r.rect.level = j.at("level");
      r.category = j.at("category").get<std::string>();
      if (std::find(m.categories.begin(), m.categories.end(), r.category) == m.categories.end())
        throw InputError("record category '" + r.category + "' not declared in header");
      m.records.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw FormatError("manifest line " + std::to_string(line_no) + ": " + e.what(), line_offset);
    } catch (const InputError& e) {
      throw FormatError("manifest line " + std::to_string(line_no) + ": " + e.what(), line_offset);
    }
  }
  if (!have_header) throw FormatError("manifest has no header", 0);
  return m;
}

void write_manifest(const Manifest& manifest, const fs::path& path) {
  write_file(path, manifest_to_jsonl(manifest));
}

Manifest read_manifest(const fs::path& path) { return manifest_from_jsonl(read_file(path)); }

LabeledSet tile_dataset(const Manifest& manifest, std::map<std::string, Tensor> sources) {
  if (manifest.records.empty()) throw InputError("manifest has no tiles");
  struct Item {
    const Tensor* source;
    TileRect rect;
  };
  auto owned = std::make_shared<std::map<std::string, Tensor>>(std::move(sources));
  auto items = std::make_shared<std::vector<Item>>();
  LabeledSet set;
  set.categories = manifest.categories;
  for (const auto& r : manifest.records) {
    const auto cat = std::find(manifest.categories.begin(), manifest.categories.end(), r.category);
    if (cat == manifest.categories.end()) throw InputError("label '" + r.category + "' outside category set");
    const auto src = owned->find(r.source_id);
    if (src == owned->end()) throw InputError("no image for source '" + r.source_id + "'");
    const TileRect& rect = r.rect;
    if (rect.x + rect.w > src->second.dim(2) || rect.y + rect.h > src->second.dim(1))
      throw InputError("tile of '" + r.source_id + "' lies outside the image");
    set.labels.push_back(static_cast<int>(cat - manifest.categories.begin()));
    items->push_back({&src->second, rect});
  }
  const std::size_t oh = manifest.tile_out_h;
  const std::size_t ow = manifest.tile_out_w;
  set.image = [owned, items, oh, ow](std::size_t i) {
    const Item& it = items->at(i);
    return extract_tile(*it.source, it.rect, oh, ow);
  };
  return set;
}

LabeledSet tile_dataset(const Manifest& manifest, const fs::path& corpus_dir) {
  std::map<std::string, Tensor> sources;
  for (const auto& r : manifest.records)
    if (!sources.count(r.source_id)) sources.emplace(r.source_id, load_png(corpus_dir / r.source_id));
  return tile_dataset(manifest, std::move(sources));
}

}  // namespace dreamhone
