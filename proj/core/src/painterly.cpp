#include "dreamhone/painterly.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>
#include <numbers>

#include "dreamhone/rng.hpp"

namespace dreamhone {

void PaintConfig::validate() const {
  if (!(stroke_density > 0.0)) throw InputError("stroke_density must be positive");
  if (!(length_min <= length_max)) throw InputError("length range must be ordered");
  if (!(width_min <= width_max)) throw InputError("width range must be ordered");
  if (!(width_min >= 1.0)) throw InputError("stroke width must be at least 1 pixel");
  if (!(opacity >= 0.0 && opacity <= 1.0)) throw InputError("opacity must lie in [0, 1]");
}

namespace {

double luminance(const Tensor& img, std::size_t x, std::size_t y) {
  return 0.299 * img.at(0, y, x) + 0.587 * img.at(1, y, x) + 0.114 * img.at(2, y, x);
}

void require_rgb(const Tensor& image, const char* what) {
  require_chw(image, what);
  if (image.dim(0) != 3) throw ShapeError(std::string(what) + ": expected 3 channels");
}

}  // namespace

std::array<double, 2> luminance_gradient(const Tensor& image, std::size_t x, std::size_t y) {
  const std::size_t h = image.dim(1);
  const std::size_t w = image.dim(2);
  auto L = [&](std::ptrdiff_t dx, std::ptrdiff_t dy) {
    const auto xx = std::clamp<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(x) + dx, 0, static_cast<std::ptrdiff_t>(w) - 1);
    const auto yy = std::clamp<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(y) + dy, 0, static_cast<std::ptrdiff_t>(h) - 1);
    return luminance(image, static_cast<std::size_t>(xx), static_cast<std::size_t>(yy));
  };
  const double gx = (L(1, -1) + 2 * L(1, 0) + L(1, 1)) - (L(-1, -1) + 2 * L(-1, 0) + L(-1, 1));
  const double gy = (L(-1, 1) + 2 * L(0, 1) + L(1, 1)) - (L(-1, -1) + 2 * L(0, -1) + L(1, -1));
  return {gx, gy};
}

std::vector<StrokeSpec> plan_strokes(const Tensor& image, const PaintConfig& cfg) {
  require_rgb(image, "plan_strokes");
  cfg.validate();
  const std::size_t h = image.dim(1);
  const std::size_t w = image.dim(2);
  const auto count = static_cast<std::size_t>(std::llround(cfg.stroke_density * static_cast<double>(h * w) / 1000.0));
  Rng rng(cfg.seed);
  std::vector<StrokeSpec> strokes;
  strokes.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    StrokeSpec s;
    s.x = rng.uniform(0.0, static_cast<double>(w));
    s.y = rng.uniform(0.0, static_cast<double>(h));
    s.length = rng.uniform(cfg.length_min, cfg.length_max);
    s.width = rng.uniform(cfg.width_min, cfg.width_max);
    s.length = std::max(s.length, s.width);
    const auto px = std::min(static_cast<std::size_t>(s.x), w - 1);
    const auto py = std::min(static_cast<std::size_t>(s.y), h - 1);
    s.orientation = cfg.fixed_angle;
    if (cfg.orientation_source == OrientationSource::ImageGradient) {
      const auto [gx, gy] = luminance_gradient(image, px, py);
      if (std::hypot(gx, gy) >= 1e-6) s.orientation = std::atan2(gy, gx) + std::numbers::pi / 2.0;
    }
    for (std::size_t c = 0; c < 3; ++c) s.color[c] = image.at(c, py, px);
    s.opacity = cfg.opacity;
    strokes.push_back(s);
  }
  std::stable_sort(strokes.begin(), strokes.end(),
                   [](const StrokeSpec& a, const StrokeSpec& b) { return a.width > b.width; });
  return strokes;
}

Tensor render_strokes(const Tensor& canvas, std::span<const StrokeSpec> strokes) {
  require_rgb(canvas, "render_strokes");
  Tensor out = canvas;
  const auto h = static_cast<std::ptrdiff_t>(canvas.dim(1));
  const auto w = static_cast<std::ptrdiff_t>(canvas.dim(2));
  for (const auto& s : strokes) {
    const double radius = s.width / 2.0;
    const double half = std::max(0.0, (s.length - s.width) / 2.0);
    const double ux = std::cos(s.orientation);
    const double uy = std::sin(s.orientation);
    const double reach = half + radius + 1.0;
    const auto x0 = std::max<std::ptrdiff_t>(0, static_cast<std::ptrdiff_t>(std::floor(s.x - reach)));
    const auto x1 = std::min<std::ptrdiff_t>(w - 1, static_cast<std::ptrdiff_t>(std::ceil(s.x + reach)));
    const auto y0 = std::max<std::ptrdiff_t>(0, static_cast<std::ptrdiff_t>(std::floor(s.y - reach)));
    const auto y1 = std::min<std::ptrdiff_t>(h - 1, static_cast<std::ptrdiff_t>(std::ceil(s.y + reach)));
    for (std::ptrdiff_t y = y0; y <= y1; ++y)
      for (std::ptrdiff_t x = x0; x <= x1; ++x) {
        const double rx = static_cast<double>(x) + 0.5 - s.x;
        const double ry = static_cast<double>(y) + 0.5 - s.y;
        const double along = std::clamp(rx * ux + ry * uy, -half, half);
        const double dist = std::hypot(rx - along * ux, ry - along * uy);
        const double coverage = std::clamp(radius + 0.5 - dist, 0.0, 1.0);
        const double alpha = s.opacity * coverage;
        if (alpha <= 0.0) continue;
        for (std::size_t c = 0; c < 3; ++c) {
          float& v = out.at(c, static_cast<std::size_t>(y), static_cast<std::size_t>(x));
          const double blended = static_cast<double>(v) * (1.0 - alpha) + static_cast<double>(s.color[c]) * alpha;
          v = std::clamp(static_cast<float>(blended), 0.0f, 1.0f);
        }
      }
  }
  return out;
}

Tensor alternate_passes(const Network& net, const Tensor& source, const std::optional<Tensor>& guide,
                        const Schedule& schedule, const PaintConfig& cfg, std::size_t rounds) {
  cfg.validate();
  Tensor current = source;
  for (std::size_t r = 0; r < rounds; ++r) {
    const Tensor dreamed = run_dream(net, current, guide, schedule).canvas;
    PaintConfig round_cfg = cfg;
    round_cfg.seed = cfg.seed + r;
    const auto strokes = plan_strokes(dreamed, round_cfg);
    current = render_strokes(dreamed, strokes);
  }
  return current;
}

std::string strokes_to_jsonl(std::span<const StrokeSpec> strokes) {
  std::string out;
  for (const auto& s : strokes) {
    nlohmann::json j = {{"x", s.x},
                        {"y", s.y},
                        {"orientation", s.orientation},
                        {"length", s.length},
                        {"width", s.width},
                        {"color", {s.color[0], s.color[1], s.color[2]}},
                        {"opacity", s.opacity}};
    out += j.dump() + "\n";
  }
  return out;
}

}  // namespace dreamhone
