#include "dreamhone/dream.hpp"

#include <algorithm>
#include <cmath>

#include "dreamhone/training.hpp"

namespace dreamhone {

void DreamConfig::validate() const {
  if (!(step_size > 0.0) || !std::isfinite(step_size)) throw InputError("step_size must be positive");
  if (patch_size < 1) throw InputError("patch_size must be at least 1");
  if (!(guide_blend >= 0.0 && guide_blend <= 1.0)) throw InputError("guide_blend must lie in [0, 1]");
  if (layer_name.empty()) throw InputError("layer_name must be set");
}

namespace {

const Shape& spatial_dims(const Network& net, const std::string& layer) {
  const Shape& d = net.layer_dims(layer);
  if (d.size() != 3) throw InputError("layer '" + layer + "' has no spatial extent");
  return d;
}

void check_patch_fits(const Network& net, const std::string& layer, std::size_t patch_size) {
  const Shape& d = spatial_dims(net, layer);
  if (patch_size > std::min(d[1], d[2]))
    throw InputError("patch_size " + std::to_string(patch_size) + " exceeds layer '" + layer +
                     "' spatial size " + std::to_string(d[1]) + "x" + std::to_string(d[2]));
}

}  // namespace

void DreamConfig::validate(const Network& net) const {
  validate();
  check_patch_fits(net, layer_name, patch_size);
}

bool ConfigPatch::empty() const {
  return !layer_name && !mode && !step_size && !patch_size && !jitter && !clamp && !guide_blend;
}

void ConfigPatch::merge(const ConfigPatch& later) {
  if (later.layer_name) layer_name = later.layer_name;
  if (later.mode) mode = later.mode;
  if (later.step_size) step_size = later.step_size;
  if (later.patch_size) patch_size = later.patch_size;
  if (later.jitter) jitter = later.jitter;
  if (later.clamp) clamp = later.clamp;
  if (later.guide_blend) guide_blend = later.guide_blend;
}

DreamConfig ConfigPatch::apply(DreamConfig base) const {
  if (layer_name) base.layer_name = *layer_name;
  if (mode) base.mode = *mode;
  if (step_size) base.step_size = *step_size;
  if (patch_size) base.patch_size = *patch_size;
  if (jitter) base.jitter = *jitter;
  if (clamp) base.clamp = *clamp;
  if (guide_blend) base.guide_blend = *guide_blend;
  return base;
}

std::size_t Schedule::total_iterations() const {
  std::size_t n = 0;
  for (const auto& p : phases) n += p.iterations;
  return n;
}

Tensor roll(const Tensor& image, std::ptrdiff_t dy, std::ptrdiff_t dx) {
  require_chw(image, "roll");
  const auto h = static_cast<std::ptrdiff_t>(image.dim(1));
  const auto w = static_cast<std::ptrdiff_t>(image.dim(2));
  const std::ptrdiff_t sy = ((dy % h) + h) % h;
  const std::ptrdiff_t sx = ((dx % w) + w) % w;
  if (sy == 0 && sx == 0) return image;
  Tensor out(image.dims());
  for (std::size_t c = 0; c < image.dim(0); ++c)
    for (std::ptrdiff_t y = 0; y < h; ++y)
      for (std::ptrdiff_t x = 0; x < w; ++x)
        out.at(c, static_cast<std::size_t>((y + sy) % h), static_cast<std::size_t>((x + sx) % w)) =
            image.at(c, static_cast<std::size_t>(y), static_cast<std::size_t>(x));
  return out;
}

namespace {

struct Evaluation {
  double loss = 0.0;
  double guided = 0.0;
  double unguided = 0.0;
  Tensor upstream;  // d objective / d activations; only when requested
};

// Objective and its gradient at the top layer of the prefix.
Evaluation evaluate_layer(const Tensor& act, const PatchGrid* guide, const DreamConfig& cfg, bool want_grad) {
  Evaluation ev;
  const double blend = cfg.guide_blend;
  if (want_grad) ev.upstream = Tensor(act.dims());
  for (float a : act.data()) ev.unguided += static_cast<double>(a) * static_cast<double>(a);
  if (want_grad && blend < 1.0) {
    const auto w = static_cast<float>(2.0 * (1.0 - blend));
    for (std::size_t i = 0; i < act.size(); ++i) ev.upstream[i] = w * act[i];
  }
  if (blend > 0.0) {
    if (!guide) throw InputError("guided objective needs a guide encoding");
    if (guide->layer_name != cfg.layer_name || guide->patch_size != cfg.patch_size)
      throw InputError("guide encoding does not match the active layer/patch size");
    const PatchGrid grid = patches_from_activations(act, cfg.layer_name, cfg.patch_size);
    const PatchMatch match = match_patches(grid, *guide, cfg.mode);
    ev.guided = match.loss;
    if (want_grad) {
      const std::size_t p = cfg.patch_size;
      const std::size_t channels = act.dim(0);
      for (std::size_t i = 0; i < grid.count(); ++i) {
        const auto g = guide->patch(match.assignment[i]);
        const auto s = grid.patch(i);
        const std::size_t r = i / grid.cols;
        const std::size_t c = i % grid.cols;
        std::size_t k = 0;
        for (std::size_t ch = 0; ch < channels; ++ch)
          for (std::size_t dy = 0; dy < p; ++dy)
            for (std::size_t dx = 0; dx < p; ++dx, ++k) {
              const double d = cfg.mode == LossMode::DotMax
                                   ? static_cast<double>(g[k])
                                   : -2.0 * (static_cast<double>(s[k]) - static_cast<double>(g[k]));
              ev.upstream.at(ch, r * p + dy, c * p + dx) += static_cast<float>(blend * d);
            }
      }
    }
  }
  const double sign = cfg.mode == LossMode::DotMax ? 1.0 : -1.0;
  ev.loss = blend * sign * ev.guided + (1.0 - blend) * ev.unguided;
  return ev;
}

}  // namespace

double dream_objective(const Network& net, const Tensor& canvas, const PatchGrid* guide,
                       const DreamConfig& cfg) {
  const Tensor act = net.forward_to(canvas, cfg.layer_name).activations;
  return evaluate_layer(act, guide, cfg, false).loss;
}

StepResult dream_step(const Network& net, const Tensor& canvas, const PatchGrid* guide,
                      const DreamConfig& cfg, Rng& rng) {
  cfg.validate(net);
  if (canvas.dims() != net.input_dims())
    throw ShapeError("canvas dims " + shape_to_string(canvas.dims()) + " do not match network input " +
                     shape_to_string(net.input_dims()));
  std::ptrdiff_t dy = 0;
  std::ptrdiff_t dx = 0;
  if (cfg.jitter > 0) {
    const auto j = static_cast<std::int64_t>(cfg.jitter);
    dy = rng.uniform_int(-j, j);
    dx = rng.uniform_int(-j, j);
  }
  Tensor shifted = roll(canvas, dy, dx);
  const auto layers = net.prefix(cfg.layer_name);
  const auto trace = forward_trace<float>(layers, shifted);
  const Evaluation ev = evaluate_layer(trace.back(), guide, cfg, true);
  const Tensor grad = backward_trace<float>(layers, trace, ev.upstream);

  double sum_sq = 0.0;
  double sum_abs = 0.0;
  for (float g : grad.data()) {
    sum_sq += static_cast<double>(g) * static_cast<double>(g);
    sum_abs += std::abs(static_cast<double>(g));
  }
  const double mean_abs = sum_abs / static_cast<double>(grad.size());
  const double scale = cfg.step_size / (mean_abs + 1e-8);
  for (std::size_t i = 0; i < shifted.size(); ++i)
    shifted[i] = static_cast<float>(static_cast<double>(shifted[i]) + scale * static_cast<double>(grad[i]));

  StepResult out;
  out.canvas = roll(shifted, -dy, -dx);
  if (cfg.clamp)
    for (auto& v : out.canvas.data()) v = std::clamp(v, 0.0f, 1.0f);
  out.loss = ev.loss;
  out.guided_loss = ev.guided;
  out.unguided_loss = ev.unguided;
  out.gradient_norm = std::sqrt(sum_sq);
  return out;
}

// ---------------------------------------------------------------------------

DreamSession::DreamSession(Network net, Tensor source, std::optional<Tensor> guide, Schedule schedule,
                           std::optional<HoneOptions> hone)
    : net_(std::move(net)),
      canvas_(std::move(source)),
      guide_(std::move(guide)),
      schedule_(std::move(schedule)),
      hone_(std::move(hone)),
      rng_(schedule_.phases.empty() ? 0 : schedule_.phases.front().seed) {
  if (schedule_.phases.empty()) throw InputError("schedule has no phases");
  if (canvas_.dims() != net_.input_dims())
    throw ShapeError("source dims " + shape_to_string(canvas_.dims()) + " do not match network input " +
                     shape_to_string(net_.input_dims()));
  if (guide_ && guide_->dims() != net_.input_dims())
    throw ShapeError("guide dims " + shape_to_string(guide_->dims()) + " do not match network input " +
                     shape_to_string(net_.input_dims()));
  for (const auto& p : schedule_.phases) {
    p.validate(net_);
    if (p.guide_blend > 0.0 && !guide_) throw InputError("a guided phase needs a guide image");
  }
  if (hone_ && hone_->inner_steps > 0 && hone_->images.empty())
    throw InputError("in-loop training needs a non-empty tile set");
  std::size_t end = 0;
  for (const auto& p : schedule_.phases) phase_end_.push_back(end += p.iterations);
  total_ = end;
}

std::size_t DreamSession::started() const {
  std::lock_guard lock(mu_);
  return started_;
}

std::size_t DreamSession::phase_of(std::size_t i) const {
  for (std::size_t p = 0; p < phase_end_.size(); ++p)
    if (i < phase_end_[p]) return p;
  // Past the end: the last phase that actually ran, or phase 0.
  for (std::size_t p = phase_end_.size(); p-- > 0;)
    if (schedule_.phases[p].iterations > 0) return p;
  return 0;
}

DreamConfig DreamSession::config_for(std::size_t i) const {
  return overrides_.apply(schedule_.phases[phase_of(i)]);
}

void DreamSession::validate_patch(const ConfigPatch& patch) const {
  if (patch.step_size && (!(*patch.step_size > 0.0) || !std::isfinite(*patch.step_size)))
    throw InputError("step_size must be positive");
  if (patch.guide_blend && !(*patch.guide_blend >= 0.0 && *patch.guide_blend <= 1.0))
    throw InputError("guide_blend must lie in [0, 1]");
  if (patch.guide_blend && *patch.guide_blend > 0.0 && !guide_)
    throw InputError("session has no guide image");
  if (patch.patch_size && *patch.patch_size < 1) throw InputError("patch_size must be at least 1");
  if (patch.layer_name) spatial_dims(net_, *patch.layer_name);

  // The patch must yield a valid config for every phase it may govern.
  for (std::size_t p = 0; p < schedule_.phases.size(); ++p) {
    DreamConfig cfg = schedule_.phases[p];
    for (const auto& q : pending_) cfg = q.apply(cfg);
    cfg = patch.apply(overrides_.apply(cfg));
    check_patch_fits(net_, cfg.layer_name, cfg.patch_size);
  }
}

PatchAck DreamSession::submit_patch(const ConfigPatch& patch) {
  std::lock_guard lock(mu_);
  if (started_ >= total_) throw SessionFinishedError();
  validate_patch(patch);
  if (!patch.empty()) pending_.push_back(patch);
  return PatchAck{started_};
}

const PatchGrid* DreamSession::guide_for(const DreamConfig& cfg) {
  if (cfg.guide_blend <= 0.0) return nullptr;
  if (guide_stale_ || !guide_grid_ || guide_grid_->layer_name != cfg.layer_name ||
      guide_grid_->patch_size != cfg.patch_size) {
    guide_grid_ = encode_patches(net_, *guide_, cfg.layer_name, cfg.patch_size);
    guide_stale_ = false;
    ++guide_encodes_;
  }
  return &*guide_grid_;
}

Frame DreamSession::advance() {
  std::size_t i;
  {
    std::lock_guard lock(mu_);
    if (started_ >= total_) throw SessionFinishedError();
    for (const auto& p : pending_) overrides_.merge(p);
    pending_.clear();
    i = started_++;
  }
  const DreamConfig cfg = config_for(i);
  const std::size_t phase = phase_of(i);
  Frame frame;
  frame.iteration = i;
  frame.phase = phase;
  frame.canvas = std::make_shared<const Tensor>(canvas_);

  const PatchGrid* guide = guide_for(cfg);
  StepResult step = dream_step(net_, canvas_, guide, cfg, rng_);
  canvas_ = std::move(step.canvas);
  frame.loss = step.loss;
  trajectory_.push_back({i, step.loss, phase});

  if (hone_ && hone_->inner_steps > 0) {
    for (std::size_t s = 0; s < hone_->inner_steps; ++s)
      hone_losses_.push_back(sgd_step(net_, hone_->images, hone_->labels, hone_->inner_lr));
    guide_stale_ = true;
  }
  return frame;
}

Frame DreamSession::final_frame() {
  if (final_) return *final_;
  if (has_next()) throw InputError("final frame requested before the run completed");
  const DreamConfig cfg = config_for(total_);
  Frame frame;
  frame.iteration = total_;
  frame.phase = phase_of(total_);
  frame.canvas = std::make_shared<const Tensor>(canvas_);
  frame.loss = dream_objective(net_, canvas_, guide_for(cfg), cfg);
  final_ = frame;
  return frame;
}

namespace {

DreamResult drive(DreamSession& session, const FrameSink& sink) {
  while (session.has_next()) {
    Frame f = session.advance();
    if (sink) sink(f);
  }
  const Frame last = session.final_frame();
  DreamResult r;
  r.canvas = session.canvas();
  r.trajectory = session.trajectory();
  r.final_loss = last.loss;
  r.final_phase = last.phase;
  r.guide_encodes = session.guide_encodes();
  return r;
}

}  // namespace

DreamResult run_dream(const Network& net, const Tensor& source, const std::optional<Tensor>& guide,
                      const Schedule& schedule, const FrameSink& sink) {
  DreamSession session(net, source, guide, schedule);
  return drive(session, sink);
}

HoneResult hone_in_loop(const Network& net, const Tensor& source, const std::optional<Tensor>& guide,
                        const Schedule& schedule, const HoneOptions& hone, const FrameSink& sink) {
  if (hone.images.empty() && hone.inner_steps > 0) throw InputError("in-loop training needs a non-empty tile set");
  if (hone.images.size() != hone.labels.size()) throw InputError("tile images and labels differ in count");
  DreamSession session(net, source, guide, schedule, hone);
  DreamResult dream = drive(session, sink);
  return HoneResult{std::move(dream), session.network(), session.hone_losses()};
}

}  // namespace dreamhone
