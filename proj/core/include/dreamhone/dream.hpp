#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "dreamhone/network.hpp"
#include "dreamhone/patches.hpp"
#include "dreamhone/rng.hpp"

namespace dreamhone {

/// Knobs of one dream phase.
struct DreamConfig {
  std::string layer_name = "relu2";
  LossMode mode = LossMode::DotMax;
  double step_size = 0.01;
  std::size_t iterations = 100;
  std::size_t patch_size = 3;
  std::size_t jitter = 2;  // pixels, wraparound shift
  bool clamp = true;       // clip pixels to [0, 1] after each step
  std::uint64_t seed = 0;
  /// Weight of the guided patch loss against the unguided activation energy.
  double guide_blend = 1.0;

  /// Range checks only.
  void validate() const;
  /// Range checks plus layer existence and patch fit for `net`.
  void validate(const Network& net) const;

  friend bool operator==(const DreamConfig&, const DreamConfig&) = default;
};

/// Partial DreamConfig applied to a running dream. Iteration count and seed
/// are fixed for a run and cannot be patched.
struct ConfigPatch {
  std::optional<std::string> layer_name;
  std::optional<LossMode> mode;
  std::optional<double> step_size;
  std::optional<std::size_t> patch_size;
  std::optional<std::size_t> jitter;
  std::optional<bool> clamp;
  std::optional<double> guide_blend;

  bool empty() const;
  /// Fields set in `later` replace ours.
  void merge(const ConfigPatch& later);
  DreamConfig apply(DreamConfig base) const;
};

/// Ordered dream phases. Each phase runs config.iterations steps; shallow
/// layers give concrete, analytic phases and deep layers associative ones.
struct Schedule {
  std::vector<DreamConfig> phases;

  std::size_t total_iterations() const;
  static Schedule single(const DreamConfig& cfg) { return Schedule{{cfg}}; }
};

struct StepResult {
  Tensor canvas;
  double loss = 0.0;           // objective before the step
  double guided_loss = 0.0;    // matched dot sum or squared distance sum
  double unguided_loss = 0.0;  // sum of squared activations
  double gradient_norm = 0.0;  // L2 norm of the pixel gradient
};

/// Circular shift: out(c, y + dy, x + dx) = in(c, y, x).
Tensor roll(const Tensor& image, std::ptrdiff_t dy, std::ptrdiff_t dx);

/// Objective ascended by dream_step, evaluated without jitter:
///   blend * (+dot sum | -squared distance sum) + (1 - blend) * sum(a^2).
/// `guide` may be null when cfg.guide_blend is 0.
double dream_objective(const Network& net, const Tensor& canvas, const PatchGrid* guide,
                       const DreamConfig& cfg);

/// One pixel-space ascent step. The patch assignment is recomputed for the
/// current canvas and held fixed while differentiating.
StepResult dream_step(const Network& net, const Tensor& canvas, const PatchGrid* guide,
                      const DreamConfig& cfg, Rng& rng);

struct TrajectoryEntry {
  std::size_t iteration = 0;
  double loss = 0.0;
  std::size_t phase = 0;

  friend bool operator==(const TrajectoryEntry&, const TrajectoryEntry&) = default;
};

/// Canvas at `iteration` (before that iteration's step) and its objective.
struct Frame {
  std::size_t iteration = 0;
  double loss = 0.0;
  std::size_t phase = 0;
  std::shared_ptr<const Tensor> canvas;
};

using FrameSink = std::function<void(const Frame&)>;

/// Classifier training interleaved with dream iterations.
struct HoneOptions {
  std::vector<Tensor> images;
  std::vector<int> labels;
  double inner_lr = 0.0;
  std::size_t inner_steps = 0;
};

struct PatchAck {
  std::size_t applied_at = 0;  // first iteration governed by the patch
};

class SessionFinishedError : public Error {
 public:
  SessionFinishedError() : Error("session finished") {}
};

/// Stepwise dream run. One driver thread calls advance(); submit_patch()
/// may be called from any thread. Patches queue until the next iteration
/// boundary and persist as overrides for the rest of the run.
class DreamSession {
 public:
  DreamSession(Network net, Tensor source, std::optional<Tensor> guide, Schedule schedule,
               std::optional<HoneOptions> hone = std::nullopt);

  DreamSession(const DreamSession&) = delete;
  DreamSession& operator=(const DreamSession&) = delete;

  /// Validates and enqueues. Throws InputError/LookupError for invalid
  /// fields and SessionFinishedError once no iteration remains to govern.
  PatchAck submit_patch(const ConfigPatch& patch);

  std::size_t total_iterations() const noexcept { return total_; }
  /// Number of iterations started so far.
  std::size_t started() const;
  bool has_next() const { return started() < total_; }

  /// Runs the next iteration and returns its frame.
  Frame advance();
  /// Frame for the final canvas (iteration == total_iterations()). Only
  /// valid once every iteration has run.
  Frame final_frame();

  const Tensor& canvas() const noexcept { return canvas_; }
  const std::vector<TrajectoryEntry>& trajectory() const noexcept { return trajectory_; }
  std::size_t guide_encodes() const noexcept { return guide_encodes_; }
  const Network& network() const noexcept { return net_; }
  const std::vector<double>& hone_losses() const noexcept { return hone_losses_; }
  const Schedule& schedule() const noexcept { return schedule_; }

  /// Config that governs iteration `i` given the overrides merged so far.
  DreamConfig config_for(std::size_t i) const;

 private:
  std::size_t phase_of(std::size_t i) const;
  const PatchGrid* guide_for(const DreamConfig& cfg);
  void validate_patch(const ConfigPatch& patch) const;

  Network net_;
  Tensor canvas_;
  std::optional<Tensor> guide_;
  Schedule schedule_;
  std::optional<HoneOptions> hone_;
  std::size_t total_ = 0;
  std::vector<std::size_t> phase_end_;

  // Guarded by mu_.
  mutable std::mutex mu_;
  std::size_t started_ = 0;
  std::vector<ConfigPatch> pending_;

  // Driver thread only.
  ConfigPatch overrides_;
  Rng rng_;
  std::optional<PatchGrid> guide_grid_;
  bool guide_stale_ = true;
  std::size_t guide_encodes_ = 0;
  std::vector<TrajectoryEntry> trajectory_;
  std::vector<double> hone_losses_;
  std::optional<Frame> final_;
};

struct DreamResult {
  Tensor canvas;
  std::vector<TrajectoryEntry> trajectory;  // one entry per iteration
  double final_loss = 0.0;                  // objective of the final canvas
  std::size_t final_phase = 0;
  std::size_t guide_encodes = 0;
};

/// Runs every phase in order, starting from `source`. The guide is encoded
/// whenever the layer or patch size changes. `sink` sees one frame per
/// iteration.
DreamResult run_dream(const Network& net, const Tensor& source, const std::optional<Tensor>& guide,
                      const Schedule& schedule, const FrameSink& sink = {});

struct HoneResult {
  DreamResult dream;
  Network net;                       // weights after in-loop training
  std::vector<double> inner_losses;  // classifier loss before each inner step
};

/// run_dream with `hone.inner_steps` classifier SGD steps on the guide tiles
/// after every dream iteration; later iterations see the updated weights.
HoneResult hone_in_loop(const Network& net, const Tensor& source, const std::optional<Tensor>& guide,
                        const Schedule& schedule, const HoneOptions& hone, const FrameSink& sink = {});

}  // namespace dreamhone
