#include <dreamhone/config_io.hpp>
#include <dreamhone/dream.hpp>
#include <dreamhone/image_io.hpp>
#include <dreamhone/training.hpp>
#include <gtest/gtest.h>

#include <cmath>

#include "../support/fixtures.hpp"
#include "../support/oracles.hpp"

using namespace dreamhone;

namespace {

const Network& net() {
  static const Network n = Network::reference(3, 7);
  return n;
}

Tensor source() { return load_png(fixtures::dir() / "stripes_source.png"); }
Tensor guide() { return load_png(fixtures::dir() / "checker_guide.png"); }

DreamConfig quick(std::size_t iterations = 5) {
  DreamConfig c;
  c.iterations = iterations;
  return c;
}

}  // namespace

TEST(Roll, ShiftsWithWraparound) {
  Tensor t({1, 2, 3});
  for (std::size_t i = 0; i < 6; ++i) t[i] = static_cast<float>(i);
  const Tensor r = roll(t, 1, -1);
  EXPECT_EQ(r.at(0, 1, 0), t.at(0, 0, 1));
  EXPECT_EQ(r.at(0, 0, 2), t.at(0, 1, 0));
  EXPECT_EQ(roll(roll(t, 1, -1), -1, 1), t);
}

TEST(DreamConfig, ValidatesRangesAndLayers) {
  DreamConfig c;
  c.step_size = 0.0;
  EXPECT_THROW(c.validate(), InputError);
  c = DreamConfig{};
  c.guide_blend = 1.5;
  EXPECT_THROW(c.validate(), InputError);
  c = DreamConfig{};
  c.layer_name = "nope";
  EXPECT_THROW(c.validate(net()), LookupError);
  c = DreamConfig{};
  c.layer_name = "fc";
  EXPECT_THROW(c.validate(net()), InputError);
  c = DreamConfig{};
  c.layer_name = "relu3";
  c.patch_size = 17;
  EXPECT_THROW(c.validate(net()), InputError);
}

TEST(DreamStep, DistMinFixedPoint) {
  DreamConfig c;
  c.mode = LossMode::DistMin;
  c.jitter = 0;
  const Tensor s = source();
  const PatchGrid g = encode_patches(net(), s, c.layer_name, c.patch_size);
  Rng rng(0);
  const StepResult r = dream_step(net(), s, &g, c, rng);
  EXPECT_EQ(r.loss, 0.0);
  EXPECT_LE(r.gradient_norm, 1e-6);
  for (std::size_t i = 0; i < s.size(); ++i) EXPECT_NEAR(r.canvas[i], s[i], 1e-6);
}

TEST(DreamStep, DotMaxSmallStepAscends) {
  DreamConfig c;
  c.step_size = 1e-4;
  c.jitter = 0;
  const PatchGrid g = encode_patches(net(), guide(), c.layer_name, c.patch_size);
  Rng rng(0);
  const Tensor s = source();
  const StepResult r = dream_step(net(), s, &g, c, rng);
  const double after = dream_objective(net(), r.canvas, &g, c);
  EXPECT_EQ(r.loss, dream_objective(net(), s, &g, c));
  EXPECT_GT((after - r.loss) / c.step_size, 0.0);
}

TEST(DreamStep, BitDeterministic) {
  DreamConfig c;
  c.jitter = 0;
  const PatchGrid g = encode_patches(net(), guide(), c.layer_name, c.patch_size);
  Rng a(3), b(3);
  EXPECT_EQ(dream_step(net(), source(), &g, c, a).canvas, dream_step(net(), source(), &g, c, b).canvas);
}

TEST(DreamStep, UnguidedNeedsNoGuide) {
  DreamConfig c;
  c.guide_blend = 0.0;
  Rng rng(1);
  const StepResult r = dream_step(net(), source(), nullptr, c, rng);
  EXPECT_GT(r.loss, 0.0);
  EXPECT_EQ(r.guided_loss, 0.0);
  EXPECT_DOUBLE_EQ(r.loss, r.unguided_loss);
  c.guide_blend = 0.5;
  EXPECT_THROW(dream_step(net(), source(), nullptr, c, rng), InputError);
}

TEST(RunDream, ZeroIterationsReturnsSource) {
  const DreamResult r = run_dream(net(), source(), guide(), Schedule::single(quick(0)));
  EXPECT_EQ(r.canvas, source());
  EXPECT_TRUE(r.trajectory.empty());
}

TEST(RunDream, ClampKeepsPixelsInRange) {
  DreamConfig c = quick(10);
  c.step_size = 0.2;
  std::size_t frames = 0;
  const DreamResult r = run_dream(net(), source(), guide(), Schedule::single(c), [&](const Frame& f) {
    EXPECT_EQ(f.iteration, frames++);
    for (float v : f.canvas->data()) EXPECT_TRUE(v >= 0.0f && v <= 1.0f);
  });
  EXPECT_EQ(frames, 10u);
  for (float v : r.canvas.data()) EXPECT_TRUE(v >= 0.0f && v <= 1.0f);
}

TEST(RunDream, ReproducibleFromInputs) {
  DreamConfig c = quick(6);
  c.seed = 42;
  const DreamResult a = run_dream(net(), source(), guide(), Schedule::single(c));
  const DreamResult b = run_dream(net(), source(), guide(), Schedule::single(c));
  EXPECT_EQ(a.canvas, b.canvas);
  EXPECT_EQ(a.trajectory, b.trajectory);
  c.seed = 43;
  EXPECT_NE(run_dream(net(), source(), guide(), Schedule::single(c)).canvas, a.canvas);
}

TEST(RunDream, TwoPhaseScheduleEncodesGuideTwice) {
  DreamConfig deep = quick(3), shallow = quick(3);
  deep.layer_name = "conv3";
  shallow.layer_name = "conv1";
  const DreamResult r = run_dream(net(), source(), guide(), Schedule{{deep, shallow}});
  EXPECT_EQ(r.guide_encodes, 2u);
  ASSERT_EQ(r.trajectory.size(), 6u);
  EXPECT_EQ(r.trajectory[2].phase, 0u);
  EXPECT_EQ(r.trajectory[3].phase, 1u);
  EXPECT_EQ(r.final_phase, 1u);
}

TEST(RunDream, MissingGuideRejected) {
  EXPECT_THROW(run_dream(net(), source(), std::nullopt, Schedule::single(quick())), InputError);
  EXPECT_THROW(run_dream(net(), source(), guide(), Schedule{}), InputError);
  EXPECT_THROW(run_dream(net(), Tensor({3, 32, 32}), guide(), Schedule::single(quick())), ShapeError);
}

TEST(RunDream, DistMinScaleEquivariantAssignment) {
  auto c1 = ConvParams::make(4, 3, 3, 3, 1, 1);
  Rng rng(9);
  c1.weights = oracle::random_tensor(rng, c1.weights.dims(), -1, 1);
  const Network linear({3, 16, 16}, {{"conv1", c1}});
  const Tensor canvas = oracle::random_tensor(rng, {3, 16, 16});
  const Tensor g = oracle::random_tensor(rng, {3, 16, 16});
  Tensor cs = canvas, gs = g;
  for (auto& v : cs.data()) v *= 2.0f;
  for (auto& v : gs.data()) v *= 2.0f;
  const auto a = match_patches(encode_patches(linear, canvas, "conv1", 2), encode_patches(linear, g, "conv1", 2),
                               LossMode::DistMin);
  const auto b = match_patches(encode_patches(linear, cs, "conv1", 2), encode_patches(linear, gs, "conv1", 2),
                               LossMode::DistMin);
  EXPECT_EQ(a.assignment, b.assignment);
}

TEST(DreamSession, PatchAppliesFromNextIteration) {
  DreamConfig c = quick(20);
  DreamSession plain(net(), source(), guide(), Schedule::single(c));
  DreamSession steered(net(), source(), guide(), Schedule::single(c));
  for (std::size_t i = 0; i <= 10; ++i) {
    plain.advance();
    steered.advance();
  }
  ConfigPatch p;
  p.step_size = 0.02;
  EXPECT_EQ(steered.submit_patch(p).applied_at, 11u);
  EXPECT_EQ(steered.config_for(10).step_size, c.step_size);
  while (plain.has_next()) plain.advance();
  while (steered.has_next()) steered.advance();
  EXPECT_EQ(steered.config_for(11).step_size, 0.02);
  const auto& a = plain.trajectory();
  const auto& b = steered.trajectory();
  for (std::size_t i = 0; i <= 11; ++i) EXPECT_EQ(a[i], b[i]) << i;
  bool differs = false;
  for (std::size_t i = 12; i < a.size(); ++i) differs |= a[i].loss != b[i].loss;
  EXPECT_TRUE(differs);
}

TEST(DreamSession, EmptyPatchChangesNothing) {
  DreamConfig c = quick(4);
  DreamSession a(net(), source(), guide(), Schedule::single(c));
  DreamSession b(net(), source(), guide(), Schedule::single(c));
  a.advance();
  b.advance();
  EXPECT_EQ(b.submit_patch(ConfigPatch{}).applied_at, 1u);
  while (a.has_next()) a.advance();
  while (b.has_next()) b.advance();
  EXPECT_EQ(a.canvas(), b.canvas());
}

TEST(DreamSession, InvalidPatchLeavesSessionRunning) {
  DreamSession s(net(), source(), guide(), Schedule::single(quick(3)));
  s.advance();
  ConfigPatch bad;
  bad.layer_name = "nope";
  EXPECT_THROW(s.submit_patch(bad), LookupError);
  ConfigPatch big;
  big.patch_size = 40;
  EXPECT_THROW(s.submit_patch(big), InputError);
  ConfigPatch neg;
  neg.step_size = -1.0;
  EXPECT_THROW(s.submit_patch(neg), InputError);
  while (s.has_next()) s.advance();
  EXPECT_EQ(s.trajectory().size(), 3u);
  EXPECT_THROW(s.submit_patch(ConfigPatch{}), SessionFinishedError);
}

TEST(DreamSession, SameBoundaryPatchesMergeLastWriterWins) {
  DreamSession s(net(), source(), guide(), Schedule::single(quick(4)));
  s.advance();
  ConfigPatch a, b;
  a.step_size = 0.03;
  a.jitter = 0;
  b.step_size = 0.05;
  EXPECT_EQ(s.submit_patch(a).applied_at, 1u);
  EXPECT_EQ(s.submit_patch(b).applied_at, 1u);
  s.advance();
  EXPECT_EQ(s.config_for(1).step_size, 0.05);
  EXPECT_EQ(s.config_for(1).jitter, 0u);
}

TEST(DreamSession, FinalFrameFollowsTrajectory) {
  DreamSession s(net(), source(), guide(), Schedule::single(quick(3)));
  const Frame f0 = s.advance();
  EXPECT_EQ(f0.iteration, 0u);
  EXPECT_EQ(*f0.canvas, source());
  EXPECT_THROW(s.final_frame(), InputError);
  s.advance();
  s.advance();
  const Frame last = s.final_frame();
  EXPECT_EQ(last.iteration, 3u);
  EXPECT_EQ(*last.canvas, s.canvas());
}

TEST(HoneInLoop, ZeroLearningRateMatchesRunDream) {
  DreamConfig c = quick(4);
  HoneOptions h;
  h.images = {guide(), source()};
  h.labels = {2, 0};
  h.inner_lr = 0.0;
  h.inner_steps = 2;
  const DreamResult plain = run_dream(net(), source(), guide(), Schedule::single(c));
  const HoneResult honed = hone_in_loop(net(), source(), guide(), Schedule::single(c), h);
  EXPECT_EQ(honed.dream.canvas, plain.canvas);
  EXPECT_EQ(honed.dream.trajectory, plain.trajectory);
  EXPECT_TRUE(honed.net.same_weights(net()));
}

TEST(HoneInLoop, InnerTrainingLowersTileLoss) {
  DreamConfig c = quick(2);
  HoneOptions h;
  Rng rng(4);
  for (int i = 0; i < 10; ++i) {
    h.images.push_back(oracle::random_tensor(rng, {3, 64, 64}));
    h.labels.push_back(i % 3);
  }
  h.inner_lr = 0.01;
  h.inner_steps = 10;
  const HoneResult r = hone_in_loop(net(), source(), guide(), Schedule::single(c), h);
  ASSERT_EQ(r.inner_losses.size(), 20u);
  for (std::size_t i = 1; i < r.inner_losses.size(); ++i) EXPECT_LT(r.inner_losses[i], r.inner_losses[i - 1]);
  EXPECT_LT(classifier_loss(r.net, h.images, h.labels), r.inner_losses.front());
  const HoneResult again = hone_in_loop(net(), source(), guide(), Schedule::single(c), h);
  EXPECT_EQ(again.dream.canvas, r.dream.canvas);
  EXPECT_TRUE(again.net.same_weights(r.net));
}

TEST(ConfigIo, ScheduleRoundTrip) {
  DreamConfig a;
  a.layer_name = "conv3";
  a.mode = LossMode::DistMin;
  a.iterations = 7;
  a.guide_blend = 0.25;
  DreamConfig b;
  b.clamp = false;
  b.seed = 99;
  const Schedule s{{a, b}};
  const Schedule back = schedule_from_json(schedule_to_json(s));
  ASSERT_EQ(back.phases.size(), 2u);
  EXPECT_EQ(back.phases[0], a);
  EXPECT_EQ(back.phases[1], b);
}

TEST(ConfigIo, RejectsUnknownAndRunFixedKeys) {
  EXPECT_THROW(dream_config_from_json(R"({"layer":"conv1"})"), InputError);
  EXPECT_THROW(schedule_from_json("[]"), InputError);
  EXPECT_THROW(schedule_from_json(R"({"layer_name":"conv1"})"), InputError);
  EXPECT_THROW(config_patch_from_json(R"({"iterations":3})"), InputError);
  EXPECT_THROW(config_patch_from_json(R"({"seed":3})"), InputError);
  EXPECT_THROW(config_patch_from_json(R"({"step_size":"big"})"), InputError);
  const ConfigPatch p = config_patch_from_json(R"({"step_size":0.02,"layer_name":"conv1"})");
  EXPECT_EQ(p.step_size, 0.02);
  EXPECT_EQ(p.layer_name, "conv1");
  EXPECT_FALSE(p.jitter);
}

TEST(ConfigIo, TrajectoryCsvRoundTripIsExact) {
  const std::vector<TrajectoryEntry> rows{{0, -80.67512345678901, 0}, {1, 1e-300, 0}, {2, 3.5, 1}};
  const std::string csv = trajectory_to_csv(rows);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "iteration,loss,phase");
  EXPECT_EQ(trajectory_from_csv(csv), rows);
}
