#include <dreamhone/gradcheck.hpp>
#include <dreamhone/layers.hpp>
#include <gtest/gtest.h>

#include <cmath>

#include "../support/oracles.hpp"

using namespace dreamhone;

namespace {

Tensor make(Shape dims, std::vector<float> values) {
  Tensor t(dims);
  std::copy(values.begin(), values.end(), t.data().begin());
  return t;
}

ConvParams conv_with(std::size_t out, std::size_t in, std::size_t k, std::vector<float> w, std::size_t stride = 1,
                     std::size_t pad = 0) {
  auto p = ConvParams::make(out, in, k, k, stride, pad);
  std::copy(w.begin(), w.end(), p.weights.data().begin());
  return p;
}

}  // namespace

TEST(Tensor, RejectsEmptyOrZeroDims) {
  EXPECT_THROW(Tensor(Shape{}), ShapeError);
  EXPECT_THROW(Tensor(Shape{3, 0, 2}), ShapeError);
  Tensor t({2, 3, 4});
  EXPECT_EQ(t.size(), 24u);
  EXPECT_EQ(t.rank(), 3u);
}

TEST(Tensor, ValueConstructorChecksLength) {
  EXPECT_THROW(Tensor(Shape{2, 2}, std::vector<float>{1, 2, 3}), ShapeError);
  Tensor t(Shape{2, 2}, std::vector<float>{1, 2, 3, 4});
  EXPECT_EQ(t[3], 4.0f);
}

TEST(Tensor, ReshapeKeepsValues) {
  Tensor t(Shape{2, 3}, std::vector<float>{1, 2, 3, 4, 5, 6});
  const Tensor r = t.reshaped({3, 2});
  EXPECT_EQ(r.values(), t.values());
  EXPECT_THROW(t.reshaped({4, 2}), ShapeError);
}

TEST(Conv2d, IdentityKernelReturnsInput) {
  Tensor x({1, 3, 3});
  for (auto& v : x.data()) v = 1.0f;
  const Tensor y = conv2d(x, conv_with(1, 1, 1, {1.0f}));
  EXPECT_EQ(y, x);
}

TEST(Conv2d, AllOnesKernelSumsEntries) {
  const Tensor x = make({1, 2, 2}, {1, 2, 3, 4});
  const Tensor y = conv2d(x, conv_with(1, 1, 2, {1, 1, 1, 1}));
  ASSERT_EQ(y.dims(), (Shape{1, 1, 1}));
  EXPECT_EQ(y[0], 10.0f);
}

TEST(Conv2d, PaddedShape) {
  const Tensor x({3, 32, 32});
  EXPECT_EQ(conv2d(x, ConvParams::make(8, 3, 3, 3, 1, 1)).dims(), (Shape{8, 32, 32}));
}

TEST(Conv2d, RejectsChannelMismatch) {
  const Tensor x({2, 5, 5});
  EXPECT_THROW(conv2d(x, ConvParams::make(1, 3, 3, 3)), ShapeError);
}

TEST(Conv2d, ShapeFormulaHoldsOverGrid) {
  for (std::size_t h : {3, 4, 7, 10})
    for (std::size_t w : {3, 5, 8})
      for (std::size_t k : {1, 2, 3})
        for (std::size_t stride : {1, 2, 3})
          for (std::size_t pad : {0, 1, 2}) {
            const LayerSpec spec{"c", ConvParams::make(2, 1, k, k, stride, pad)};
            const Shape want{2, oracle::window_out(h, k, stride, pad), oracle::window_out(w, k, stride, pad)};
            EXPECT_EQ(output_dims(spec, {1, h, w}), want) << h << "x" << w << " k" << k << " s" << stride;
            EXPECT_EQ(conv2d(Tensor({1, h, w}), std::get<ConvParams>(spec.params)).dims(), want);
          }
}

TEST(Conv2d, MatchesNaiveLoops) {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const auto c = static_cast<std::size_t>(rng.uniform_int(1, 3));
    const auto k = static_cast<std::size_t>(rng.uniform_int(1, 3));
    auto p = ConvParams::make(static_cast<std::size_t>(rng.uniform_int(1, 4)), c, k, k,
                              static_cast<std::size_t>(rng.uniform_int(1, 2)),
                              static_cast<std::size_t>(rng.uniform_int(0, 1)));
    p.weights = oracle::random_tensor(rng, p.weights.dims(), -1, 1);
    p.bias = oracle::random_tensor(rng, p.bias.dims(), -1, 1);
    const Tensor x = oracle::random_tensor(rng, {c, 9, 7});
    const TensorD want = oracle::conv2d(oracle::to_double(x), p);
    const Tensor got = conv2d(x, p);
    ASSERT_EQ(got.dims(), want.dims());
    for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], want[i], 1e-5);
  }
}

TEST(Conv2d, LinearWithoutBias) {
  Rng rng(5);
  auto p = ConvParams::make(3, 2, 3, 3, 1, 1);
  p.weights = oracle::random_tensor(rng, p.weights.dims(), -1, 1);
  const TensorD x = oracle::to_double(oracle::random_tensor(rng, {2, 6, 6}));
  const TensorD y = oracle::to_double(oracle::random_tensor(rng, {2, 6, 6}));
  const double a = 0.7, b = -1.3;
  TensorD mix(x.dims());
  for (std::size_t i = 0; i < mix.size(); ++i) mix[i] = a * x[i] + b * y[i];
  const TensorD lhs = conv2d(mix, p);
  const TensorD cx = conv2d(x, p), cy = conv2d(y, p);
  for (std::size_t i = 0; i < lhs.size(); ++i) EXPECT_NEAR(lhs[i], a * cx[i] + b * cy[i], 1e-9);
}

TEST(Relu, ClampsNegatives) {
  const Tensor t = make({3}, {-1, 0, 2});
  EXPECT_EQ(relu(t).values(), (std::vector<float>{0, 0, 2}));
}

TEST(Relu, IdempotentAndFixesNonNegative) {
  Rng rng(9);
  const Tensor t = oracle::random_tensor(rng, {2, 4, 4}, -1, 1);
  EXPECT_EQ(relu(relu(t)), relu(t));
  const Tensor pos = oracle::random_tensor(rng, {2, 4, 4}, 0, 1);
  EXPECT_EQ(relu(pos), pos);
}

TEST(MaxPool, PicksWindowMaximum) {
  const Tensor t = make({1, 2, 2}, {1, 2, 3, 4});
  const Tensor y = maxpool(t, 2, 2);
  ASSERT_EQ(y.dims(), (Shape{1, 1, 1}));
  EXPECT_EQ(y[0], 4.0f);
}

TEST(MaxPool, ConstantAndIdentity) {
  Tensor t({2, 4, 4});
  for (auto& v : t.data()) v = 0.25f;
  for (float v : maxpool(t, 2, 2).values()) EXPECT_EQ(v, 0.25f);
  Rng rng(2);
  const Tensor r = oracle::random_tensor(rng, {2, 5, 3});
  EXPECT_EQ(maxpool(r, 1, 1), r);
}

TEST(MaxPool, BackwardRoutesEachWindowToOneLocation) {
  Rng rng(4);
  const std::vector<LayerSpec> layers{{"p", PoolParams{2, 2}}};
  Tensor x = oracle::random_tensor(rng, {2, 6, 6});
  x.at(0, 0, 0) = 0.5f;  // tie inside the first window: first element wins
  x.at(0, 0, 1) = 0.5f;
  x.at(0, 1, 0) = 0.1f;
  x.at(0, 1, 1) = 0.1f;
  Tensor up({2, 3, 3});
  for (std::size_t i = 0; i < up.size(); ++i) up[i] = static_cast<float>(i + 1);
  const Tensor g = backprop_to_input<float>(layers, x, up);
  for (std::size_t c = 0; c < 2; ++c)
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 3; ++j) {
        int nonzero = 0;
        float sum = 0.0f;
        for (std::size_t u = 0; u < 2; ++u)
          for (std::size_t v = 0; v < 2; ++v) {
            const float gv = g.at(c, 2 * i + u, 2 * j + v);
            nonzero += gv != 0.0f;
            sum += gv;
          }
        EXPECT_EQ(nonzero, 1);
        EXPECT_EQ(sum, up.at(c, i, j));
      }
  EXPECT_EQ(g.at(0, 0, 0), up.at(0, 0, 0));
  EXPECT_EQ(g.at(0, 0, 1), 0.0f);
}

TEST(Dense, Examples) {
  const Tensor t = make({2}, {1, 2});
  auto p = DenseParams::make(1, 2);
  p.weights = make({1, 2}, {1, 1});
  EXPECT_EQ(dense(t, p.weights, p.bias).values(), (std::vector<float>{3}));

  auto id = DenseParams::make(4, 4);
  for (std::size_t i = 0; i < 4; ++i) id.weights[i * 4 + i] = 1.0f;
  const Tensor x = make({1, 2, 2}, {5, 6, 7, 8});
  EXPECT_EQ(dense(x, id.weights, id.bias).values(), x.values());

  auto zero = DenseParams::make(2, 4);
  zero.bias = make({2}, {0.5f, -2.0f});
  EXPECT_EQ(dense(x, zero.weights, zero.bias).values(), (std::vector<float>{0.5f, -2.0f}));
}

TEST(Backprop, OneByOneConvGivesWeightEverywhere) {
  const std::vector<LayerSpec> layers{{"c", conv_with(1, 1, 1, {0.75f})}};
  Rng rng(1);
  const Tensor x = oracle::random_tensor(rng, {1, 4, 5});
  Tensor up({1, 4, 5});
  for (auto& v : up.data()) v = 1.0f;
  for (float v : backprop_to_input<float>(layers, x, up).values()) EXPECT_EQ(v, 0.75f);
}

TEST(Backprop, ZeroUpstreamGivesZero) {
  Rng rng(6);
  const auto net = oracle::random_net(rng, 3);
  const Tensor x = oracle::random_tensor(rng, net.input_dims);
  const Network n(net.input_dims, net.layers);
  const Tensor up(n.output_dims());
  for (float v : backprop_to_input<float>(net.layers, x, up).values()) EXPECT_EQ(v, 0.0f);
}

TEST(Backprop, ThreeLayerNetMatchesFiniteDifferences) {
  Rng rng(12);
  auto c1 = ConvParams::make(4, 3, 3, 3, 1, 1);
  c1.weights = oracle::random_tensor(rng, c1.weights.dims(), -0.5, 0.5);
  auto c2 = ConvParams::make(2, 4, 3, 3, 2, 0);
  c2.weights = oracle::random_tensor(rng, c2.weights.dims(), -0.5, 0.5);
  const std::vector<LayerSpec> layers{{"c1", c1}, {"r", ReluParams{}}, {"c2", c2}};
  const Tensor x = oracle::random_tensor(rng, {3, 8, 8});
  const Network net({3, 8, 8}, layers);
  const Tensor up = oracle::random_tensor(rng, net.output_dims(), -1, 1);
  const TensorD upd = oracle::to_double(up);
  const Tensor got = backprop_to_input<float>(layers, x, up);
  const TensorD want = finite_diff(
      [&](const TensorD& in) {
        const TensorD out = oracle::forward(layers, in);
        double s = 0.0;
        for (std::size_t i = 0; i < out.size(); ++i) s += upd[i] * out[i];
        return s;
      },
      oracle::to_double(x), 1e-4);
  for (std::size_t i = 0; i < got.size(); ++i) EXPECT_TRUE(oracle::close(got[i], want[i], 1e-3)) << i;
}

TEST(FiniteDiff, SumOfSquares) {
  const TensorD x(Shape{2}, std::vector<double>{1, 2});
  const TensorD g = finite_diff(
      [](const TensorD& t) {
        double s = 0.0;
        for (double v : t.data()) s += v * v;
        return s;
      },
      x, 1e-4);
  EXPECT_NEAR(g[0], 2.0, 1e-6);
  EXPECT_NEAR(g[1], 4.0, 1e-6);
}

TEST(FiniteDiff, ConstantGivesZero) {
  const TensorD x(Shape{3}, std::vector<double>{1, 2, 3});
  for (double v : finite_diff([](const TensorD&) { return 4.0; }, x, 1e-4).values()) EXPECT_EQ(v, 0.0);
}

TEST(FiniteDiff, RejectsNonPositiveStep) {
  const TensorD x(Shape{1});
  EXPECT_THROW(finite_diff([](const TensorD&) { return 0.0; }, x, 0.0), InputError);
}

TEST(FiniteDiff, ConvThenSumAgreesWithBackprop) {
  Rng rng(8);
  auto c = ConvParams::make(2, 1, 3, 3, 1, 1);
  c.weights = oracle::random_tensor(rng, c.weights.dims(), -1, 1);
  const std::vector<LayerSpec> layers{{"c", c}};
  const Tensor x = oracle::random_tensor(rng, {1, 4, 4});
  Tensor up({2, 4, 4});
  for (auto& v : up.data()) v = 1.0f;
  const Tensor got = backprop_to_input<float>(layers, x, up);
  const TensorD want = finite_diff(
      [&](const TensorD& in) {
        double s = 0.0;
        for (double v : conv2d(in, c).values()) s += v;
        return s;
      },
      oracle::to_double(x), 1e-4);
  for (std::size_t i = 0; i < got.size(); ++i) EXPECT_TRUE(oracle::close(got[i], want[i], 1e-3));
}

TEST(Backprop, RandomNetsMatchFiniteDifferences) {
  Rng rng(2024);
  for (int trial = 0; trial < 10; ++trial) {
    const auto rn = oracle::random_net(rng);
    const Network net(rn.input_dims, rn.layers);
    const Tensor x = oracle::random_tensor(rng, rn.input_dims);
    const Tensor up = oracle::random_tensor(rng, net.output_dims(), -1, 1);
    const TensorD upd = oracle::to_double(up);
    const Tensor got = backprop_to_input<float>(rn.layers, x, up);
    const TensorD want = finite_diff(
        [&](const TensorD& in) {
          const TensorD out = net.forward(in);
          double s = 0.0;
          for (std::size_t i = 0; i < out.size(); ++i) s += upd[i] * out[i];
          return s;
        },
        oracle::to_double(x), 1e-4);
    for (std::size_t i = 0; i < got.size(); ++i)
      ASSERT_TRUE(oracle::close(got[i], want[i], 1e-3)) << "trial " << trial << " index " << i;
  }
}

TEST(FiniteDiff, KinkDetectorFlagsStencilsAcrossReluZero) {
  const std::vector<LayerSpec> layers{{"r", ReluParams{}}};
  TensorD x({1, 1, 3});
  x[0] = 0.5;
  x[1] = 5e-5;
  x[2] = -0.5;
  EXPECT_EQ(oracle::stencil_kink_crossings(layers, x, 1e-4), 1u);
  EXPECT_EQ(oracle::stencil_kink_crossings(layers, x, 1e-5), 0u);
}
