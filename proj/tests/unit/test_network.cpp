#include <dreamhone/checkpoint.hpp>
#include <dreamhone/network.hpp>
#include <dreamhone/training.hpp>
#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "../support/fixtures.hpp"
#include "../support/oracles.hpp"

using namespace dreamhone;

namespace {

/// Noise images whose class brightens one colour channel.
LabeledSet tiny_set(std::size_t per_class, std::size_t classes, Shape dims, std::uint64_t seed) {
  LabeledSet s;
  for (std::size_t c = 0; c < classes; ++c) s.categories.push_back("c" + std::to_string(c));
  for (std::size_t c = 0; c < classes; ++c)
    for (std::size_t i = 0; i < per_class; ++i) s.labels.push_back(static_cast<int>(c));
  s.image = [dims, seed, labels = s.labels](std::size_t i) {
    Rng rng(derive_seed(seed, std::to_string(i)));
    Tensor t = oracle::random_tensor(rng, dims, 0.0, 0.3);
    const auto ch = static_cast<std::size_t>(labels[i]) % dims[0];
    for (std::size_t y = 0; y < dims[1]; ++y)
      for (std::size_t x = 0; x < dims[2]; ++x) t.at(ch, y, x) += 0.5f;
    return t;
  };
  return s;
}

Network small_net(std::size_t categories, std::uint64_t seed) {
  std::vector<LayerSpec> layers{{"conv1", ConvParams::make(4, 3, 3, 3, 1, 1)},
                                {"relu1", ReluParams{}},
                                {"pool1", PoolParams{2, 2}},
                                {"fc", DenseParams::make(categories, 4 * 4 * 4)}};
  Network net({3, 8, 8}, layers);
  net.initialize(seed);
  return net;
}

}  // namespace

TEST(Network, RejectsDuplicateNamesAndShapeMismatch) {
  EXPECT_THROW(Network({1, 4, 4}, {{"a", ReluParams{}}, {"a", ReluParams{}}}), InputError);
  EXPECT_THROW(Network({1, 4, 4}, {{"c", ConvParams::make(1, 3, 1, 1)}}), ShapeError);
}

TEST(Network, ForwardToUnknownLayerIsLookupError) {
  const Network net = Network::reference(3, 1);
  EXPECT_THROW(net.forward_to(Tensor({3, 64, 64}), "nope"), LookupError);
  EXPECT_THROW(net.forward_to(Tensor({3, 32, 32}), "conv1"), ShapeError);
}

TEST(Network, IdentityFirstLayerReturnsInput) {
  auto id = ConvParams::make(3, 3, 1, 1);
  for (std::size_t c = 0; c < 3; ++c) id.weights[c * 3 + c] = 1.0f;
  const Network net({3, 5, 5}, {{"id", id}, {"r", ReluParams{}}});
  Rng rng(1);
  const Tensor x = oracle::random_tensor(rng, {3, 5, 5});
  const FeatureEncoding e = net.forward_to(x, "id");
  EXPECT_EQ(e.layer_name, "id");
  EXPECT_EQ(e.activations, x);
}

TEST(Network, ForwardIsBitDeterministic) {
  const Network net = Network::reference(3, 4);
  Rng rng(2);
  const Tensor x = oracle::random_tensor(rng, {3, 64, 64});
  EXPECT_EQ(net.forward_to(x, "relu3").activations, net.forward_to(x, "relu3").activations);
}

TEST(Network, ReferenceShapesMatchFixtureTable) {
  const Network net = Network::reference(3, 0);
  std::ifstream in(fixtures::dir() / "reference_net_shapes.txt");
  ASSERT_TRUE(in) << "missing shape table fixture";
  std::string line;
  std::vector<std::string> names;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string name, dims;
    ls >> name >> dims;
    names.push_back(name);
    EXPECT_EQ(shape_to_string(net.layer_dims(name)), dims) << name;
    Rng rng(3);
    EXPECT_EQ(shape_to_string(net.forward_to(oracle::random_tensor(rng, {3, 64, 64}), name).activations.dims()),
              dims);
  }
  EXPECT_EQ(names, net.layer_names());
}

TEST(Network, PrefixComposesWithRemainder) {
  const Network net = Network::reference(3, 5);
  Rng rng(6);
  const Tensor x = oracle::random_tensor(rng, {3, 64, 64});
  for (const auto& name : net.layer_names()) {
    const Tensor mid = net.forward_to(x, name).activations;
    const auto rest = net.layers().subspan(net.layer_index(name) + 1);
    Tensor out = mid;
    for (const auto& l : rest) out = apply_layer(l, out);
    EXPECT_EQ(out, net.forward<float>(x)) << name;
  }
}

TEST(Network, InitializationIsBoundedAndSeeded) {
  const Network a = Network::reference(3, 11), b = Network::reference(3, 11), c = Network::reference(3, 12);
  EXPECT_TRUE(a.same_weights(b));
  EXPECT_FALSE(a.same_weights(c));
  const auto& p = std::get<ConvParams>(a.layer(0).params);
  const double bound = std::sqrt(6.0 / (3 * 9 + 16 * 9));
  for (float w : p.weights.data()) EXPECT_LE(std::abs(w), bound);
  for (float v : p.bias.data()) EXPECT_EQ(v, 0.0f);
}

TEST(Training, SingleCategoryHasPerfectHoldout) {
  const LabeledSet s = tiny_set(10, 1, {3, 8, 8}, 1);
  TrainConfig cfg;
  cfg.epochs = 1;
  const TrainResult r = train_classifier(small_net(1, 1), s, cfg);
  ASSERT_EQ(r.history.size(), 1u);
  EXPECT_EQ(r.history[0].epoch, 0u);
  EXPECT_EQ(r.history[0].holdout_accuracy, 1.0);
}

TEST(Training, SameSeedSameHistory) {
  const LabeledSet s = tiny_set(10, 2, {3, 8, 8}, 2);
  TrainConfig cfg;
  cfg.epochs = 3;
  const TrainResult a = train_classifier(small_net(2, 3), s, cfg);
  const TrainResult b = train_classifier(small_net(2, 3), s, cfg);
  ASSERT_EQ(a.history.size(), b.history.size());
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    EXPECT_EQ(a.history[i].train_loss, b.history[i].train_loss);
    EXPECT_EQ(a.history[i].holdout_accuracy, b.history[i].holdout_accuracy);
  }
  EXPECT_TRUE(a.net.same_weights(b.net));
}

TEST(Training, ZeroLearningRateKeepsWeights) {
  const LabeledSet s = tiny_set(5, 2, {3, 8, 8}, 3);
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.lr = 0.0;
  const Network start = small_net(2, 4);
  EXPECT_TRUE(train_classifier(start, s, cfg).net.same_weights(start));
}

TEST(Training, MemorizesTenSamples) {
  const LabeledSet s = tiny_set(5, 2, {3, 8, 8}, 4);
  TrainConfig cfg;
  cfg.epochs = 200;
  cfg.lr = 0.05;
  cfg.batch_size = 10;
  cfg.holdout_fraction = 0.0;
  const TrainResult r = train_classifier(small_net(2, 5), s, cfg);
  ASSERT_EQ(r.history.size(), 200u);
  for (std::size_t e = 100; e < r.history.size(); ++e)
    EXPECT_LE(r.history[e].train_loss, r.history[e - 1].train_loss) << "epoch " << e;
  EXPECT_EQ(r.history.back().train_accuracy, 1.0);
}

TEST(Training, SplitHoldoutTakesTrailingShare) {
  const std::vector<int> labels{0, 0, 0, 0, 0, 1, 1, 1, 1, 1};
  const HoldoutSplit h = split_holdout(labels, 2, 0.2);
  EXPECT_EQ(h.holdout, (std::vector<std::size_t>{4, 9}));
  EXPECT_EQ(h.train.size(), 8u);
}

TEST(Training, RejectsLabelCountMismatch) {
  const LabeledSet s = tiny_set(4, 3, {3, 8, 8}, 5);
  EXPECT_THROW(train_classifier(small_net(2, 1), s, TrainConfig{}), InputError);
}

TEST(Training, SgdStepReducesLossOnSmallBatch) {
  const LabeledSet s = tiny_set(3, 2, {3, 8, 8}, 6);
  std::vector<Tensor> images;
  for (std::size_t i = 0; i < s.size(); ++i) images.push_back(s.image(i));
  Network net = small_net(2, 7);
  const double before = sgd_step(net, images, s.labels, 0.05);
  EXPECT_EQ(before, classifier_loss(small_net(2, 7), images, s.labels));
  EXPECT_LT(classifier_loss(net, images, s.labels), before);
}

TEST(Checkpoint, RoundTripPreservesForward) {
  Network net = Network::reference(3, 8);
  net.set_meta({"corpus-a", 4, 0.95});
  const Network back = deserialize_network(serialize_network(net));
  EXPECT_TRUE(back.same_weights(net));
  EXPECT_EQ(back.meta(), net.meta());
  Rng rng(1);
  const Tensor x = oracle::random_tensor(rng, {3, 64, 64});
  EXPECT_EQ(back.forward<float>(x), net.forward<float>(x));
}

TEST(Checkpoint, BytesAreStable) {
  const Network net = Network::reference(2, 9);
  EXPECT_EQ(serialize_network(net), serialize_network(net));
  const auto path = std::filesystem::temp_directory_path() / "dreamhone_ckpt_test.dhn";
  save_checkpoint(net, path);
  EXPECT_TRUE(load_checkpoint(path).same_weights(net));
  std::filesystem::remove(path);
}

TEST(Checkpoint, TruncationIsFormatError) {
  const std::string bytes = serialize_network(Network::reference(2, 1));
  EXPECT_THROW(deserialize_network(bytes.substr(0, bytes.size() - 1)), FormatError);
  EXPECT_THROW(deserialize_network(bytes.substr(0, 7)), FormatError);
  EXPECT_THROW(deserialize_network(bytes + "x"), FormatError);
  EXPECT_THROW(deserialize_network("NOTNET"), FormatError);
}

TEST(Checkpoint, NewerVersionIsVersionError) {
  std::string bytes = serialize_network(Network::reference(2, 1));
  bytes[5] = static_cast<char>(kCheckpointVersion + 1);
  EXPECT_THROW(deserialize_network(bytes), VersionError);
}
