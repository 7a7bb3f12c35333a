#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dreamhone/network.hpp"

namespace dreamhone {

/// Labeled images in corpus order. Images are produced on demand so large
/// tile corpora need not be materialized.
struct LabeledSet {
  std::vector<std::string> categories;
  std::vector<int> labels;
  std::function<Tensor(std::size_t)> image;

  std::size_t size() const noexcept { return labels.size(); }
};

struct TrainConfig {
  std::size_t epochs = 10;
  double lr = 0.01;
  std::uint64_t seed = 1;
  std::size_t batch_size = 16;
  /// Trailing share of each category (in corpus order) held out.
  double holdout_fraction = 0.2;
  /// Stop once holdout accuracy reaches this value.
  std::optional<double> stop_at_holdout_accuracy;
};

struct EpochStats {
  std::size_t epoch = 0;
  double train_loss = 0.0;  // mean cross-entropy seen during the epoch
  double train_accuracy = 0.0;
  double holdout_accuracy = 0.0;
};

struct TrainResult {
  Network net;
  std::vector<EpochStats> history;
};

struct HoldoutSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> holdout;
};

/// Last `fraction` (floored) of each category's items become holdout.
HoldoutSplit split_holdout(const std::vector<int>& labels, std::size_t num_categories, double fraction);

/// Mini-batch SGD (no momentum) with softmax cross-entropy on the network's
/// final layer. Deterministic for a given seed.
TrainResult train_classifier(Network net, const LabeledSet& data, const TrainConfig& cfg,
                             const std::function<void(const EpochStats&)>& on_epoch = {});

/// Mean softmax cross-entropy of the network outputs against `labels`.
double classifier_loss(const Network& net, const std::vector<Tensor>& images,
                       const std::vector<int>& labels);

/// One full-batch gradient step. Returns the loss before the update.
double sgd_step(Network& net, const std::vector<Tensor>& images, const std::vector<int>& labels,
                double lr);

int predict(const Network& net, const Tensor& image);

}  // namespace dreamhone
