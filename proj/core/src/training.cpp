#include "dreamhone/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dreamhone/rng.hpp"

namespace dreamhone {

namespace {

std::size_t num_outputs(const Network& net) {
  const Shape& out = net.output_dims();
  if (out.size() != 1) throw InputError("classifier head must produce a flat score vector");
  return out[0];
}

void check_label(int label, std::size_t classes) {
  if (label < 0 || static_cast<std::size_t>(label) >= classes)
    throw InputError("label " + std::to_string(label) + " outside category set of size " +
                     std::to_string(classes));
}

struct SampleResult {
  double loss;
  bool correct;
};

// Softmax cross-entropy for one image. Adds parameter gradients into `grads`
// when provided.
SampleResult sample_gradient(const Network& net, const Tensor& image, int label,
                             std::vector<LayerGradient<float>>* grads) {
  const auto trace = forward_trace<float>(net.layers(), image);
  const Tensor& scores = trace.back();
  const std::size_t k = scores.size();
  double mx = scores[0];
  std::size_t arg = 0;
  for (std::size_t i = 1; i < k; ++i)
    if (scores[i] > mx) {
      mx = scores[i];
      arg = i;
    }
  std::vector<double> p(k);
  double z = 0.0;
  for (std::size_t i = 0; i < k; ++i) z += (p[i] = std::exp(scores[i] - mx));
  for (auto& v : p) v /= z;
  const auto y = static_cast<std::size_t>(label);
  const double loss = -std::log(std::max(p[y], 1e-300));
  if (grads) {
    Tensor up(scores.dims());
    for (std::size_t i = 0; i < k; ++i) up[i] = static_cast<float>(p[i] - (i == y ? 1.0 : 0.0));
    backward_trace<float>(net.layers(), trace, up, grads);
  }
  return {loss, arg == y};
}

void apply_update(Network& net, const std::vector<LayerGradient<float>>& grads, double scale) {
  const auto step = static_cast<float>(scale);
  for (std::size_t i = 0; i < net.num_layers(); ++i) {
    auto& layer = net.layer(i);
    Tensor* w = nullptr;
    Tensor* b = nullptr;
    if (auto* c = std::get_if<ConvParams>(&layer.params)) {
      w = &c->weights;
      b = &c->bias;
    } else if (auto* d = std::get_if<DenseParams>(&layer.params)) {
      w = &d->weights;
      b = &d->bias;
    } else {
      continue;
    }
    for (std::size_t j = 0; j < w->size(); ++j) (*w)[j] -= step * grads[i].weights[j];
    for (std::size_t j = 0; j < b->size(); ++j) (*b)[j] -= step * grads[i].bias[j];
  }
}

double accuracy(const Network& net, const LabeledSet& data, const std::vector<std::size_t>& idx) {
  if (idx.empty()) return 1.0;
  std::size_t ok = 0;
  for (auto i : idx) ok += predict(net, data.image(i)) == data.labels[i] ? 1 : 0;
  return static_cast<double>(ok) / static_cast<double>(idx.size());
}

}  // namespace

HoldoutSplit split_holdout(const std::vector<int>& labels, std::size_t num_categories, double fraction) {
  std::vector<std::vector<std::size_t>> per(num_categories);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    check_label(labels[i], num_categories);
    per[static_cast<std::size_t>(labels[i])].push_back(i);
  }
  HoldoutSplit split;
  for (const auto& members : per) {
    const auto n_hold = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(members.size())));
    const std::size_t n_train = members.size() - n_hold;
    split.train.insert(split.train.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n_train));
    split.holdout.insert(split.holdout.end(), members.begin() + static_cast<std::ptrdiff_t>(n_train), members.end());
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.holdout.begin(), split.holdout.end());
  return split;
}

int predict(const Network& net, const Tensor& image) {
  const Tensor scores = net.forward(image);
  return static_cast<int>(std::max_element(scores.values().begin(), scores.values().end()) -
                          scores.values().begin());
}

TrainResult train_classifier(Network net, const LabeledSet& data, const TrainConfig& cfg,
                             const std::function<void(const EpochStats&)>& on_epoch) {
  if (data.size() == 0) throw InputError("training set is empty");
  if (data.categories.empty()) throw InputError("training set has no categories");
  if (!data.image) throw InputError("training set has no image source");
  if (cfg.batch_size == 0) throw InputError("batch_size must be positive");
  const std::size_t classes = num_outputs(net);
  if (classes != data.categories.size())
    throw InputError("network has " + std::to_string(classes) + " outputs but corpus has " +
                     std::to_string(data.categories.size()) + " categories");

  const HoldoutSplit split = split_holdout(data.labels, classes, cfg.holdout_fraction);
  if (split.train.empty()) throw InputError("holdout split leaves no training items");

  Rng rng(cfg.seed);
  std::vector<std::size_t> order = split.train;
  TrainResult result{std::move(net), {}};
  Network& model = result.net;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i - 1)));
      std::swap(order[i - 1], order[j]);
    }
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      auto grads = zero_gradients<float>(model.layers());
      for (std::size_t b = start; b < end; ++b) {
        const std::size_t idx = order[b];
        const auto r = sample_gradient(model, data.image(idx), data.labels[idx], &grads);
        loss_sum += r.loss;
        correct += r.correct ? 1 : 0;
      }
      apply_update(model, grads, cfg.lr / static_cast<double>(end - start));
    }
    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = loss_sum / static_cast<double>(order.size());
    stats.train_accuracy = static_cast<double>(correct) / static_cast<double>(order.size());
    stats.holdout_accuracy = accuracy(model, data, split.holdout);
    result.history.push_back(stats);
    if (on_epoch) on_epoch(stats);
    if (cfg.stop_at_holdout_accuracy && stats.holdout_accuracy >= *cfg.stop_at_holdout_accuracy) break;
  }

  TrainingMeta meta = model.meta();
  meta.epochs_run += result.history.size();
  if (!result.history.empty()) meta.final_accuracy = result.history.back().holdout_accuracy;
  model.set_meta(std::move(meta));
  return result;
}

double classifier_loss(const Network& net, const std::vector<Tensor>& images,
                       const std::vector<int>& labels) {
  if (images.empty() || images.size() != labels.size())
    throw InputError("classifier_loss needs matching non-empty images and labels");
  const std::size_t classes = num_outputs(net);
  double sum = 0.0;
  for (std::size_t i = 0; i < images.size(); ++i) {
    check_label(labels[i], classes);
    sum += sample_gradient(net, images[i], labels[i], nullptr).loss;
  }
  return sum / static_cast<double>(images.size());
}

double sgd_step(Network& net, const std::vector<Tensor>& images, const std::vector<int>& labels,
                double lr) {
  if (images.empty() || images.size() != labels.size())
    throw InputError("sgd_step needs matching non-empty images and labels");
  const std::size_t classes = num_outputs(net);
  auto grads = zero_gradients<float>(net.layers());
  double sum = 0.0;
  for (std::size_t i = 0; i < images.size(); ++i) {
    check_label(labels[i], classes);
    sum += sample_gradient(net, images[i], labels[i], &grads).loss;
  }
  apply_update(net, grads, lr / static_cast<double>(images.size()));
  return sum / static_cast<double>(images.size());
}

}  // namespace dreamhone
