#include "dreamhone/network.hpp"

#include <cmath>
#include <set>

#include "dreamhone/rng.hpp"

namespace dreamhone {

Network::Network(Shape input_dims, std::vector<LayerSpec> layers, TrainingMeta meta)
    : input_dims_(std::move(input_dims)), layers_(std::move(layers)), meta_(std::move(meta)) {
  if (input_dims_.size() != 3) throw ShapeError("network input must be [C,H,W]");
  if (shape_volume(input_dims_) == 0) throw ShapeError("network input dims must be positive");
  if (layers_.empty()) throw InputError("network needs at least one layer");
  std::set<std::string> names;
  Shape dims = input_dims_;
  for (const auto& layer : layers_) {
    if (layer.name.empty()) throw InputError("layer names must be non-empty");
    if (!names.insert(layer.name).second) throw InputError("duplicate layer name '" + layer.name + "'");
    if (const auto* c = std::get_if<ConvParams>(&layer.params)) c->validate();
    if (const auto* d = std::get_if<DenseParams>(&layer.params)) d->validate();
    try {
      dims = dreamhone::output_dims(layer, dims);
    } catch (const ShapeError& e) {
      throw ShapeError("layer '" + layer.name + "': " + e.what());
    }
    layer_dims_.push_back(dims);
  }
}

Network Network::reference(std::size_t num_categories, std::uint64_t seed, Shape input_dims) {
  if (num_categories == 0) throw InputError("reference net needs at least one category");
  if (input_dims.size() != 3) throw ShapeError("network input must be [C,H,W]");
  const std::size_t c = input_dims[0];
  std::vector<LayerSpec> layers;
  layers.push_back({"conv1", ConvParams::make(16, c, 3, 3, 1, 1)});
  layers.push_back({"relu1", ReluParams{}});
  layers.push_back({"pool1", PoolParams{2, 2}});
  layers.push_back({"conv2", ConvParams::make(32, 16, 3, 3, 1, 1)});
  layers.push_back({"relu2", ReluParams{}});
  layers.push_back({"pool2", PoolParams{2, 2}});
  layers.push_back({"conv3", ConvParams::make(64, 32, 3, 3, 1, 1)});
  layers.push_back({"relu3", ReluParams{}});
  // The head width depends on the input size, so walk the conv stack first.
  Shape dims = input_dims;
  for (const auto& l : layers) dims = dreamhone::output_dims(l, dims);
  layers.push_back({"fc", DenseParams::make(num_categories, shape_volume(dims))});
  Network net(std::move(input_dims), std::move(layers));
  net.initialize(seed);
  return net;
}

bool Network::has_layer(std::string_view name) const noexcept {
  for (const auto& l : layers_)
    if (l.name == name) return true;
  return false;
}

std::size_t Network::layer_index(std::string_view name) const {
  for (std::size_t i = 0; i < layers_.size(); ++i)
    if (layers_[i].name == name) return i;
  throw LookupError("unknown layer '" + std::string(name) + "'");
}

std::vector<std::string> Network::layer_names() const {
  std::vector<std::string> out;
  for (const auto& l : layers_) out.push_back(l.name);
  return out;
}

std::span<const LayerSpec> Network::prefix(std::string_view name) const {
  return std::span<const LayerSpec>(layers_).first(layer_index(name) + 1);
}

void Network::check_input(const Shape& dims) const {
  if (dims != input_dims_)
    throw ShapeError("image dims " + shape_to_string(dims) + " do not match network input " +
                     shape_to_string(input_dims_));
}

FeatureEncoding Network::forward_to(const Tensor& image, std::string_view layer_name) const {
  const auto layers = prefix(layer_name);
  check_input(image.dims());
  Tensor act = image;
  for (const auto& l : layers) act = apply_layer(l, act);
  return {std::string(layer_name), std::move(act)};
}

template <typename T>
BasicTensor<T> Network::forward(const BasicTensor<T>& image) const {
  check_input(image.dims());
  BasicTensor<T> act = image;
  for (const auto& l : layers_) act = apply_layer(l, act);
  return act;
}

template Tensor Network::forward(const Tensor&) const;
template TensorD Network::forward(const TensorD&) const;

void Network::initialize(std::uint64_t seed) {
  Rng rng(seed);
  auto fill = [&](Tensor& w, std::size_t fan_in, std::size_t fan_out) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (auto& v : w.data()) v = static_cast<float>(rng.uniform(-limit, limit));
  };
  for (auto& layer : layers_) {
    if (auto* c = std::get_if<ConvParams>(&layer.params)) {
      const std::size_t area = c->kernel_h * c->kernel_w;
      fill(c->weights, c->in_channels * area, c->out_channels * area);
      c->bias = Tensor(Shape{c->out_channels});
    } else if (auto* d = std::get_if<DenseParams>(&layer.params)) {
      fill(d->weights, d->in_features(), d->out_features());
      d->bias = Tensor(Shape{d->out_features()});
    }
  }
}

bool Network::same_weights(const Network& other) const {
  if (input_dims_ != other.input_dims_ || layers_.size() != other.layers_.size()) return false;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& a = layers_[i];
    const auto& b = other.layers_[i];
    if (a.name != b.name || a.kind() != b.kind()) return false;
    if (const auto* ca = std::get_if<ConvParams>(&a.params)) {
      const auto& cb = std::get<ConvParams>(b.params);
      if (ca->stride != cb.stride || ca->pad != cb.pad || !(ca->weights == cb.weights) ||
          !(ca->bias == cb.bias))
        return false;
    } else if (const auto* da = std::get_if<DenseParams>(&a.params)) {
      const auto& db = std::get<DenseParams>(b.params);
      if (!(da->weights == db.weights) || !(da->bias == db.bias)) return false;
    } else if (const auto* pa = std::get_if<PoolParams>(&a.params)) {
      const auto& pb = std::get<PoolParams>(b.params);
      if (pa->kernel != pb.kernel || pa->stride != pb.stride) return false;
    }
  }
  return true;
}

}  // namespace dreamhone
