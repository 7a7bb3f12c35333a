#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dreamhone/layers.hpp"
#include "dreamhone/tensor.hpp"

namespace dreamhone {

struct TrainingMeta {
  std::string corpus_id;
  std::size_t epochs_run = 0;
  double final_accuracy = 0.0;

  friend bool operator==(const TrainingMeta&, const TrainingMeta&) = default;
};

/// Activations of one named layer.
struct FeatureEncoding {
  std::string layer_name;
  Tensor activations;
};

/// Ordered, named layers with their weights and a declared input size.
/// Construction shape-checks the whole stack.
class Network {
 public:
  Network(Shape input_dims, std::vector<LayerSpec> layers, TrainingMeta meta = {});

  /// The default dream net: three conv/relu blocks (16, 32, 64 channels,
  /// 3x3, pad 1), 2x2 max pooling after the first two, and a dense
  /// classifier head. Weights are Glorot-uniform from `seed`.
  static Network reference(std::size_t num_categories, std::uint64_t seed,
                           Shape input_dims = {3, 64, 64});

  const Shape& input_dims() const noexcept { return input_dims_; }
  std::span<const LayerSpec> layers() const noexcept { return layers_; }
  LayerSpec& layer(std::size_t i) { return layers_.at(i); }
  const LayerSpec& layer(std::size_t i) const { return layers_.at(i); }
  std::size_t num_layers() const noexcept { return layers_.size(); }

  bool has_layer(std::string_view name) const noexcept;
  /// Throws LookupError for unknown names.
  std::size_t layer_index(std::string_view name) const;
  std::vector<std::string> layer_names() const;
  /// Output dims of the named layer for the declared input size.
  const Shape& layer_dims(std::string_view name) const { return layer_dims_.at(layer_index(name)); }
  const Shape& output_dims() const { return layer_dims_.back(); }
  /// Layers 0..name inclusive.
  std::span<const LayerSpec> prefix(std::string_view name) const;

  /// Activations after layers 0..layer_name inclusive.
  FeatureEncoding forward_to(const Tensor& image, std::string_view layer_name) const;

  /// Output of the full stack. Templated so gradient checks can evaluate the
  /// same weights in double precision.
  template <typename T>
  BasicTensor<T> forward(const BasicTensor<T>& image) const;

  /// Re-draws every weight uniformly in +-sqrt(6 / (fan_in + fan_out));
  /// biases become zero.
  void initialize(std::uint64_t seed);

  const TrainingMeta& meta() const noexcept { return meta_; }
  void set_meta(TrainingMeta meta) { meta_ = std::move(meta); }

  /// True when layers, weights and input dims are identical.
  bool same_weights(const Network& other) const;

 private:
  void check_input(const Shape& dims) const;

  Shape input_dims_;
  std::vector<LayerSpec> layers_;
  std::vector<Shape> layer_dims_;
  TrainingMeta meta_;
};

}  // namespace dreamhone
