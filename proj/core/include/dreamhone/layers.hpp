#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "dreamhone/tensor.hpp"

namespace dreamhone {

/// Cross-correlation layer with zero padding. Weights are [out, in, kh, kw].
struct ConvParams {
  std::size_t out_channels = 1;
  std::size_t in_channels = 1;
  std::size_t kernel_h = 1;
  std::size_t kernel_w = 1;
  std::size_t stride = 1;
  std::size_t pad = 0;
  Tensor weights{Shape{1, 1, 1, 1}};
  Tensor bias{Shape{1}};

  /// Zero-initialized parameters with the given geometry.
  static ConvParams make(std::size_t out_channels, std::size_t in_channels, std::size_t kernel_h,
                         std::size_t kernel_w, std::size_t stride = 1, std::size_t pad = 0);
  void validate() const;
};

struct ReluParams {};

struct PoolParams {
  std::size_t kernel = 2;
  std::size_t stride = 2;
};

/// Affine map of the flattened input. Weights are [out, in].
struct DenseParams {
  Tensor weights{Shape{1, 1}};
  Tensor bias{Shape{1}};

  static DenseParams make(std::size_t out_features, std::size_t in_features);
  std::size_t out_features() const { return weights.dim(0); }
  std::size_t in_features() const { return weights.dim(1); }
  void validate() const;
};

enum class LayerKind { Conv, Relu, MaxPool, Dense };

const char* layer_kind_name(LayerKind kind);

using LayerParams = std::variant<ConvParams, ReluParams, PoolParams, DenseParams>;

struct LayerSpec {
  std::string name;
  LayerParams params;

  LayerKind kind() const { return static_cast<LayerKind>(params.index()); }
  bool has_weights() const { return kind() == LayerKind::Conv || kind() == LayerKind::Dense; }
};

/// Output dims of `layer` for input dims `in`; throws ShapeError when the
/// layer cannot consume `in`.
Shape output_dims(const LayerSpec& layer, const Shape& in);

template <typename T>
BasicTensor<T> conv2d(const BasicTensor<T>& input, const ConvParams& p);

template <typename T>
BasicTensor<T> relu(const BasicTensor<T>& t);

/// Windowed maximum; ties resolve to the first maximal element in row-major
/// order within the window.
template <typename T>
BasicTensor<T> maxpool(const BasicTensor<T>& t, std::size_t kernel, std::size_t stride);

template <typename T>
BasicTensor<T> dense(const BasicTensor<T>& t, const Tensor& weights, const Tensor& bias);

template <typename T>
BasicTensor<T> apply_layer(const LayerSpec& layer, const BasicTensor<T>& input);

/// Activations of every layer: element 0 is the input, element i+1 the output
/// of layers[i].
template <typename T>
std::vector<BasicTensor<T>> forward_trace(std::span<const LayerSpec> layers,
                                          const BasicTensor<T>& input);

/// Parameter gradients for one layer; empty for weight-free layers.
template <typename T>
struct LayerGradient {
  std::vector<T> weights;
  std::vector<T> bias;
};

/// Per-layer gradient buffers sized for `layers`, zero-filled.
template <typename T>
std::vector<LayerGradient<T>> zero_gradients(std::span<const LayerSpec> layers);

/// Reverse pass over a trace produced by forward_trace. Returns dLoss/dInput.
/// When `param_grads` is non-null the weight and bias gradients are added
/// into it (it must come from zero_gradients for the same layers).
template <typename T>
BasicTensor<T> backward_trace(std::span<const LayerSpec> layers,
                              std::span<const BasicTensor<T>> trace, const BasicTensor<T>& upstream,
                              std::vector<LayerGradient<T>>* param_grads = nullptr);

/// dLoss/dInput for a loss whose gradient at the top of `layers` is
/// `upstream`. Forward activations are recomputed.
template <typename T>
BasicTensor<T> backprop_to_input(std::span<const LayerSpec> layers, const BasicTensor<T>& input,
                                 const BasicTensor<T>& upstream);

}  // namespace dreamhone
