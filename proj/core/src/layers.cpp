#include "dreamhone/layers.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <type_traits>

namespace dreamhone {

namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;

template <typename T>
Eigen::Map<const RowMat<float>> weight_map(const Tensor& w, std::size_t rows, std::size_t cols) {
  return Eigen::Map<const RowMat<float>>(w.data().data(), static_cast<Eigen::Index>(rows),
                                         static_cast<Eigen::Index>(cols));
}

// Weights are stored in single precision; the double path widens them.
template <typename T>
RowMat<T> weight_matrix(const Tensor& w, std::size_t rows, std::size_t cols) {
  return weight_map<T>(w, rows, cols).template cast<T>();
}

struct ConvGeometry {
  std::size_t channels, height, width, out_h, out_w;
};

ConvGeometry conv_geometry(const ConvParams& p, const Shape& in) {
  if (in.size() != 3)
    throw ShapeError("conv2d expects [C,H,W] input, got " + shape_to_string(in));
  if (in[0] != p.in_channels)
    throw ShapeError("conv2d channel mismatch: input has " + std::to_string(in[0]) +
                     " channels, layer expects " + std::to_string(p.in_channels));
  const std::size_t ph = in[1] + 2 * p.pad;
  const std::size_t pw = in[2] + 2 * p.pad;
  if (ph < p.kernel_h || pw < p.kernel_w)
    throw ShapeError("conv2d kernel " + std::to_string(p.kernel_h) + "x" +
                     std::to_string(p.kernel_w) + " larger than padded input " +
                     shape_to_string(in));
  return {in[0], in[1], in[2], (ph - p.kernel_h) / p.stride + 1, (pw - p.kernel_w) / p.stride + 1};
}

// Column matrix [C*kh*kw, out_h*out_w] of receptive fields.
template <typename T>
RowMat<T> im2col(const BasicTensor<T>& in, const ConvParams& p, const ConvGeometry& g) {
  const std::size_t k = g.channels * p.kernel_h * p.kernel_w;
  const std::size_t cols = g.out_h * g.out_w;
  RowMat<T> m = RowMat<T>::Zero(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(cols));
  const auto pad = static_cast<std::ptrdiff_t>(p.pad);
  for (std::size_t c = 0; c < g.channels; ++c)
    for (std::size_t ky = 0; ky < p.kernel_h; ++ky)
      for (std::size_t kx = 0; kx < p.kernel_w; ++kx) {
        T* row = m.row(static_cast<Eigen::Index>((c * p.kernel_h + ky) * p.kernel_w + kx)).data();
        for (std::size_t oy = 0; oy < g.out_h; ++oy) {
          const auto iy = static_cast<std::ptrdiff_t>(oy * p.stride + ky) - pad;
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.height)) continue;
          for (std::size_t ox = 0; ox < g.out_w; ++ox) {
            const auto ix = static_cast<std::ptrdiff_t>(ox * p.stride + kx) - pad;
            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(g.width)) continue;
            row[oy * g.out_w + ox] = in.at(c, static_cast<std::size_t>(iy), static_cast<std::size_t>(ix));
          }
        }
      }
  return m;
}

template <typename T>
void col2im_add(const RowMat<T>& m, const ConvParams& p, const ConvGeometry& g, BasicTensor<T>& out) {
  const auto pad = static_cast<std::ptrdiff_t>(p.pad);
  for (std::size_t c = 0; c < g.channels; ++c)
    for (std::size_t ky = 0; ky < p.kernel_h; ++ky)
      for (std::size_t kx = 0; kx < p.kernel_w; ++kx) {
        const T* row = m.row(static_cast<Eigen::Index>((c * p.kernel_h + ky) * p.kernel_w + kx)).data();
        for (std::size_t oy = 0; oy < g.out_h; ++oy) {
          const auto iy = static_cast<std::ptrdiff_t>(oy * p.stride + ky) - pad;
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.height)) continue;
          for (std::size_t ox = 0; ox < g.out_w; ++ox) {
            const auto ix = static_cast<std::ptrdiff_t>(ox * p.stride + kx) - pad;
            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(g.width)) continue;
            out.at(c, static_cast<std::size_t>(iy), static_cast<std::size_t>(ix)) += row[oy * g.out_w + ox];
          }
        }
      }
}

struct PoolGeometry {
  std::size_t channels, height, width, out_h, out_w;
};

PoolGeometry pool_geometry(const Shape& in, std::size_t kernel, std::size_t stride) {
  if (in.size() != 3)
    throw ShapeError("maxpool expects [C,H,W] input, got " + shape_to_string(in));
  if (kernel == 0 || stride == 0) throw ShapeError("maxpool kernel and stride must be positive");
  if (in[1] < kernel || in[2] < kernel)
    throw ShapeError("maxpool window " + std::to_string(kernel) + " larger than input " +
                     shape_to_string(in));
  return {in[0], in[1], in[2], (in[1] - kernel) / stride + 1, (in[2] - kernel) / stride + 1};
}

// Flat input index of the first maximal element in window (c, oy, ox).
template <typename T>
std::size_t pool_argmax(const BasicTensor<T>& in, const PoolGeometry& g, std::size_t kernel,
                        std::size_t stride, std::size_t c, std::size_t oy, std::size_t ox) {
  std::size_t best = (c * g.height + oy * stride) * g.width + ox * stride;
  T best_v = in[best];
  for (std::size_t ky = 0; ky < kernel; ++ky)
    for (std::size_t kx = 0; kx < kernel; ++kx) {
      const std::size_t idx = (c * g.height + oy * stride + ky) * g.width + ox * stride + kx;
      if (in[idx] > best_v) {
        best_v = in[idx];
        best = idx;
      }
    }
  return best;
}

void check_dense(const Shape& in, const Tensor& weights, const Tensor& bias) {
  if (weights.rank() != 2) throw ShapeError("dense weights must be [out, in]");
  if (bias.size() != weights.dim(0)) throw ShapeError("dense bias length must equal out features");
  if (shape_volume(in) != weights.dim(1))
    throw ShapeError("dense expects " + std::to_string(weights.dim(1)) + " inputs, got " +
                     shape_to_string(in));
}

}  // namespace

ConvParams ConvParams::make(std::size_t out_channels, std::size_t in_channels, std::size_t kernel_h,
                            std::size_t kernel_w, std::size_t stride, std::size_t pad) {
  ConvParams p;
  p.out_channels = out_channels;
  p.in_channels = in_channels;
  p.kernel_h = kernel_h;
  p.kernel_w = kernel_w;
  p.stride = stride;
  p.pad = pad;
  p.weights = Tensor(Shape{out_channels, in_channels, kernel_h, kernel_w});
  p.bias = Tensor(Shape{out_channels});
  p.validate();
  return p;
}

void ConvParams::validate() const {
  if (out_channels == 0 || in_channels == 0 || kernel_h == 0 || kernel_w == 0 || stride == 0)
    throw ShapeError("conv geometry must be positive");
  if (weights.dims() != Shape{out_channels, in_channels, kernel_h, kernel_w})
    throw ShapeError("conv weights dims " + shape_to_string(weights.dims()) +
                     " do not match declared geometry");
  if (bias.rank() != 1 || bias.size() != out_channels)
    throw ShapeError("conv bias length must equal out_channels");
}

DenseParams DenseParams::make(std::size_t out_features, std::size_t in_features) {
  DenseParams p;
  p.weights = Tensor(Shape{out_features, in_features});
  p.bias = Tensor(Shape{out_features});
  return p;
}

void DenseParams::validate() const {
  if (weights.rank() != 2) throw ShapeError("dense weights must be [out, in]");
  if (bias.rank() != 1 || bias.size() != weights.dim(0))
    throw ShapeError("dense bias length must equal out features");
}

const char* layer_kind_name(LayerKind kind) {
  switch (kind) {
    case LayerKind::Conv: return "conv";
    case LayerKind::Relu: return "relu";
    case LayerKind::MaxPool: return "maxpool";
    case LayerKind::Dense: return "dense";
  }
  return "?";
}

Shape output_dims(const LayerSpec& layer, const Shape& in) {
  return std::visit(
      [&](const auto& p) -> Shape {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, ConvParams>) {
          const auto g = conv_geometry(p, in);
          return {p.out_channels, g.out_h, g.out_w};
        } else if constexpr (std::is_same_v<P, ReluParams>) {
          return in;
        } else if constexpr (std::is_same_v<P, PoolParams>) {
          const auto g = pool_geometry(in, p.kernel, p.stride);
          return {g.channels, g.out_h, g.out_w};
        } else {
          check_dense(in, p.weights, p.bias);
          return {p.out_features()};
        }
      },
      layer.params);
}

template <typename T>
BasicTensor<T> conv2d(const BasicTensor<T>& input, const ConvParams& p) {
  const auto g = conv_geometry(p, input.dims());
  const std::size_t k = g.channels * p.kernel_h * p.kernel_w;
  const RowMat<T> cols = im2col(input, p, g);
  BasicTensor<T> out(Shape{p.out_channels, g.out_h, g.out_w});
  Eigen::Map<RowMat<T>> om(out.data().data(), static_cast<Eigen::Index>(p.out_channels),
                           static_cast<Eigen::Index>(g.out_h * g.out_w));
  if constexpr (std::is_same_v<T, float>) {
    om.noalias() = weight_map<T>(p.weights, p.out_channels, k) * cols;
  } else {
    om.noalias() = weight_matrix<T>(p.weights, p.out_channels, k) * cols;
  }
  for (std::size_t o = 0; o < p.out_channels; ++o)
    om.row(static_cast<Eigen::Index>(o)).array() += static_cast<T>(p.bias[o]);
  return out;
}

template <typename T>
BasicTensor<T> relu(const BasicTensor<T>& t) {
  BasicTensor<T> out = t;
  for (auto& v : out.data()) v = v > T{0} ? v : T{0};
  return out;
}

template <typename T>
BasicTensor<T> maxpool(const BasicTensor<T>& t, std::size_t kernel, std::size_t stride) {
  const auto g = pool_geometry(t.dims(), kernel, stride);
  BasicTensor<T> out(Shape{g.channels, g.out_h, g.out_w});
  for (std::size_t c = 0; c < g.channels; ++c)
    for (std::size_t oy = 0; oy < g.out_h; ++oy)
      for (std::size_t ox = 0; ox < g.out_w; ++ox)
        out.at(c, oy, ox) = t[pool_argmax(t, g, kernel, stride, c, oy, ox)];
  return out;
}

template <typename T>
BasicTensor<T> dense(const BasicTensor<T>& t, const Tensor& weights, const Tensor& bias) {
  check_dense(t.dims(), weights, bias);
  const std::size_t nout = weights.dim(0);
  const std::size_t nin = weights.dim(1);
  BasicTensor<T> out(Shape{nout});
  Eigen::Map<const Vec<T>> x(t.data().data(), static_cast<Eigen::Index>(nin));
  Eigen::Map<Vec<T>> y(out.data().data(), static_cast<Eigen::Index>(nout));
  if constexpr (std::is_same_v<T, float>) {
    y.noalias() = weight_map<T>(weights, nout, nin) * x;
  } else {
    y.noalias() = weight_matrix<T>(weights, nout, nin) * x;
  }
  for (std::size_t o = 0; o < nout; ++o) y[static_cast<Eigen::Index>(o)] += static_cast<T>(bias[o]);
  return out;
}

template <typename T>
BasicTensor<T> apply_layer(const LayerSpec& layer, const BasicTensor<T>& input) {
  return std::visit(
      [&](const auto& p) -> BasicTensor<T> {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, ConvParams>) return conv2d(input, p);
        else if constexpr (std::is_same_v<P, ReluParams>) return relu(input);
        else if constexpr (std::is_same_v<P, PoolParams>) return maxpool(input, p.kernel, p.stride);
        else return dense(input, p.weights, p.bias);
      },
      layer.params);
}

template <typename T>
std::vector<BasicTensor<T>> forward_trace(std::span<const LayerSpec> layers,
                                          const BasicTensor<T>& input) {
  std::vector<BasicTensor<T>> trace;
  trace.reserve(layers.size() + 1);
  trace.push_back(input);
  for (const auto& layer : layers) trace.push_back(apply_layer(layer, trace.back()));
  return trace;
}

template <typename T>
std::vector<LayerGradient<T>> zero_gradients(std::span<const LayerSpec> layers) {
  std::vector<LayerGradient<T>> grads(layers.size());
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (const auto* c = std::get_if<ConvParams>(&layers[i].params)) {
      grads[i].weights.assign(c->weights.size(), T{0});
      grads[i].bias.assign(c->bias.size(), T{0});
    } else if (const auto* d = std::get_if<DenseParams>(&layers[i].params)) {
      grads[i].weights.assign(d->weights.size(), T{0});
      grads[i].bias.assign(d->bias.size(), T{0});
    }
  }
  return grads;
}

namespace {

template <typename T>
BasicTensor<T> conv_backward(const ConvParams& p, const BasicTensor<T>& in, const BasicTensor<T>& up,
                             LayerGradient<T>* pg) {
  const auto g = conv_geometry(p, in.dims());
  const std::size_t k = g.channels * p.kernel_h * p.kernel_w;
  const auto positions = static_cast<Eigen::Index>(g.out_h * g.out_w);
  Eigen::Map<const RowMat<T>> gm(up.data().data(), static_cast<Eigen::Index>(p.out_channels), positions);
  if (pg) {
    const RowMat<T> cols = im2col(in, p, g);
    Eigen::Map<RowMat<T>> dw(pg->weights.data(), static_cast<Eigen::Index>(p.out_channels),
                             static_cast<Eigen::Index>(k));
    dw.noalias() += gm * cols.transpose();
    for (std::size_t o = 0; o < p.out_channels; ++o) {
      const T* row = up.data().data() + o * static_cast<std::size_t>(positions);
      T sum{0};
      for (Eigen::Index j = 0; j < positions; ++j) sum += row[j];
      pg->bias[o] += sum;
    }
  }
  RowMat<T> dcols;
  if constexpr (std::is_same_v<T, float>) {
    dcols.noalias() = weight_map<T>(p.weights, p.out_channels, k).transpose() * gm;
  } else {
    dcols.noalias() = weight_matrix<T>(p.weights, p.out_channels, k).transpose() * gm;
  }
  BasicTensor<T> dx(in.dims());
  col2im_add(dcols, p, g, dx);
  return dx;
}

template <typename T>
BasicTensor<T> dense_backward(const DenseParams& p, const BasicTensor<T>& in, const BasicTensor<T>& up,
                              LayerGradient<T>* pg) {
  const std::size_t nout = p.out_features();
  const std::size_t nin = p.in_features();
  Eigen::Map<const Vec<T>> gy(up.data().data(), static_cast<Eigen::Index>(nout));
  Eigen::Map<const Vec<T>> x(in.data().data(), static_cast<Eigen::Index>(nin));
  if (pg) {
    Eigen::Map<RowMat<T>> dw(pg->weights.data(), static_cast<Eigen::Index>(nout),
                             static_cast<Eigen::Index>(nin));
    dw.noalias() += gy * x.transpose();
    Eigen::Map<Vec<T>> db(pg->bias.data(), static_cast<Eigen::Index>(nout));
    db += gy;
  }
  BasicTensor<T> dx(in.dims());
  Eigen::Map<Vec<T>> dxm(dx.data().data(), static_cast<Eigen::Index>(nin));
  if constexpr (std::is_same_v<T, float>) {
    dxm.noalias() = weight_map<T>(p.weights, nout, nin).transpose() * gy;
  } else {
    dxm.noalias() = weight_matrix<T>(p.weights, nout, nin).transpose() * gy;
  }
  return dx;
}

template <typename T>
BasicTensor<T> pool_backward(const PoolParams& p, const BasicTensor<T>& in, const BasicTensor<T>& up) {
  const auto g = pool_geometry(in.dims(), p.kernel, p.stride);
  BasicTensor<T> dx(in.dims());
  for (std::size_t c = 0; c < g.channels; ++c)
    for (std::size_t oy = 0; oy < g.out_h; ++oy)
      for (std::size_t ox = 0; ox < g.out_w; ++ox)
        dx[pool_argmax(in, g, p.kernel, p.stride, c, oy, ox)] += up.at(c, oy, ox);
  return dx;
}

template <typename T>
BasicTensor<T> relu_backward(const BasicTensor<T>& in, const BasicTensor<T>& up) {
  BasicTensor<T> dx = up;
  for (std::size_t i = 0; i < dx.size(); ++i)
    if (!(in[i] > T{0})) dx[i] = T{0};
  return dx;
}

}  // namespace

template <typename T>
BasicTensor<T> backward_trace(std::span<const LayerSpec> layers, std::span<const BasicTensor<T>> trace,
                              const BasicTensor<T>& upstream,
                              std::vector<LayerGradient<T>>* param_grads) {
  if (trace.size() != layers.size() + 1)
    throw ShapeError("trace length does not match layer count");
  if (upstream.dims() != trace.back().dims())
    throw ShapeError("upstream gradient dims " + shape_to_string(upstream.dims()) +
                     " do not match top activation dims " + shape_to_string(trace.back().dims()));
  if (param_grads && param_grads->size() != layers.size())
    throw ShapeError("gradient buffer count does not match layer count");

  BasicTensor<T> grad = upstream;
  for (std::size_t li = layers.size(); li-- > 0;) {
    const BasicTensor<T>& in = trace[li];
    LayerGradient<T>* pg = param_grads ? &(*param_grads)[li] : nullptr;
    grad = std::visit(
        [&](const auto& p) -> BasicTensor<T> {
          using P = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<P, ConvParams>) return conv_backward(p, in, grad, pg);
          else if constexpr (std::is_same_v<P, ReluParams>) return relu_backward(in, grad);
          else if constexpr (std::is_same_v<P, PoolParams>) return pool_backward(p, in, grad);
          else return dense_backward(p, in, grad, pg);
        },
        layers[li].params);
  }
  return grad;
}

template <typename T>
BasicTensor<T> backprop_to_input(std::span<const LayerSpec> layers, const BasicTensor<T>& input,
                                 const BasicTensor<T>& upstream) {
  const auto trace = forward_trace(layers, input);
  return backward_trace<T>(layers, trace, upstream, nullptr);
}

#define DREAMHONE_INSTANTIATE(T)                                                                    \
  template BasicTensor<T> conv2d(const BasicTensor<T>&, const ConvParams&);                         \
  template BasicTensor<T> relu(const BasicTensor<T>&);                                              \
  template BasicTensor<T> maxpool(const BasicTensor<T>&, std::size_t, std::size_t);                 \
  template BasicTensor<T> dense(const BasicTensor<T>&, const Tensor&, const Tensor&);               \
  template BasicTensor<T> apply_layer(const LayerSpec&, const BasicTensor<T>&);                     \
  template std::vector<BasicTensor<T>> forward_trace(std::span<const LayerSpec>,                    \
                                                     const BasicTensor<T>&);                        \
  template std::vector<LayerGradient<T>> zero_gradients(std::span<const LayerSpec>);                \
  template BasicTensor<T> backward_trace(std::span<const LayerSpec>, std::span<const BasicTensor<T>>, \
                                         const BasicTensor<T>&, std::vector<LayerGradient<T>>*);    \
  template BasicTensor<T> backprop_to_input(std::span<const LayerSpec>, const BasicTensor<T>&,      \
                                            const BasicTensor<T>&);

DREAMHONE_INSTANTIATE(float)
DREAMHONE_INSTANTIATE(double)

#undef DREAMHONE_INSTANTIATE

}  // namespace dreamhone
