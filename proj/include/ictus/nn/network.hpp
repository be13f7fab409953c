#pragma once
// Network assembly: spec validation, shape propagation, parameter init, and
// the batched forward/backward passes with softmax cross-entropy.

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "ictus/imaging.hpp"
#include "ictus/nn/layers.hpp"
#include "ictus/recording.hpp"

namespace ictus::nn {

struct NetworkSpec {
  int input_h{0};
  int input_w{0};
  ImageType image_type{ImageType::OneSec};
  std::vector<LayerSpec> layers;
};

// Propagated (c, h, w) after every layer. Throws when any dimension collapses
// or the net does not end in a 2-way softmax.
inline std::vector<Shape> propagate_shapes(const NetworkSpec& spec) {
  if (spec.input_h < 1 || spec.input_w < 1) throw DataError("network: bad input dims");
  std::vector<Shape> shapes;
  Shape cur{1, spec.input_h, spec.input_w};
  for (size_t li = 0; li < spec.layers.size(); ++li) {
    const auto& l = spec.layers[li];
    switch (l.kind) {
      case LayerKind::Conv: {
        if (l.stride_h < 1 || l.stride_w < 1 || l.pad.top < 0 || l.pad.bottom < 0 ||
            l.pad.left < 0 || l.pad.right < 0) {
          throw DataError("network: conv layer " + std::to_string(li) + " has bad stride/padding");
        }
        const int eh = cur.h + l.pad.top + l.pad.bottom;
        const int ew = cur.w + l.pad.left + l.pad.right;
        if (eh < l.kernel_h || ew < l.kernel_w || l.filters < 1) {
          throw DataError("network: conv layer " + std::to_string(li) + " shrinks below kernel");
        }
        cur = {l.filters, (eh - l.kernel_h) / l.stride_h + 1, (ew - l.kernel_w) / l.stride_w + 1};
        break;
      }
      case LayerKind::MaxPool: {
        if (cur.h < l.pool_h || cur.w < l.pool_w) {
          throw DataError("network: maxpool layer " + std::to_string(li) + " larger than input");
        }
        cur = {cur.c, (cur.h - l.pool_h) / l.stride_h + 1, (cur.w - l.pool_w) / l.stride_w + 1};
        break;
      }
      case LayerKind::FullyConnected:
        if (l.units < 1) throw DataError("network: fc layer with no units");
        cur = {l.units, 1, 1};
        break;
      case LayerKind::Dropout:
        if (!(l.rate >= 0.0 && l.rate < 1.0)) {
          throw DataError("network: dropout rate must be in [0,1)");
        }
        break;
      case LayerKind::BatchNorm:
      case LayerKind::InstanceNorm:
      case LayerKind::Relu:
      case LayerKind::Softmax:
        break;
    }
    if (cur.c < 1 || cur.h < 1 || cur.w < 1) {
      throw DataError("network: layer " + std::to_string(li) + " output collapsed");
    }
    shapes.push_back(cur);
  }
  if (spec.layers.empty() || spec.layers.back().kind != LayerKind::Softmax ||
      shapes.back().count() != 2) {
    throw DataError("network: must end in softmax over exactly 2 values");
  }
  return shapes;
}

template <class T>
struct Network {
  NetworkSpec spec;
  std::vector<ParamBlock<T>> params;  // aligned with spec.layers
  uint64_t seed{0};
  std::mt19937_64 rng;  // dropout stream
};

// He-uniform for conv/FC kernels, scale 1 / shift 0 for norm layers.
template <class T>
Network<T> init_network(const NetworkSpec& spec, uint64_t seed) {
  const auto shapes = propagate_shapes(spec);
  Network<T> net;
  net.spec = spec;
  net.seed = seed;
  net.rng.seed(seed);
  net.params.resize(spec.layers.size());

  std::mt19937_64 init_rng(seed ^ 0x5eedf00dULL);
  auto he_uniform = [&](Tensor<T>& t, int fan_in) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (auto& v : t.data) v = static_cast<T>(dist(init_rng));
  };

  Shape in{1, spec.input_h, spec.input_w};
  for (size_t li = 0; li < spec.layers.size(); ++li) {
    const auto& l = spec.layers[li];
    auto& p = net.params[li];
    switch (l.kind) {
      case LayerKind::Conv: {
        p.w.resize(l.filters, in.c, l.kernel_h, l.kernel_w);
        he_uniform(p.w, in.c * l.kernel_h * l.kernel_w);
        p.b.resize(l.filters, 1, 1, 1);
        break;
      }
      case LayerKind::FullyConnected: {
        const int in_dim = static_cast<int>(in.count());
        p.w.resize(l.units, in_dim, 1, 1);
        he_uniform(p.w, in_dim);
        p.b.resize(l.units, 1, 1, 1);
        break;
      }
      case LayerKind::BatchNorm: {
        p.w.resize(in.c, 1, 1, 1);
        p.b.resize(in.c, 1, 1, 1);
        p.running_mean.resize(in.c, 1, 1, 1);
        p.running_var.resize(in.c, 1, 1, 1);
        for (auto& v : p.w.data) v = T(1);
        for (auto& v : p.running_var.data) v = T(1);
        break;
      }
      case LayerKind::InstanceNorm: {
        p.w.resize(in.c, 1, 1, 1);
        p.b.resize(in.c, 1, 1, 1);
        for (auto& v : p.w.data) v = T(1);
        break;
      }
      default: break;
    }
    in = shapes[li];
  }
  return net;
}

template <class T>
struct ForwardCache {
  std::vector<Tensor<T>> acts;  // acts[0] = input, acts[i+1] = layer i output
  std::vector<LayerCache<T>> layer_caches;
};

// Batched forward pass. Returns softmax probabilities [N x 2].
template <class T>
const Tensor<T>& forward_batch(Network<T>& net, const Tensor<T>& input, Mode mode,
                               ForwardCache<T>& cache, Workspace<T>& ws) {
  if (input.h != net.spec.input_h || input.w != net.spec.input_w || input.c != 1) {
    throw DataError("forward: input dims do not match network spec");
  }
  const size_t n_layers = net.spec.layers.size();
  cache.acts.resize(n_layers + 1);
  cache.layer_caches.resize(n_layers);
  cache.acts[0] = input;

  for (size_t li = 0; li < n_layers; ++li) {
    const auto& l = net.spec.layers[li];
    const Tensor<T>& x = cache.acts[li];
    Tensor<T>& y = cache.acts[li + 1];
    switch (l.kind) {
      case LayerKind::Conv: conv_forward(x, l, net.params[li], y, ws); break;
      case LayerKind::BatchNorm:
        batchnorm_forward(x, net.params[li], mode, y, cache.layer_caches[li]);
        break;
      case LayerKind::InstanceNorm:
        instancenorm_forward(x, net.params[li], y, cache.layer_caches[li]);
        break;
      case LayerKind::Relu: relu_forward(x, y); break;
      case LayerKind::MaxPool: maxpool_forward(x, l, y, cache.layer_caches[li]); break;
      case LayerKind::Dropout:
        dropout_forward(x, l, mode, net.rng, y, cache.layer_caches[li]);
        break;
      case LayerKind::FullyConnected: fc_forward(x, l, net.params[li], y); break;
      case LayerKind::Softmax: softmax_forward(x, y); break;
    }
  }
  return cache.acts.back();
}

// Mean cross-entropy of cached probabilities against labels.
template <class T>
double cross_entropy(const Tensor<T>& probs, const std::vector<uint8_t>& labels) {
  double loss = 0.0;
  for (int i = 0; i < probs.n; ++i) {
    const T p = probs.ptr()[static_cast<size_t>(i) * probs.c + labels[i]];
    loss -= std::log(std::max(static_cast<double>(p), 1e-300));
  }
  return loss / probs.n;
}

// Backward from softmax cross-entropy; fills one GradBlock per layer.
template <class T>
void backward_batch(Network<T>& net, const ForwardCache<T>& cache,
                    const std::vector<uint8_t>& labels, std::vector<GradBlock<T>>& grads,
                    Workspace<T>& ws) {
  const size_t n_layers = net.spec.layers.size();
  grads.resize(n_layers);
  const Tensor<T>& probs = cache.acts.back();
  const int batch = probs.n;

  // d(loss)/d(logits) for mean CE over the softmax: (p - onehot) / N.
  Tensor<T> delta(batch, probs.c, 1, 1);
  for (int i = 0; i < batch; ++i) {
    for (int c = 0; c < probs.c; ++c) {
      const T y = labels[i] == c ? T(1) : T(0);
      delta.ptr()[static_cast<size_t>(i) * probs.c + c] =
          (probs.ptr()[static_cast<size_t>(i) * probs.c + c] - y) / static_cast<T>(batch);
    }
  }

  // The last layer is softmax (fused with the loss above), so start below it.
  for (size_t li = n_layers - 1; li-- > 0;) {
    const auto& l = net.spec.layers[li];
    const Tensor<T>& x = cache.acts[li];
    Tensor<T> dx;
    switch (l.kind) {
      case LayerKind::Conv:
        conv_backward(x, delta, l, net.params[li], grads[li], dx, ws);
        break;
      case LayerKind::BatchNorm:
        batchnorm_backward(x, delta, net.params[li], cache.layer_caches[li], grads[li], dx);
        break;
      case LayerKind::InstanceNorm:
        instancenorm_backward(x, delta, net.params[li], cache.layer_caches[li], grads[li], dx);
        break;
      case LayerKind::Relu: relu_backward(x, delta, dx); break;
      case LayerKind::MaxPool: maxpool_backward(x, delta, cache.layer_caches[li], dx); break;
      case LayerKind::Dropout: dropout_backward(delta, cache.layer_caches[li], dx); break;
      case LayerKind::FullyConnected:
        // delta arrives shaped [N x units]; x keeps its conv shape.
        fc_backward(x, delta, l, net.params[li], grads[li], dx, ws);
        break;
      case LayerKind::Softmax: break;
    }
    delta = std::move(dx);
  }
}

// ---------------------------------------------------------------------------
// Inference helpers.
// ---------------------------------------------------------------------------

template <class T>
Tensor<T> images_to_batch(const std::vector<ImageTensor>& images, size_t begin, size_t end) {
  if (begin >= end) throw DataError("images_to_batch: empty range");
  const int rows = images[begin].rows;
  const int cols = images[begin].cols;
  Tensor<T> batch(static_cast<int>(end - begin), 1, rows, cols);
  for (size_t i = begin; i < end; ++i) {
    const auto& img = images[i];
    if (img.rows != rows || img.cols != cols) throw DataError("images_to_batch: mixed shapes");
    T* dst = batch.sample(static_cast<int>(i - begin));
    for (size_t j = 0; j < img.pixels.size(); ++j) dst[j] = static_cast<T>(img.pixels[j]);
  }
  return batch;
}

// (p_interictal, p_preictal) for one image.
template <class T>
std::pair<double, double> forward(Network<T>& net, const ImageTensor& image,
                                  Mode mode = Mode::Inference) {
  ForwardCache<T> cache;
  Workspace<T> ws;
  const auto batch = images_to_batch<T>({image}, 0, 1);
  const auto& probs = forward_batch(net, batch, mode, cache, ws);
  return {static_cast<double>(probs.ptr()[0]), static_cast<double>(probs.ptr()[1])};
}

// Pre-ictal probability, the softmax component the forecaster consumes.
template <class T>
double predict_proba(Network<T>& net, const ImageTensor& image) {
  return forward(net, image, Mode::Inference).second;
}

// Order-preserving batched inference over an image stream.
template <class T>
std::vector<double> predict_proba_stream(Network<T>& net, const std::vector<ImageTensor>& images,
                                         int batch_size = 64) {
  std::vector<double> out;
  out.reserve(images.size());
  ForwardCache<T> cache;
  Workspace<T> ws;
  for (size_t begin = 0; begin < images.size(); begin += batch_size) {
    const size_t end = std::min(images.size(), begin + batch_size);
    const auto batch = images_to_batch<T>(images, begin, end);
    const auto& probs = forward_batch(net, batch, Mode::Inference, cache, ws);
    for (int i = 0; i < probs.n; ++i) {
      out.push_back(static_cast<double>(probs.ptr()[static_cast<size_t>(i) * probs.c + 1]));
    }
  }
  return out;
}

}  // namespace ictus::nn
