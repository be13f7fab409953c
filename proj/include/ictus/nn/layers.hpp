#pragma once
// Layer catalog and the forward/backward math. Convolutions run as batched
// im2col + GEMM; norm layers keep their per-channel statistics in the cache
// for the backward pass.

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "ictus/nn/tensor.hpp"

namespace ictus::nn {

enum class LayerKind : uint8_t {
  Conv,
  BatchNorm,
  InstanceNorm,
  Relu,
  MaxPool,
  Dropout,
  FullyConnected,
  Softmax,
};

// Padding order follows the source framework convention: top bottom left right.
struct Padding {
  int top{0}, bottom{0}, left{0}, right{0};
};

struct LayerSpec {
  LayerKind kind{LayerKind::Relu};
  int filters{0};
  int kernel_h{0}, kernel_w{0};
  int stride_h{1}, stride_w{1};
  Padding pad;
  int pool_h{0}, pool_w{0};
  double rate{0.0};
  int units{0};

  static LayerSpec conv(int filters, int kh, int kw, int sh = 1, int sw = 1, Padding p = {}) {
    LayerSpec s;
    s.kind = LayerKind::Conv;
    s.filters = filters;
    s.kernel_h = kh;
    s.kernel_w = kw;
    s.stride_h = sh;
    s.stride_w = sw;
    s.pad = p;
    return s;
  }
  static LayerSpec batchnorm() { return {LayerKind::BatchNorm}; }
  static LayerSpec instancenorm() { return {LayerKind::InstanceNorm}; }
  static LayerSpec relu() { return {LayerKind::Relu}; }
  static LayerSpec maxpool(int ph, int pw, int sh, int sw) {
    LayerSpec s;
    s.kind = LayerKind::MaxPool;
    s.pool_h = ph;
    s.pool_w = pw;
    s.stride_h = sh;
    s.stride_w = sw;
    return s;
  }
  static LayerSpec dropout(double rate) {
    LayerSpec s;
    s.kind = LayerKind::Dropout;
    s.rate = rate;
    return s;
  }
  static LayerSpec fully_connected(int units) {
    LayerSpec s;
    s.kind = LayerKind::FullyConnected;
    s.units = units;
    return s;
  }
  static LayerSpec softmax() { return {LayerKind::Softmax}; }
};

inline const char* to_string(LayerKind k) {
  switch (k) {
    case LayerKind::Conv: return "conv";
    case LayerKind::BatchNorm: return "batchnorm";
    case LayerKind::InstanceNorm: return "instancenorm";
    case LayerKind::Relu: return "relu";
    case LayerKind::MaxPool: return "maxpool";
    case LayerKind::Dropout: return "dropout";
    case LayerKind::FullyConnected: return "fullyconnected";
    default: return "softmax";
  }
}

struct Shape {
  int c{0}, h{0}, w{0};
  size_t count() const { return static_cast<size_t>(c) * h * w; }
  bool operator==(const Shape&) const = default;
};

inline constexpr double kNormEpsilon = 1e-5;
inline constexpr double kRunningStatMomentum = 0.1;

// ---------------------------------------------------------------------------
// im2col / col2im over NCHW batches. Column j = n*(Hout*Wout) + oy*Wout + ox.
// ---------------------------------------------------------------------------

template <class T>
void im2col(const Tensor<T>& x, const LayerSpec& conv, int out_h, int out_w, T* col) {
  const int kh = conv.kernel_h, kw = conv.kernel_w;
  const int sh = conv.stride_h, sw = conv.stride_w;
  const int plane = out_h * out_w;
  const int cols = x.n * plane;
#pragma omp parallel for schedule(static)
  for (int i = 0; i < x.n; ++i) {
    for (int ci = 0; ci < x.c; ++ci) {
      const T* src = x.ptr() + (static_cast<size_t>(i) * x.c + ci) * x.h * x.w;
      for (int ky = 0; ky < kh; ++ky) {
        for (int kx = 0; kx < kw; ++kx) {
          const int row = (ci * kh + ky) * kw + kx;
          T* dst = col + static_cast<size_t>(row) * cols + static_cast<size_t>(i) * plane;
          for (int oy = 0; oy < out_h; ++oy) {
            const int iy = oy * sh - conv.pad.top + ky;
            T* drow = dst + static_cast<size_t>(oy) * out_w;
            if (iy < 0 || iy >= x.h) {
              std::fill_n(drow, out_w, T(0));
              continue;
            }
            const T* srow = src + static_cast<size_t>(iy) * x.w;
            for (int ox = 0; ox < out_w; ++ox) {
              const int ix = ox * sw - conv.pad.left + kx;
              drow[ox] = (ix >= 0 && ix < x.w) ? srow[ix] : T(0);
            }
          }
        }
      }
    }
  }
}

template <class T>
void col2im_add(const T* col, const LayerSpec& conv, int out_h, int out_w, Tensor<T>& dx) {
  const int kh = conv.kernel_h, kw = conv.kernel_w;
  const int sh = conv.stride_h, sw = conv.stride_w;
  const int plane = out_h * out_w;
  const int cols = dx.n * plane;
#pragma omp parallel for schedule(static)
  for (int i = 0; i < dx.n; ++i) {
    for (int ci = 0; ci < dx.c; ++ci) {
      T* dst = dx.ptr() + (static_cast<size_t>(i) * dx.c + ci) * dx.h * dx.w;
      for (int ky = 0; ky < kh; ++ky) {
        for (int kx = 0; kx < kw; ++kx) {
          const int row = (ci * kh + ky) * kw + kx;
          const T* src = col + static_cast<size_t>(row) * cols + static_cast<size_t>(i) * plane;
          for (int oy = 0; oy < out_h; ++oy) {
            const int iy = oy * sh - conv.pad.top + ky;
            if (iy < 0 || iy >= dx.h) continue;
            T* drow = dst + static_cast<size_t>(iy) * dx.w;
            const T* srow = src + static_cast<size_t>(oy) * out_w;
            for (int ox = 0; ox < out_w; ++ox) {
              const int ix = ox * sw - conv.pad.left + kx;
              if (ix >= 0 && ix < dx.w) drow[ix] += srow[ox];
            }
          }
        }
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Per-layer parameters, gradients, and backward cache.
// ---------------------------------------------------------------------------

template <class T>
struct ParamBlock {
  Tensor<T> w;  // conv kernels [Cout,Cin,kh,kw]; FC [units,in]; norm scale [C]
  Tensor<T> b;  // biases / norm shift
  Tensor<T> running_mean;  // batchnorm only
  Tensor<T> running_var;
};

template <class T>
struct GradBlock {
  Tensor<T> w;
  Tensor<T> b;
};

template <class T>
struct LayerCache {
  // Norm statistics per channel (batchnorm) or per instance-channel.
  std::vector<T> mean, invstd;
  std::vector<uint32_t> argmax;  // maxpool winners, flat input offsets per sample
  std::vector<T> mask;           // dropout multipliers
};

enum class Mode : uint8_t { Train, Inference };

// Scratch buffers shared across layers; sized for the largest conv.
template <class T>
struct Workspace {
  std::vector<T> col, col_grad, mat_a, mat_b;
};

namespace detail {

template <class T>
void conv_output_dims(const Tensor<T>& x, const LayerSpec& s, int& out_h, int& out_w) {
  out_h = (x.h + s.pad.top + s.pad.bottom - s.kernel_h) / s.stride_h + 1;
  out_w = (x.w + s.pad.left + s.pad.right - s.kernel_w) / s.stride_w + 1;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Conv.
// ---------------------------------------------------------------------------

template <class T>
void conv_forward(const Tensor<T>& x, const LayerSpec& s, const ParamBlock<T>& p, Tensor<T>& out,
                  Workspace<T>& ws) {
  int out_h = 0, out_w = 0;
  detail::conv_output_dims(x, s, out_h, out_w);
  const int k_dim = x.c * s.kernel_h * s.kernel_w;
  const int cols = x.n * out_h * out_w;
  ws.col.resize(static_cast<size_t>(k_dim) * cols);
  im2col(x, s, out_h, out_w, ws.col.data());

  ws.mat_a.resize(static_cast<size_t>(s.filters) * cols);
  gemm_ab(p.w.ptr(), ws.col.data(), ws.mat_a.data(), s.filters, k_dim, cols);

  out.resize(x.n, s.filters, out_h, out_w);
  const int plane = out_h * out_w;
#pragma omp parallel for schedule(static)
  for (int i = 0; i < x.n; ++i) {
    for (int co = 0; co < s.filters; ++co) {
      const T* src = ws.mat_a.data() + static_cast<size_t>(co) * cols + static_cast<size_t>(i) * plane;
      const T bias = p.b.data[co];
      T* dst = out.ptr() + (static_cast<size_t>(i) * s.filters + co) * plane;
      for (int j = 0; j < plane; ++j) dst[j] = src[j] + bias;
    }
  }
}

template <class T>
void conv_backward(const Tensor<T>& x, const Tensor<T>& dy, const LayerSpec& s,
                   const ParamBlock<T>& p, GradBlock<T>& g, Tensor<T>& dx, Workspace<T>& ws) {
  int out_h = 0, out_w = 0;
  detail::conv_output_dims(x, s, out_h, out_w);
  const int k_dim = x.c * s.kernel_h * s.kernel_w;
  const int plane = out_h * out_w;
  const int cols = x.n * plane;

  ws.col.resize(static_cast<size_t>(k_dim) * cols);
  im2col(x, s, out_h, out_w, ws.col.data());

  // dY rearranged to [Cout x cols] with columns grouped by sample.
  ws.mat_a.resize(static_cast<size_t>(s.filters) * cols);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < x.n; ++i) {
    for (int co = 0; co < s.filters; ++co) {
      const T* src = dy.ptr() + (static_cast<size_t>(i) * s.filters + co) * plane;
      T* dst = ws.mat_a.data() + static_cast<size_t>(co) * cols + static_cast<size_t>(i) * plane;
      for (int j = 0; j < plane; ++j) dst[j] = src[j];
    }
  }

  g.w.resize(s.filters, x.c, s.kernel_h, s.kernel_w);
  gemm_abt(ws.mat_a.data(), ws.col.data(), g.w.ptr(), s.filters, cols, k_dim);

  g.b.resize(s.filters, 1, 1, 1);
  for (int co = 0; co < s.filters; ++co) {
    const T* src = ws.mat_a.data() + static_cast<size_t>(co) * cols;
    T acc = T(0);
    for (int j = 0; j < cols; ++j) acc += src[j];
    g.b.data[co] = acc;
  }

  // dX = col2im(W^T * dY).
  ws.mat_b.resize(static_cast<size_t>(k_dim) * s.filters);
  transpose(p.w.ptr(), ws.mat_b.data(), s.filters, k_dim);
  ws.col_grad.resize(static_cast<size_t>(k_dim) * cols);
  gemm_ab(ws.mat_b.data(), ws.mat_a.data(), ws.col_grad.data(), k_dim, s.filters, cols);
  dx.resize(x.n, x.c, x.h, x.w);
  col2im_add(ws.col_grad.data(), s, out_h, out_w, dx);
}

// ---------------------------------------------------------------------------
// Norm layers. Batchnorm normalizes per channel over (n, h, w) in train mode
// and uses running statistics at inference; instancenorm normalizes per
// (sample, channel) in both modes.
// ---------------------------------------------------------------------------

template <class T>
void batchnorm_forward(const Tensor<T>& x, ParamBlock<T>& p, Mode mode, Tensor<T>& out,
                       LayerCache<T>& cache) {
  out.resize(x.n, x.c, x.h, x.w);
  const int plane = x.plane();
  const size_t per_channel = static_cast<size_t>(x.n) * plane;
  cache.mean.assign(x.c, T(0));
  cache.invstd.assign(x.c, T(0));
#pragma omp parallel for schedule(static)
  for (int c = 0; c < x.c; ++c) {
    T mean, invstd;
    if (mode == Mode::Train) {
      T sum = T(0);
      for (int i = 0; i < x.n; ++i) {
        const T* src = x.ptr() + (static_cast<size_t>(i) * x.c + c) * plane;
        for (int j = 0; j < plane; ++j) sum += src[j];
      }
      mean = sum / static_cast<T>(per_channel);
      T var_sum = T(0);
      for (int i = 0; i < x.n; ++i) {
        const T* src = x.ptr() + (static_cast<size_t>(i) * x.c + c) * plane;
        for (int j = 0; j < plane; ++j) var_sum += (src[j] - mean) * (src[j] - mean);
      }
      const T var = var_sum / static_cast<T>(per_channel);
      invstd = T(1) / std::sqrt(var + static_cast<T>(kNormEpsilon));
      p.running_mean.data[c] = static_cast<T>((1.0 - kRunningStatMomentum)) * p.running_mean.data[c] +
                               static_cast<T>(kRunningStatMomentum) * mean;
      p.running_var.data[c] = static_cast<T>((1.0 - kRunningStatMomentum)) * p.running_var.data[c] +
                              static_cast<T>(kRunningStatMomentum) * var;
    } else {
      mean = p.running_mean.data[c];
      invstd = T(1) / std::sqrt(p.running_var.data[c] + static_cast<T>(kNormEpsilon));
    }
    cache.mean[c] = mean;
    cache.invstd[c] = invstd;
    const T scale = p.w.data[c];
    const T shift = p.b.data[c];
    for (int i = 0; i < x.n; ++i) {
      const T* src = x.ptr() + (static_cast<size_t>(i) * x.c + c) * plane;
      T* dst = out.ptr() + (static_cast<size_t>(i) * x.c + c) * plane;
      for (int j = 0; j < plane; ++j) dst[j] = (src[j] - mean) * invstd * scale + shift;
    }
  }
}

template <class T>
void batchnorm_backward(const Tensor<T>& x, const Tensor<T>& dy, const ParamBlock<T>& p,
                        const LayerCache<T>& cache, GradBlock<T>& g, Tensor<T>& dx) {
  dx.resize(x.n, x.c, x.h, x.w);
  g.w.resize(x.c, 1, 1, 1);
  g.b.resize(x.c, 1, 1, 1);
  const int plane = x.plane();
  const T m = static_cast<T>(static_cast<size_t>(x.n) * plane);
#pragma omp parallel for schedule(static)
  for (int c = 0; c < x.c; ++c) {
    const T mean = cache.mean[c];
    const T invstd = cache.invstd[c];
    T dbeta = T(0), dgamma = T(0);
    for (int i = 0; i < x.n; ++i) {
      const T* xs = x.ptr() + (static_cast<size_t>(i) * x.c + c) * plane;
      const T* dys = dy.ptr() + (static_cast<size_t>(i) * x.c + c) * plane;
      for (int j = 0; j < plane; ++j) {
        dbeta += dys[j];
        dgamma += dys[j] * (xs[j] - mean) * invstd;
      }
    }
    g.b.data[c] = dbeta;
    g.w.data[c] = dgamma;
    const T scale = p.w.data[c] * invstd;
    for (int i = 0; i < x.n; ++i) {
      const T* xs = x.ptr() + (static_cast<size_t>(i) * x.c + c) * plane;
      const T* dys = dy.ptr() + (static_cast<size_t>(i) * x.c + c) * plane;
      T* dxs = dx.ptr() + (static_cast<size_t>(i) * x.c + c) * plane;
      for (int j = 0; j < plane; ++j) {
        const T xhat = (xs[j] - mean) * invstd;
        dxs[j] = scale * (dys[j] - dbeta / m - xhat * dgamma / m);
      }
    }
  }
}

template <class T>
void instancenorm_forward(const Tensor<T>& x, const ParamBlock<T>& p, Tensor<T>& out,
                          LayerCache<T>& cache) {
  out.resize(x.n, x.c, x.h, x.w);
  const int plane = x.plane();
  cache.mean.assign(static_cast<size_t>(x.n) * x.c, T(0));
  cache.invstd.assign(static_cast<size_t>(x.n) * x.c, T(0));
#pragma omp parallel for schedule(static)
  for (int i = 0; i < x.n; ++i) {
    for (int c = 0; c < x.c; ++c) {
      const T* src = x.ptr() + (static_cast<size_t>(i) * x.c + c) * plane;
      T sum = T(0);
      for (int j = 0; j < plane; ++j) sum += src[j];
      const T mean = sum / static_cast<T>(plane);
      T var_sum = T(0);
      for (int j = 0; j < plane; ++j) var_sum += (src[j] - mean) * (src[j] - mean);
      const T invstd = T(1) / std::sqrt(var_sum / static_cast<T>(plane) +
                                        static_cast<T>(kNormEpsilon));
      cache.mean[static_cast<size_t>(i) * x.c + c] = mean;
      cache.invstd[static_cast<size_t>(i) * x.c + c] = invstd;
      const T scale = p.w.data[c];
      const T shift = p.b.data[c];
      T* dst = out.ptr() + (static_cast<size_t>(i) * x.c + c) * plane;
      for (int j = 0; j < plane; ++j) dst[j] = (src[j] - mean) * invstd * scale + shift;
    }
  }
}

template <class T>
void instancenorm_backward(const Tensor<T>& x, const Tensor<T>& dy, const ParamBlock<T>& p,
                           const LayerCache<T>& cache, GradBlock<T>& g, Tensor<T>& dx) {
  dx.resize(x.n, x.c, x.h, x.w);
  g.w.resize(x.c, 1, 1, 1);
  g.b.resize(x.c, 1, 1, 1);
  const int plane = x.plane();
  const T m = static_cast<T>(plane);
  // Scale/shift gradients accumulate over samples in fixed order.
  for (int c = 0; c < x.c; ++c) {
    T dgamma = T(0), dbeta = T(0);
    for (int i = 0; i < x.n; ++i) {
      const T mean = cache.mean[static_cast<size_t>(i) * x.c + c];
      const T invstd = cache.invstd[static_cast<size_t>(i) * x.c + c];
      const T* xs = x.ptr() + (static_cast<size_t>(i) * x.c + c) * plane;
      const T* dys = dy.ptr() + (static_cast<size_t>(i) * x.c + c) * plane;
      for (int j = 0; j < plane; ++j) {
        dbeta += dys[j];
        dgamma += dys[j] * (xs[j] - mean) * invstd;
      }
    }
    g.w.data[c] = dgamma;
    g.b.data[c] = dbeta;
  }
#pragma omp parallel for schedule(static)
  for (int i = 0; i < x.n; ++i) {
    for (int c = 0; c < x.c; ++c) {
      const T mean = cache.mean[static_cast<size_t>(i) * x.c + c];
      const T invstd = cache.invstd[static_cast<size_t>(i) * x.c + c];
      const T* xs = x.ptr() + (static_cast<size_t>(i) * x.c + c) * plane;
      const T* dys = dy.ptr() + (static_cast<size_t>(i) * x.c + c) * plane;
      T* dxs = dx.ptr() + (static_cast<size_t>(i) * x.c + c) * plane;
      T local_dbeta = T(0), local_dgamma = T(0);
      for (int j = 0; j < plane; ++j) {
        local_dbeta += dys[j];
        local_dgamma += dys[j] * (xs[j] - mean) * invstd;
      }
      const T scale = p.w.data[c] * invstd;
      for (int j = 0; j < plane; ++j) {
        const T xhat = (xs[j] - mean) * invstd;
        dxs[j] = scale * (dys[j] - local_dbeta / m - xhat * local_dgamma / m);
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Relu / MaxPool / Dropout.
// ---------------------------------------------------------------------------

template <class T>
void relu_forward(const Tensor<T>& x, Tensor<T>& out) {
  out.resize(x.n, x.c, x.h, x.w);
#pragma omp parallel for schedule(static)
  for (long j = 0; j < static_cast<long>(x.size()); ++j) {
    out.data[j] = x.data[j] > T(0) ? x.data[j] : T(0);
  }
}

template <class T>
void relu_backward(const Tensor<T>& x, const Tensor<T>& dy, Tensor<T>& dx) {
  dx.resize(x.n, x.c, x.h, x.w);
#pragma omp parallel for schedule(static)
  for (long j = 0; j < static_cast<long>(x.size()); ++j) {
    dx.data[j] = x.data[j] > T(0) ? dy.data[j] : T(0);
  }
}

template <class T>
void maxpool_forward(const Tensor<T>& x, const LayerSpec& s, Tensor<T>& out,
                     LayerCache<T>& cache) {
  const int out_h = (x.h - s.pool_h) / s.stride_h + 1;
  const int out_w = (x.w - s.pool_w) / s.stride_w + 1;
  out.resize(x.n, x.c, out_h, out_w);
  cache.argmax.assign(out.size(), 0);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < x.n; ++i) {
    for (int c = 0; c < x.c; ++c) {
      const T* src = x.ptr() + (static_cast<size_t>(i) * x.c + c) * x.h * x.w;
      T* dst = out.ptr() + (static_cast<size_t>(i) * x.c + c) * out_h * out_w;
      uint32_t* arg = cache.argmax.data() + (static_cast<size_t>(i) * x.c + c) * out_h * out_w;
      for (int oy = 0; oy < out_h; ++oy) {
        for (int ox = 0; ox < out_w; ++ox) {
          const int iy0 = oy * s.stride_h;
          const int ix0 = ox * s.stride_w;
          T best = src[static_cast<size_t>(iy0) * x.w + ix0];
          uint32_t best_at = static_cast<uint32_t>(iy0 * x.w + ix0);
          for (int ky = 0; ky < s.pool_h; ++ky) {
            for (int kx = 0; kx < s.pool_w; ++kx) {
              const uint32_t at = static_cast<uint32_t>((iy0 + ky) * x.w + (ix0 + kx));
              if (src[at] > best) {
                best = src[at];
                best_at = at;
              }
            }
          }
          dst[static_cast<size_t>(oy) * out_w + ox] = best;
          arg[static_cast<size_t>(oy) * out_w + ox] = best_at;
        }
      }
    }
  }
}

template <class T>
void maxpool_backward(const Tensor<T>& x, const Tensor<T>& dy, const LayerCache<T>& cache,
                      Tensor<T>& dx) {
  dx.resize(x.n, x.c, x.h, x.w);
  const int out_plane = dy.plane();
#pragma omp parallel for schedule(static)
  for (int i = 0; i < x.n; ++i) {
    for (int c = 0; c < x.c; ++c) {
      const size_t pc = static_cast<size_t>(i) * x.c + c;
      const T* dys = dy.ptr() + pc * out_plane;
      const uint32_t* arg = cache.argmax.data() + pc * out_plane;
      T* dxs = dx.ptr() + pc * x.h * x.w;
      for (int j = 0; j < out_plane; ++j) dxs[arg[j]] += dys[j];
    }
  }
}

// Inverted dropout: surviving activations scale by 1/(1-rate) at train time
// so inference is a plain identity.
template <class T>
void dropout_forward(const Tensor<T>& x, const LayerSpec& s, Mode mode, std::mt19937_64& rng,
                     Tensor<T>& out, LayerCache<T>& cache) {
  out.resize(x.n, x.c, x.h, x.w);
  if (mode == Mode::Inference) {
    out.data = x.data;
    cache.mask.clear();
    return;
  }
  cache.mask.assign(x.size(), T(0));
  const T keep = static_cast<T>(1.0 - s.rate);
  const T scale = T(1) / keep;
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  for (size_t j = 0; j < x.size(); ++j) {
    cache.mask[j] = uniform(rng) < static_cast<double>(keep) ? scale : T(0);
    out.data[j] = x.data[j] * cache.mask[j];
  }
}

template <class T>
void dropout_backward(const Tensor<T>& dy, const LayerCache<T>& cache, Tensor<T>& dx) {
  dx.resize(dy.n, dy.c, dy.h, dy.w);
  if (cache.mask.empty()) {
    dx.data = dy.data;
    return;
  }
  for (size_t j = 0; j < dy.size(); ++j) dx.data[j] = dy.data[j] * cache.mask[j];
}

// ---------------------------------------------------------------------------
// Fully connected: x viewed as [N x (c*h*w)].
// ---------------------------------------------------------------------------

template <class T>
void fc_forward(const Tensor<T>& x, const LayerSpec& s, const ParamBlock<T>& p, Tensor<T>& out) {
  const int in_dim = static_cast<int>(x.size()) / x.n;
  out.resize(x.n, s.units, 1, 1);
  gemm_abt(x.ptr(), p.w.ptr(), out.ptr(), x.n, in_dim, s.units);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < x.n; ++i) {
    T* row = out.ptr() + static_cast<size_t>(i) * s.units;
    for (int u = 0; u < s.units; ++u) row[u] += p.b.data[u];
  }
}

template <class T>
void fc_backward(const Tensor<T>& x, const Tensor<T>& dy, const LayerSpec& s,
                 const ParamBlock<T>& p, GradBlock<T>& g, Tensor<T>& dx, Workspace<T>& ws) {
  const int in_dim = static_cast<int>(x.size()) / x.n;
  g.w.resize(s.units, in_dim, 1, 1);
  g.b.resize(s.units, 1, 1, 1);

  ws.mat_a.resize(static_cast<size_t>(s.units) * x.n);
  transpose(dy.ptr(), ws.mat_a.data(), x.n, s.units);
  gemm_ab(ws.mat_a.data(), x.ptr(), g.w.ptr(), s.units, x.n, in_dim);

  for (int u = 0; u < s.units; ++u) {
    T acc = T(0);
    for (int i = 0; i < x.n; ++i) acc += dy.ptr()[static_cast<size_t>(i) * s.units + u];
    g.b.data[u] = acc;
  }

  dx.resize(x.n, x.c, x.h, x.w);
  gemm_ab(dy.ptr(), p.w.ptr(), dx.ptr(), x.n, s.units, in_dim);
}

// ---------------------------------------------------------------------------
// Softmax over the channel axis (used on [N x 2] logits), max-subtracted.
// ---------------------------------------------------------------------------

template <class T>
void softmax_forward(const Tensor<T>& x, Tensor<T>& out) {
  out.resize(x.n, x.c, 1, 1);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < x.n; ++i) {
    const T* src = x.ptr() + static_cast<size_t>(i) * x.c;
    T* dst = out.ptr() + static_cast<size_t>(i) * x.c;
    T max_logit = src[0];
    for (int c = 1; c < x.c; ++c) max_logit = std::max(max_logit, src[c]);
    T sum = T(0);
    for (int c = 0; c < x.c; ++c) {
      dst[c] = std::exp(src[c] - max_logit);
      sum += dst[c];
    }
    for (int c = 0; c < x.c; ++c) dst[c] /= sum;
  }
}

}  // namespace ictus::nn
