#include <doctest.h>

#include <random>

#include "ictus/nn/arch.hpp"
#include "ictus/nn/network.hpp"

using namespace ictus;
using namespace ictus::nn;

namespace {

// Direct convolution, nothing shared with the im2col/GEMM path.
Tensor<double> naive_conv(const Tensor<double>& x, const Tensor<double>& w,
                          const Tensor<double>& bias, const LayerSpec& s) {
  const int out_h = (x.h + s.pad.top + s.pad.bottom - s.kernel_h) / s.stride_h + 1;
  const int out_w = (x.w + s.pad.left + s.pad.right - s.kernel_w) / s.stride_w + 1;
  Tensor<double> out(x.n, s.filters, out_h, out_w);
  for (int n = 0; n < x.n; ++n) {
    for (int co = 0; co < s.filters; ++co) {
      for (int oy = 0; oy < out_h; ++oy) {
        for (int ox = 0; ox < out_w; ++ox) {
          double acc = bias.data[co];
          for (int ci = 0; ci < x.c; ++ci) {
            for (int ky = 0; ky < s.kernel_h; ++ky) {
              for (int kx = 0; kx < s.kernel_w; ++kx) {
                const int iy = oy * s.stride_h - s.pad.top + ky;
                const int ix = ox * s.stride_w - s.pad.left + kx;
                if (iy >= 0 && iy < x.h && ix >= 0 && ix < x.w) {
                  acc += x.at(n, ci, iy, ix) * w.at(co, ci, ky, kx);
                }
              }
            }
          }
          out.at(n, co, oy, ox) = acc;
        }
      }
    }
  }
  return out;
}

template <class T>
void fill_random(Tensor<T>& t, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  for (auto& v : t.data) v = static_cast<T>(dist(rng));
}

}  // namespace

TEST_CASE("the three figure architectures propagate to the expected maps") {
  // Dimension table derived by hand from floor((in + pad - kernel)/stride) + 1.
  const auto one = propagate_shapes(build_arch(ImageType::OneSec));
  CHECK(one[0] == Shape{64, 18, 78});
  CHECK(one[3] == Shape{64, 18, 39});
  CHECK(one[4] == Shape{128, 14, 18});
  CHECK(one[7] == Shape{256, 10, 10});
  CHECK(one[10] == Shape{512, 8, 8});  // pre-FC map

  const auto five = propagate_shapes(build_arch(ImageType::FiveSec));
  CHECK(five[0] == Shape{64, 48, 126});
  CHECK(five[3] == Shape{64, 48, 63});
  CHECK(five[4] == Shape{128, 44, 60});
  CHECK(five[7] == Shape{128, 22, 30});
  CHECK(five[8] == Shape{256, 10, 10});
  CHECK(five[11] == Shape{512, 8, 8});  // pre-FC map

  const auto ten = propagate_shapes(build_arch(ImageType::TenSec));
  CHECK(ten[0] == Shape{32, 66, 78});
  CHECK(ten[3] == Shape{32, 33, 39});
  CHECK(ten[4] == Shape{64, 16, 18});
  CHECK(ten[7] == Shape{64, 14, 14});
  CHECK(ten[10] == Shape{128, 12, 12});
  CHECK(ten[12] == Shape{256, 10, 10});  // pre-FC map

  for (const auto* shapes : {&one, &five, &ten}) {
    CHECK(shapes->back() == Shape{2, 1, 1});
    CHECK((*shapes)[shapes->size() - 2].count() == 2);
  }
}

TEST_CASE("propagate_shapes rejects collapsing or malformed specs") {
  NetworkSpec spec;
  spec.input_h = 4;
  spec.input_w = 4;
  spec.layers = {LayerSpec::conv(8, 7, 7), LayerSpec::softmax()};
  CHECK_THROWS_AS(static_cast<void>(propagate_shapes(spec)), DataError);

  spec.layers = {LayerSpec::conv(8, 3, 3)};  // no softmax
  CHECK_THROWS_AS(static_cast<void>(propagate_shapes(spec)), DataError);

  spec.layers = {LayerSpec::fully_connected(3), LayerSpec::softmax()};  // 3-way output
  CHECK_THROWS_AS(static_cast<void>(propagate_shapes(spec)), DataError);
}

TEST_CASE("conv forward matches the naive nested-loop oracle") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 8; ++trial) {
    const int cin = 1 + trial % 3;
    LayerSpec spec = LayerSpec::conv(2 + trial % 4, 2 + trial % 2, 3, 1 + trial % 2, 1 + trial % 3,
                                     {trial % 2, 1, trial % 3, 2});
    Tensor<double> x(2, cin, 7 + trial, 9 + trial);
    fill_random(x, rng);
    ParamBlock<double> p;
    p.w.resize(spec.filters, cin, spec.kernel_h, spec.kernel_w);
    p.b.resize(spec.filters, 1, 1, 1);
    fill_random(p.w, rng);
    fill_random(p.b, rng);

    Tensor<double> out;
    Workspace<double> ws;
    conv_forward(x, spec, p, out, ws);
    const auto want = naive_conv(x, p.w, p.b, spec);
    REQUIRE(out.size() == want.size());
    for (size_t j = 0; j < out.size(); ++j) {
      CHECK(std::abs(out.data[j] - want.data[j]) < 1e-9);
    }
  }
}

TEST_CASE("softmax output sums to one, extreme logits included") {
  std::mt19937_64 rng(5);
  Tensor<float> logits(1000, 2, 1, 1);
  std::uniform_real_distribution<double> dist(-1e4, 1e4);
  for (auto& v : logits.data) v = static_cast<float>(dist(rng));
  Tensor<float> probs;
  softmax_forward(logits, probs);
  for (int i = 0; i < probs.n; ++i) {
    const float p0 = probs.at(i, 0, 0, 0);
    const float p1 = probs.at(i, 1, 0, 0);
    CHECK(p0 >= 0.0f);
    CHECK(p1 >= 0.0f);
    CHECK(std::abs(p0 + p1 - 1.0f) < 1e-6f);
  }
}

TEST_CASE("zeroed final FC gives exactly (0.5, 0.5)") {
  auto net = init_network<float>(build_arch(ImageType::OneSec), 3);
  // The FC(2) layer sits just before softmax.
  auto& fc2 = net.params[net.params.size() - 2];
  for (auto& v : fc2.w.data) v = 0.0f;
  for (auto& v : fc2.b.data) v = 0.0f;

  ImageTensor img;
  img.rows = 19;
  img.cols = 256;
  img.pixels.resize(19 * 256);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<float> dist(0.0f, 1.0f);
  for (auto& v : img.pixels) v = dist(rng);

  const auto [p0, p1] = forward(net, img);
  CHECK(p0 == 0.5);
  CHECK(p1 == 0.5);
  CHECK(predict_proba(net, img) == 0.5);
}

TEST_CASE("inference is pure and independent of batch grouping") {
  auto net = init_network<float>(build_arch(ImageType::OneSec), 17);
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<float> dist(0.0f, 1.0f);
  std::vector<ImageTensor> imgs(5);
  for (auto& img : imgs) {
    img.rows = 19;
    img.cols = 256;
    img.pixels.resize(19 * 256);
    for (auto& v : img.pixels) v = dist(rng);
  }
  const auto batched = predict_proba_stream(net, imgs, 5);
  const auto tiny_batches = predict_proba_stream(net, imgs, 2);
  for (size_t i = 0; i < imgs.size(); ++i) {
    const double solo = predict_proba(net, imgs[i]);
    CHECK(batched[i] == solo);
    CHECK(tiny_batches[i] == solo);
  }
}

TEST_CASE("batchnorm uses batch stats in train and running stats at inference") {
  LayerSpec bn = LayerSpec::batchnorm();
  Tensor<float> x(4, 3, 2, 2);
  std::mt19937_64 rng(13);
  fill_random(x, rng, -2.0, 5.0);

  ParamBlock<float> p;
  p.w.resize(3, 1, 1, 1);
  p.b.resize(3, 1, 1, 1);
  p.running_mean.resize(3, 1, 1, 1);
  p.running_var.resize(3, 1, 1, 1);
  for (auto& v : p.w.data) v = 1.0f;
  for (auto& v : p.running_var.data) v = 1.0f;

  Tensor<float> out;
  LayerCache<float> cache;
  batchnorm_forward(x, p, Mode::Train, out, cache);
  // Normalized output: per-channel mean ~0, variance ~1.
  for (int c = 0; c < 3; ++c) {
    double sum = 0.0, sq = 0.0;
    for (int n = 0; n < 4; ++n) {
      for (int j = 0; j < 4; ++j) {
        const float v = out.ptr()[(static_cast<size_t>(n) * 3 + c) * 4 + j];
        sum += v;
        sq += static_cast<double>(v) * v;
      }
    }
    CHECK(std::abs(sum / 16.0) < 1e-5);
    CHECK(sq / 16.0 == doctest::Approx(1.0).epsilon(0.01));
  }
  // Running stats moved off their init values.
  CHECK(p.running_mean.data[0] != 0.0f);

  // Inference path must not depend on the batch contents.
  Tensor<float> one_in(1, 3, 2, 2);
  for (size_t j = 0; j < one_in.size(); ++j) one_in.data[j] = x.data[j];
  Tensor<float> inf_out;
  batchnorm_forward(one_in, p, Mode::Inference, inf_out, cache);
  Tensor<float> full_out;
  batchnorm_forward(x, p, Mode::Inference, full_out, cache);
  for (size_t j = 0; j < one_in.size(); ++j) CHECK(inf_out.data[j] == full_out.data[j]);
}

TEST_CASE("instancenorm is identical in train and inference modes") {
  Tensor<float> x(2, 3, 4, 4);
  std::mt19937_64 rng(19);
  fill_random(x, rng);
  ParamBlock<float> p;
  p.w.resize(3, 1, 1, 1);
  p.b.resize(3, 1, 1, 1);
  for (auto& v : p.w.data) v = 1.0f;

  Tensor<float> out;
  LayerCache<float> cache;
  instancenorm_forward(x, p, out, cache);
  // Per (sample, channel) plane: mean 0, unit variance.
  for (int n = 0; n < 2; ++n) {
    for (int c = 0; c < 3; ++c) {
      double sum = 0.0, sq = 0.0;
      const float* plane = out.ptr() + (static_cast<size_t>(n) * 3 + c) * 16;
      for (int j = 0; j < 16; ++j) {
        sum += plane[j];
        sq += static_cast<double>(plane[j]) * plane[j];
      }
      CHECK(std::abs(sum / 16.0) < 1e-5);
      CHECK(sq / 16.0 == doctest::Approx(1.0).epsilon(0.01));
    }
  }
}

TEST_CASE("maxpool picks window maxima") {
  Tensor<float> x(1, 1, 2, 4);
  x.data = {1.0f, 5.0f, 2.0f, 0.0f, 3.0f, -1.0f, 7.0f, 2.0f};
  Tensor<float> out;
  LayerCache<float> cache;
  maxpool_forward(x, LayerSpec::maxpool(1, 2, 1, 2), out, cache);
  CHECK(out.h == 2);
  CHECK(out.w == 2);
  CHECK(out.data == std::vector<float>{5.0f, 2.0f, 3.0f, 7.0f});
}

TEST_CASE("dropout scales survivors in train mode and passes through at inference") {
  LayerSpec drop = LayerSpec::dropout(0.5);
  Tensor<float> x(1, 1, 1, 4096);
  for (auto& v : x.data) v = 1.0f;

  std::mt19937_64 rng(3);
  Tensor<float> out;
  LayerCache<float> cache;
  dropout_forward(x, drop, Mode::Train, rng, out, cache);
  size_t kept = 0;
  for (float v : out.data) {
    CHECK((v == 0.0f || v == 2.0f));  // inverted scaling by 1/(1-rate)
    kept += v != 0.0f;
  }
  CHECK(kept > 1600);
  CHECK(kept < 2500);

  dropout_forward(x, drop, Mode::Inference, rng, out, cache);
  CHECK(out.data == x.data);
}

TEST_CASE("forward rejects images that do not match the spec") {
  auto net = init_network<float>(build_arch(ImageType::OneSec), 1);
  ImageTensor wrong;
  wrong.rows = 95;
  wrong.cols = 256;
  wrong.pixels.assign(95 * 256, 0.1f);
  CHECK_THROWS_AS(static_cast<void>(predict_proba(net, wrong)), DataError);
}
