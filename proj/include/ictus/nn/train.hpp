#pragma once
// SGD-with-momentum training: v <- m*v - lr*g, w <- w + v. Seeded shuffling
// each epoch; deterministic for a given seed.

#include <random>
#include <vector>

#include "ictus/imaging.hpp"
#include "ictus/nn/network.hpp"

namespace ictus::nn {

struct TrainConfig {
  int epochs = 50;
  int batch_size = 64;
  double learning_rate = 0.001;
  double momentum = 0.9;
  uint64_t seed = 0;
};

struct EpochStats {
  double loss{0.0};
  double accuracy{0.0};
};

struct TrainHistory {
  std::vector<EpochStats> epochs;
};

template <class T>
TrainHistory train(Network<T>& net, const Dataset& dataset, const TrainConfig& cfg) {
  if (dataset.images.empty()) throw DataError("train: empty dataset");
  if (cfg.epochs < 1 || cfg.batch_size < 1 || !(cfg.learning_rate > 0.0)) {
    throw DataError("train: bad config");
  }
  for (const auto& img : dataset.images) {
    if (img.label != ImageLabel::Preictal && img.label != ImageLabel::Interictal) {
      throw DataError("train: dataset contains unlabeled images");
    }
  }

  std::vector<GradBlock<T>> velocity(net.params.size());
  for (size_t li = 0; li < net.params.size(); ++li) {
    if (!net.params[li].w.empty()) {
      velocity[li].w.resize(net.params[li].w.n, net.params[li].w.c, net.params[li].w.h,
                            net.params[li].w.w);
      velocity[li].b.resize(net.params[li].b.n, net.params[li].b.c, net.params[li].b.h,
                            net.params[li].b.w);
    }
  }

  std::mt19937_64 shuffle_rng(cfg.seed);
  std::vector<size_t> order(dataset.images.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  const T lr = static_cast<T>(cfg.learning_rate);
  const T mom = static_cast<T>(cfg.momentum);

  TrainHistory history;
  ForwardCache<T> cache;
  Workspace<T> ws;
  std::vector<GradBlock<T>> grads;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double loss_sum = 0.0;
    size_t correct = 0;

    for (size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
      const size_t end = std::min(order.size(), begin + cfg.batch_size);
      const int n = static_cast<int>(end - begin);

      Tensor<T> batch(n, 1, net.spec.input_h, net.spec.input_w);
      std::vector<uint8_t> labels(n);
      for (int i = 0; i < n; ++i) {
        const auto& img = dataset.images[order[begin + i]];
        T* dst = batch.sample(i);
        for (size_t j = 0; j < img.pixels.size(); ++j) dst[j] = static_cast<T>(img.pixels[j]);
        labels[i] = static_cast<uint8_t>(img.label);
      }

      const auto& probs = forward_batch(net, batch, Mode::Train, cache, ws);
      loss_sum += cross_entropy(probs, labels) * n;
      for (int i = 0; i < n; ++i) {
        const T* row = probs.ptr() + static_cast<size_t>(i) * 2;
        correct += (row[1] > row[0]) == (labels[i] == 1) ? 1 : 0;
      }

      backward_batch(net, cache, labels, grads, ws);
      for (size_t li = 0; li < net.params.size(); ++li) {
        if (velocity[li].w.empty()) continue;
        auto& p = net.params[li];
        auto& v = velocity[li];
        const auto& g = grads[li];
        for (size_t j = 0; j < p.w.size(); ++j) {
          v.w.data[j] = mom * v.w.data[j] - lr * g.w.data[j];
          p.w.data[j] += v.w.data[j];
        }
        for (size_t j = 0; j < p.b.size(); ++j) {
          v.b.data[j] = mom * v.b.data[j] - lr * g.b.data[j];
          p.b.data[j] += v.b.data[j];
        }
      }
    }

    history.epochs.push_back({loss_sum / static_cast<double>(order.size()),
                              static_cast<double>(correct) / static_cast<double>(order.size())});
  }
  return history;
}

}  // namespace ictus::nn
