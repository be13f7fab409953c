#pragma once
// The three shipped CNN architectures, one per image size. Padding quads are
// [top bottom left right]; convs without a stated stride or padding use 1 / 0.

#include "ictus/imaging.hpp"
#include "ictus/nn/network.hpp"

namespace ictus::nn {

inline NetworkSpec build_arch(ImageType type) {
  NetworkSpec spec;
  spec.image_type = type;
  spec.input_h = image_rows(type);
  spec.input_w = kImageCols;
  auto& l = spec.layers;

  switch (type) {
    case ImageType::OneSec:
      // 19x256 -> conv stack -> 8x8x512.
      l.push_back(LayerSpec::conv(64, 3, 27, 1, 3, {0, 1, 1, 1}));
      l.push_back(LayerSpec::batchnorm());
      l.push_back(LayerSpec::relu());
      l.push_back(LayerSpec::maxpool(1, 2, 1, 2));
      l.push_back(LayerSpec::conv(128, 5, 5, 1, 2));
      l.push_back(LayerSpec::instancenorm());
      l.push_back(LayerSpec::relu());
      l.push_back(LayerSpec::conv(256, 5, 3, 1, 2, {0, 0, 1, 2}));
      l.push_back(LayerSpec::instancenorm());
      l.push_back(LayerSpec::relu());
      l.push_back(LayerSpec::conv(512, 3, 3));
      l.push_back(LayerSpec::relu());
      break;

    case ImageType::FiveSec:
      // 95x256 -> conv stack -> 8x8x512.
      l.push_back(LayerSpec::conv(64, 3, 11, 2, 2, {1, 1, 2, 3}));
      l.push_back(LayerSpec::batchnorm());
      l.push_back(LayerSpec::relu());
      l.push_back(LayerSpec::maxpool(1, 2, 1, 2));
      l.push_back(LayerSpec::conv(128, 5, 5, 1, 1, {0, 0, 0, 1}));
      l.push_back(LayerSpec::instancenorm());
      l.push_back(LayerSpec::relu());
      l.push_back(LayerSpec::maxpool(2, 2, 2, 2));
      l.push_back(LayerSpec::conv(256, 5, 5, 2, 3, {0, 1, 1, 1}));
      l.push_back(LayerSpec::instancenorm());
      l.push_back(LayerSpec::relu());
      l.push_back(LayerSpec::conv(512, 3, 3));
      l.push_back(LayerSpec::relu());
      break;

    case ImageType::TenSec:
      // 190x256 -> conv stack -> 10x10x256.
      l.push_back(LayerSpec::conv(32, 3, 27, 3, 3, {4, 4, 1, 1}));
      l.push_back(LayerSpec::instancenorm());
      l.push_back(LayerSpec::relu());
      l.push_back(LayerSpec::maxpool(2, 2, 2, 2));
      l.push_back(LayerSpec::conv(64, 5, 5, 2, 2, {1, 1, 0, 0}));
      l.push_back(LayerSpec::instancenorm());
      l.push_back(LayerSpec::relu());
      l.push_back(LayerSpec::conv(64, 3, 5));
      l.push_back(LayerSpec::instancenorm());
      l.push_back(LayerSpec::relu());
      l.push_back(LayerSpec::conv(128, 3, 3));
      l.push_back(LayerSpec::relu());
      l.push_back(LayerSpec::conv(256, 3, 3));
      l.push_back(LayerSpec::relu());
      break;
  }

  l.push_back(LayerSpec::dropout(0.5));
  l.push_back(LayerSpec::fully_connected(256));
  l.push_back(LayerSpec::fully_connected(2));
  l.push_back(LayerSpec::softmax());

  propagate_shapes(spec);  // fail fast if a transcription cannot close
  return spec;
}

}  // namespace ictus::nn
