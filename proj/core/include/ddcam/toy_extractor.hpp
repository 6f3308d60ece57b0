#pragma once

#include <cstddef>
#include <cstdint>

#include "ddcam/tensor.hpp"

namespace ddcam {

/// Deterministic stand-in for a convolutional backbone.
///
/// One valid 3x3 convolution with `filters` kernels (no bias), ReLU, then
/// non-overlapping 4x4 average pooling (trailing rows/columns that do not
/// fill a window are dropped). Kernel weights are drawn from Lcg64(seed) as
/// uniform(-1, 1) in [filter][channel][dy][dx] order.
struct ToyExtractor {
  static constexpr std::size_t kKernel = 3;
  static constexpr std::size_t kPool = 4;

  std::size_t channels = 1;
  std::size_t filters = 4;
  std::uint64_t seed = 0;

  // filters x channels x 3 x 3
  Tensor kernels() const;
  // Feature-map extent for an input of H x W.
  std::size_t output_extent(std::size_t input_extent) const;
};

// `image` is L x H x W with L == extractor.channels and H, W >= 6.
Tensor toy_extract(const Tensor& image, const ToyExtractor& extractor);

}  // namespace ddcam
