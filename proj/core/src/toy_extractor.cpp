#include "ddcam/toy_extractor.hpp"

#include <algorithm>

#include "ddcam/error.hpp"
#include "ddcam/rng.hpp"

namespace ddcam {

Tensor ToyExtractor::kernels() const {
  Tensor k({filters, channels, kKernel, kKernel});
  Lcg64 rng(seed);
  for (float& w : k.data()) w = rng.uniform(-1.0F, 1.0F);
  return k;
}

std::size_t ToyExtractor::output_extent(std::size_t input_extent) const {
  if (input_extent < kKernel) return 0;
  return (input_extent - kKernel + 1) / kPool;
}

Tensor toy_extract(const Tensor& image, const ToyExtractor& extractor) {
  if (image.rank() != 3 || image.dim(0) != extractor.channels) {
    throw ShapeError("toy extractor expects " + std::to_string(extractor.channels) +
                     " x H x W images, got " + shape_to_string(image.shape()));
  }
  const std::size_t height = image.dim(1);
  const std::size_t width = image.dim(2);
  const std::size_t out_h = extractor.output_extent(height);
  const std::size_t out_w = extractor.output_extent(width);
  if (out_h == 0 || out_w == 0) {
    throw ShapeError("image " + shape_to_string(image.shape()) + " too small for the toy extractor");
  }
  const std::size_t conv_h = height - ToyExtractor::kKernel + 1;
  const std::size_t conv_w = width - ToyExtractor::kKernel + 1;
  const Tensor kernels = extractor.kernels();
  const std::size_t k3 = ToyExtractor::kKernel;
  constexpr double kPoolArea = ToyExtractor::kPool * ToyExtractor::kPool;

  Tensor out({extractor.filters, out_h, out_w});
  std::vector<float> conv(conv_h * conv_w);
  for (std::size_t f = 0; f < extractor.filters; ++f) {
    const auto kernel = kernels.slice(f);
    for (std::size_t y = 0; y < conv_h; ++y) {
      for (std::size_t x = 0; x < conv_w; ++x) {
        double acc = 0.0;
        for (std::size_t c = 0; c < extractor.channels; ++c) {
          for (std::size_t dy = 0; dy < k3; ++dy) {
            for (std::size_t dx = 0; dx < k3; ++dx) {
              acc += static_cast<double>(kernel[(c * k3 + dy) * k3 + dx]) *
                     image.at(c, y + dy, x + dx);
            }
          }
        }
        conv[y * conv_w + x] = static_cast<float>(std::max(acc, 0.0));
      }
    }
    for (std::size_t py = 0; py < out_h; ++py) {
      for (std::size_t px = 0; px < out_w; ++px) {
        double acc = 0.0;
        for (std::size_t dy = 0; dy < ToyExtractor::kPool; ++dy) {
          for (std::size_t dx = 0; dx < ToyExtractor::kPool; ++dx) {
            acc += conv[(py * ToyExtractor::kPool + dy) * conv_w + px * ToyExtractor::kPool + dx];
          }
        }
        out.at(f, py, px) = static_cast<float>(acc / kPoolArea);
      }
    }
  }
  return out;
}

}  // namespace ddcam
