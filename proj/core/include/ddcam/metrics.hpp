#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "ddcam/tensor.hpp"

namespace ddcam {

/// Softmax confidences of the explained class:
/// y on the original input, o on image * map, d on image * (1 - map).
struct ConfidencePair {
  double y = 0.0;
  double o = 0.0;
  double d = 0.0;
};

// mean(max(0, y - o) / y)
double average_drop(std::span<const ConfidencePair> pairs);
// fraction with o > y
double increase_in_confidence(std::span<const ConfidencePair> pairs);
// mean(max(0, y - d) / y)
double average_drop_deletion(std::span<const ConfidencePair> pairs);

// L1 norm divided by the pixel count.
double complexity(const SaliencyMap& map);

// Pearson correlation of the flattened maps, clamped to [0, 1]; 0 if either is constant.
double coherency(const SaliencyMap& a, const SaliencyMap& b);

// Harmonic mean of coh, 1 - com and 1 - ad; 0 when any of them is 0.
double adcc(double ad, double coh, double com);

struct BinaryMask {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> bits;

  BinaryMask() = default;
  BinaryMask(std::size_t h, std::size_t w) : height(h), width(w), bits(h * w, 0) {}

  bool at(std::size_t r, std::size_t c) const { return bits[r * width + c] != 0; }
  void set(std::size_t r, std::size_t c, bool v = true) { bits[r * width + c] = v ? 1 : 0; }
  std::size_t count() const;
  BinaryMask transposed() const;

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;
};

// Pixel set iff v >= tau * max(map); all false for an all-zero map. 0 < tau <= 1.
BinaryMask binarize(const SaliencyMap& map, double tau = 0.5);

/// Axis-aligned box in pixels: columns [x, x + w), rows [y, y + h).
struct Box {
  std::size_t x = 0;
  std::size_t y = 0;
  std::size_t w = 0;
  std::size_t h = 0;
};

// Union of the boxes; each box must lie inside the image.
BinaryMask rasterize_boxes(std::span<const Box> boxes, std::size_t height, std::size_t width);

struct LocalizationScores {
  double iou = 0.0;
  double precision = 0.0;
  double recall = 0.0;
};

LocalizationScores localization_scores(const BinaryMask& mask, std::span<const Box> boxes);

// Number of 8-connected components of set pixels.
std::size_t count_regions(const BinaryMask& mask);

// |mask| / (H * W)
double percentage_highlighted(const BinaryMask& mask);

}  // namespace ddcam
