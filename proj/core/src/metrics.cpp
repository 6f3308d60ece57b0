#include "ddcam/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ddcam/error.hpp"

namespace ddcam {

namespace {

void require_nonempty(std::span<const ConfidencePair> pairs, const char* metric) {
  if (pairs.empty()) throw DomainError(std::string(metric) + ": no confidence records");
}

double mean_relative_drop(std::span<const ConfidencePair> pairs, double ConfidencePair::*masked,
                          const char* metric) {
  require_nonempty(pairs, metric);
  double sum = 0.0;
  for (const auto& p : pairs) {
    if (!(p.y > 0.0)) throw DomainError(std::string(metric) + ": original confidence must be > 0");
    sum += std::max(0.0, p.y - p.*masked) / p.y;
  }
  return sum / static_cast<double>(pairs.size());
}

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent_[std::max(a, b)] = std::min(a, b);
  }

 private:
  std::vector<std::size_t> parent_;
};

}  // namespace

double average_drop(std::span<const ConfidencePair> pairs) {
  return mean_relative_drop(pairs, &ConfidencePair::o, "average_drop");
}

double increase_in_confidence(std::span<const ConfidencePair> pairs) {
  require_nonempty(pairs, "increase_in_confidence");
  const auto n = std::ranges::count_if(pairs, [](const auto& p) { return p.o > p.y; });
  return static_cast<double>(n) / static_cast<double>(pairs.size());
}

double average_drop_deletion(std::span<const ConfidencePair> pairs) {
  return mean_relative_drop(pairs, &ConfidencePair::d, "average_drop_deletion");
}

double complexity(const SaliencyMap& map) {
  const auto values = map.tensor().data();
  if (values.empty()) return 0.0;
  double sum = 0.0;
  for (float v : values) sum += std::abs(static_cast<double>(v));
  return sum / static_cast<double>(values.size());
}

double coherency(const SaliencyMap& a, const SaliencyMap& b) {
  if (a.height() != b.height() || a.width() != b.width()) {
    throw ShapeError("coherency: maps of different sizes");
  }
  const auto x = a.tensor().data();
  const auto y = b.tensor().data();
  const auto n = static_cast<double>(x.size());
  if (x.empty()) return 0.0;
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return std::clamp(sxy / std::sqrt(sxx * syy), 0.0, 1.0);
}

double adcc(double ad, double coh, double com) {
  const double keep = 1.0 - ad;
  const double sparse = 1.0 - com;
  if (coh <= 0.0 || keep <= 0.0 || sparse <= 0.0) return 0.0;
  return 3.0 / (1.0 / coh + 1.0 / sparse + 1.0 / keep);
}

std::size_t BinaryMask::count() const {
  return static_cast<std::size_t>(std::ranges::count(bits, std::uint8_t{1}));
}

BinaryMask BinaryMask::transposed() const {
  BinaryMask t(width, height);
  for (std::size_t r = 0; r < height; ++r) {
    for (std::size_t c = 0; c < width; ++c) t.set(c, r, at(r, c));
  }
  return t;
}

BinaryMask binarize(const SaliencyMap& map, double tau) {
  if (!(tau > 0.0 && tau <= 1.0)) throw DomainError("binarize: tau must lie in (0, 1]");
  BinaryMask mask(map.height(), map.width());
  const auto values = map.tensor().data();
  if (values.empty()) return mask;
  const double peak = *std::ranges::max_element(values);
  if (peak <= 0.0) return mask;
  const double threshold = tau * peak;
  for (std::size_t i = 0; i < values.size(); ++i) mask.bits[i] = values[i] >= threshold ? 1 : 0;
  return mask;
}

BinaryMask rasterize_boxes(std::span<const Box> boxes, std::size_t height, std::size_t width) {
  BinaryMask g(height, width);
  for (const auto& b : boxes) {
    if (b.x + b.w > width || b.y + b.h > height) {
      throw DomainError("box [" + std::to_string(b.x) + ", " + std::to_string(b.y) + ", " +
                        std::to_string(b.w) + ", " + std::to_string(b.h) + "] exceeds the " +
                        std::to_string(height) + " x " + std::to_string(width) + " image");
    }
    for (std::size_t r = b.y; r < b.y + b.h; ++r) {
      for (std::size_t c = b.x; c < b.x + b.w; ++c) g.set(r, c);
    }
  }
  return g;
}

LocalizationScores localization_scores(const BinaryMask& mask, std::span<const Box> boxes) {
  if (boxes.empty()) throw DomainError("localization_scores: no ground-truth boxes");
  const BinaryMask truth = rasterize_boxes(boxes, mask.height, mask.width);
  std::size_t inter = 0;
  std::size_t uni = 0;
  for (std::size_t i = 0; i < mask.bits.size(); ++i) {
    inter += (mask.bits[i] && truth.bits[i]) ? 1 : 0;
    uni += (mask.bits[i] || truth.bits[i]) ? 1 : 0;
  }
  const std::size_t predicted = mask.count();
  const std::size_t actual = truth.count();
  if (actual == 0) throw DomainError("localization_scores: boxes cover no pixels");
  LocalizationScores s;
  s.iou = static_cast<double>(inter) / static_cast<double>(uni);
  s.precision = predicted == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(predicted);
  s.recall = static_cast<double>(inter) / static_cast<double>(actual);
  return s;
}

std::size_t count_regions(const BinaryMask& mask) {
  const std::size_t h = mask.height;
  const std::size_t w = mask.width;
  DisjointSets sets(h * w);
  // Scanning in raster order, each pixel only needs its already-visited neighbours.
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      if (!mask.at(r, c)) continue;
      const std::size_t here = r * w + c;
      if (c > 0 && mask.at(r, c - 1)) sets.unite(here, here - 1);
      if (r > 0) {
        if (mask.at(r - 1, c)) sets.unite(here, here - w);
        if (c > 0 && mask.at(r - 1, c - 1)) sets.unite(here, here - w - 1);
        if (c + 1 < w && mask.at(r - 1, c + 1)) sets.unite(here, here - w + 1);
      }
    }
  }
  std::size_t regions = 0;
  for (std::size_t i = 0; i < h * w; ++i) {
    if (mask.bits[i] && sets.find(i) == i) ++regions;
  }
  return regions;
}

double percentage_highlighted(const BinaryMask& mask) {
  if (mask.bits.empty()) return 0.0;
  return static_cast<double>(mask.count()) / static_cast<double>(mask.bits.size());
}

}  // namespace ddcam
