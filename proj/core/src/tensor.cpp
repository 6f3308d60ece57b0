#include "ddcam/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ddcam/error.hpp"

namespace ddcam {

std::size_t shape_product(const Shape& shape) {
  std::size_t n = 1;
  for (auto e : shape) n *= e;
  return n;
}

std::string shape_to_string(const Shape& shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ')';
  return os.str();
}

Tensor::Tensor(Shape shape) : shape_(std::move(shape)), data_(shape_product(shape_), 0.0F) {}

Tensor::Tensor(Shape shape, std::vector<float> data) : shape_(std::move(shape)), data_(std::move(data)) {
  if (data_.size() != shape_product(shape_)) {
    throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                     " does not match shape " + shape_to_string(shape_));
  }
}

std::size_t Tensor::dim(std::size_t axis) const {
  if (axis >= shape_.size()) {
    throw ShapeError("axis " + std::to_string(axis) + " out of range for shape " +
                     shape_to_string(shape_));
  }
  return shape_[axis];
}

std::size_t Tensor::slice_size() const {
  if (shape_.empty()) return 1;
  std::size_t n = 1;
  for (std::size_t i = 1; i < shape_.size(); ++i) n *= shape_[i];
  return n;
}

std::span<float> Tensor::slice(std::size_t i) {
  const auto n = slice_size();
  return std::span<float>(data_).subspan(i * n, n);
}

std::span<const float> Tensor::slice(std::size_t i) const {
  const auto n = slice_size();
  return std::span<const float>(data_).subspan(i * n, n);
}

float& Tensor::at(std::size_t r, std::size_t c) { return data_[r * shape_[1] + c]; }
float Tensor::at(std::size_t r, std::size_t c) const { return data_[r * shape_[1] + c]; }

float& Tensor::at(std::size_t i, std::size_t r, std::size_t c) {
  return data_[(i * shape_[1] + r) * shape_[2] + c];
}
float Tensor::at(std::size_t i, std::size_t r, std::size_t c) const {
  return data_[(i * shape_[1] + r) * shape_[2] + c];
}

SaliencyMap::SaliencyMap(Tensor values) : values_(std::move(values)) {
  if (values_.rank() != 2) {
    throw DomainError("saliency map must be 2-D, got shape " + shape_to_string(values_.shape()));
  }
  for (float v : values_.data()) {
    if (!(v >= 0.0F && v <= 1.0F)) throw DomainError("saliency map value outside [0, 1]");
  }
}

SaliencyMap SaliencyMap::zeros(std::size_t height, std::size_t width) {
  return SaliencyMap(Tensor({height, width}));
}

Tensor apply_unit_mask(const Tensor& t, const UnitSet& active) {
  if (t.rank() == 0 || t.dim(0) != active.universe()) {
    throw ShapeError("unit mask over " + std::to_string(active.universe()) +
                     " units does not match tensor shape " + shape_to_string(t.shape()));
  }
  Tensor out = t;
  for (std::size_t i = 0; i < t.dim(0); ++i) {
    if (!active.contains(i)) std::ranges::fill(out.slice(i), 0.0F);
  }
  return out;
}

Tensor minmax_normalize(const Tensor& m) {
  Tensor out(m.shape());
  if (m.empty()) return out;
  const auto [lo_it, hi_it] = std::ranges::minmax_element(m.data());
  const float lo = *lo_it;
  const float hi = *hi_it;
  if (!(hi > lo)) return out;
  const float range = hi - lo;
  auto src = m.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = (src[i] - lo) / range;
  return out;
}

namespace {

struct Tap {
  std::size_t lo;
  std::size_t hi;
  double frac;
};

std::vector<Tap> half_pixel_taps(std::size_t in, std::size_t out) {
  std::vector<Tap> taps(out);
  const double scale = static_cast<double>(in) / static_cast<double>(out);
  const double last = static_cast<double>(in - 1);
  for (std::size_t i = 0; i < out; ++i) {
    double src = (static_cast<double>(i) + 0.5) * scale - 0.5;
    src = std::clamp(src, 0.0, last);
    const auto lo = static_cast<std::size_t>(std::floor(src));
    taps[i] = {lo, std::min(lo + 1, in - 1), src - static_cast<double>(lo)};
  }
  return taps;
}

}  // namespace

Tensor bilinear_upsample(const Tensor& m, std::size_t out_h, std::size_t out_w) {
  if (m.rank() != 2 || m.dim(0) == 0 || m.dim(1) == 0) {
    throw ShapeError("bilinear_upsample needs a non-empty 2-D map, got " +
                     shape_to_string(m.shape()));
  }
  if (out_h == 0 || out_w == 0) throw DomainError("bilinear_upsample: output extent must be >= 1");
  const auto rows = half_pixel_taps(m.dim(0), out_h);
  const auto cols = half_pixel_taps(m.dim(1), out_w);
  Tensor out({out_h, out_w});
  for (std::size_t r = 0; r < out_h; ++r) {
    const auto& ry = rows[r];
    for (std::size_t c = 0; c < out_w; ++c) {
      const auto& cx = cols[c];
      const double top = (1.0 - cx.frac) * m.at(ry.lo, cx.lo) + cx.frac * m.at(ry.lo, cx.hi);
      const double bottom = (1.0 - cx.frac) * m.at(ry.hi, cx.lo) + cx.frac * m.at(ry.hi, cx.hi);
      out.at(r, c) = static_cast<float>((1.0 - ry.frac) * top + ry.frac * bottom);
    }
  }
  return out;
}

}  // namespace ddcam
