#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "ddcam/unit_set.hpp"

namespace ddcam {

using Shape = std::vector<std::size_t>;

std::size_t shape_product(const Shape& shape);
std::string shape_to_string(const Shape& shape);

/// Dense row-major float32 tensor.
///
/// Holds both CNN activation stacks (K x h x w) and ViT patch tokens (N x D).
/// The data length always equals the product of the extents.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape);  // zero-filled
  Tensor(Shape shape, std::vector<float> data);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<float> data() { return data_; }
  std::span<const float> data() const { return data_; }
  const std::vector<float>& values() const { return data_; }

  // Elements per index along axis 0.
  std::size_t slice_size() const;
  std::span<float> slice(std::size_t i);
  std::span<const float> slice(std::size_t i) const;

  float& at(std::size_t r, std::size_t c);
  float at(std::size_t r, std::size_t c) const;
  float& at(std::size_t i, std::size_t r, std::size_t c);
  float at(std::size_t i, std::size_t r, std::size_t c) const;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  Shape shape_;
  std::vector<float> data_;
};

/// 2-D map with every value in [0, 1].
class SaliencyMap {
 public:
  SaliencyMap() = default;
  // Throws DomainError if `values` is not 2-D or leaves [0, 1].
  explicit SaliencyMap(Tensor values);
  static SaliencyMap zeros(std::size_t height, std::size_t width);

  std::size_t height() const { return values_.dim(0); }
  std::size_t width() const { return values_.dim(1); }
  float at(std::size_t r, std::size_t c) const { return values_.at(r, c); }
  const Tensor& tensor() const { return values_; }

  friend bool operator==(const SaliencyMap&, const SaliencyMap&) = default;

 private:
  Tensor values_;
};

// Zeroes every axis-0 slice whose index is not in `active`.
Tensor apply_unit_mask(const Tensor& t, const UnitSet& active);

// (m - min) / (max - min); a constant map becomes all zeros.
Tensor minmax_normalize(const Tensor& m);

// Bilinear resampling with half-pixel centers:
// src = (dst + 0.5) * in / out - 0.5, clamped to the border.
Tensor bilinear_upsample(const Tensor& m, std::size_t out_h, std::size_t out_w);

// NPY v1.0, little-endian float32, C order.
Tensor load_tensor(const std::filesystem::path& path);
void save_tensor(const Tensor& t, const std::filesystem::path& path);

// Binary PGM (P5, maxval 255), pixel = round(255 * v).
void save_pgm(const SaliencyMap& map, const std::filesystem::path& path);

}  // namespace ddcam
