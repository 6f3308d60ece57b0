#pragma once

#include <cstddef>
#include <vector>

#include "ddcam/heads.hpp"
#include "ddcam/tensor.hpp"
#include "ddcam/unit_set.hpp"

namespace ddcam {

// Which logit the per-unit drops are measured from.
enum class DropBaseline {
  selected,  // only the selected units active (default)
  full,      // all units active
};

struct UnitWeights {
  std::vector<double> delta;    // raw logit drops, index-aligned with selected.indices()
  std::vector<double> weights;  // non-negative, sum to 1 (empty when selected is empty)
};

/// Logit-drop weights over the selected units.
///
/// delta_i = y_c - y'_{c,i}, where y'_{c,i} masks unit i with the rest of the
/// selection active. Negative drops are clamped to zero before normalizing;
/// if every clamped drop is zero the weights fall back to uniform.
UnitWeights compute_unit_weights(const Head& head, const Tensor& activations, const UnitSet& selected,
                                 std::size_t target, DropBaseline baseline = DropBaseline::selected,
                                 bool parallel = false);

// Turns raw drops into clamped, normalized weights.
std::vector<double> normalize_drops(const std::vector<double>& delta);

// Upsample(Normalize(sum_k w_k A_k)) over the selected feature maps only.
SaliencyMap compose_cnn_map(const Tensor& activations, const UnitSet& selected,
                            const std::vector<double>& weights, std::size_t out_h, std::size_t out_w);

enum class PatchScalar {
  weight,              // grid cell n holds w_n
  weight_times_norm,   // grid cell n holds w_n * ||P_n||_2
};

// Per-patch weights placed on the sqrt(N) x sqrt(N) grid (row-major), then
// normalized and upsampled. `patches` is only read for weight_times_norm.
SaliencyMap compose_vit_map(const std::vector<double>& weights, const UnitSet& selected,
                            std::size_t out_h, std::size_t out_w,
                            PatchScalar scalar = PatchScalar::weight, const Tensor* patches = nullptr);

}  // namespace ddcam
