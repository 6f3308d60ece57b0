#include "ddcam/saliency.hpp"

#include <algorithm>
#include <cmath>
#include <future>

#include "ddcam/error.hpp"

namespace ddcam {

namespace {

void require_aligned(const UnitSet& selected, const std::vector<double>& weights) {
  if (weights.size() != selected.size()) {
    throw ShapeError(std::to_string(weights.size()) + " weights for " +
                     std::to_string(selected.size()) + " selected units");
  }
}

std::size_t grid_side(std::size_t patches) {
  const auto side = static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(patches))));
  if (side * side != patches) {
    throw ShapeError(std::to_string(patches) + " patches do not form a square grid");
  }
  return side;
}

}  // namespace

std::vector<double> normalize_drops(const std::vector<double>& delta) {
  std::vector<double> w(delta.size());
  double total = 0.0;
  for (std::size_t i = 0; i < delta.size(); ++i) {
    w[i] = std::max(delta[i], 0.0);
    total += w[i];
  }
  if (total > 0.0) {
    for (auto& v : w) v /= total;
  } else {
    std::ranges::fill(w, delta.empty() ? 0.0 : 1.0 / static_cast<double>(delta.size()));
  }
  return w;
}

UnitWeights compute_unit_weights(const Head& head, const Tensor& activations, const UnitSet& selected,
                                 std::size_t target, DropBaseline baseline, bool parallel) {
  UnitWeights out;
  const auto members = selected.indices();
  if (members.empty()) return out;

  const UnitSet reference =
      baseline == DropBaseline::selected ? selected : UnitSet::full(selected.universe());
  const double y = masked_logits(head, activations, reference).at(target);

  auto drop_of = [&](std::size_t unit) {
    return y - static_cast<double>(masked_logits(head, activations, selected.without(unit)).at(target));
  };

  out.delta.resize(members.size());
  if (parallel) {
    std::vector<std::future<double>> pending;
    pending.reserve(members.size());
    for (auto unit : members) pending.push_back(std::async(std::launch::async, drop_of, unit));
    for (std::size_t i = 0; i < members.size(); ++i) out.delta[i] = pending[i].get();
  } else {
    for (std::size_t i = 0; i < members.size(); ++i) out.delta[i] = drop_of(members[i]);
  }
  out.weights = normalize_drops(out.delta);
  return out;
}

SaliencyMap compose_cnn_map(const Tensor& activations, const UnitSet& selected,
                            const std::vector<double>& weights, std::size_t out_h, std::size_t out_w) {
  if (activations.rank() != 3 || activations.dim(0) != selected.universe()) {
    throw ShapeError("activation stack " + shape_to_string(activations.shape()) +
                     " does not match a selection over " + std::to_string(selected.universe()) + " units");
  }
  require_aligned(selected, weights);
  const std::size_t h = activations.dim(1);
  const std::size_t w = activations.dim(2);
  std::vector<double> acc(h * w, 0.0);
  const auto members = selected.indices();
  for (std::size_t i = 0; i < members.size(); ++i) {
    const auto map = activations.slice(members[i]);
    for (std::size_t p = 0; p < acc.size(); ++p) acc[p] += weights[i] * map[p];
  }
  Tensor combined({h, w});
  std::ranges::transform(acc, combined.data().begin(), [](double v) { return static_cast<float>(v); });
  return SaliencyMap(bilinear_upsample(minmax_normalize(combined), out_h, out_w));
}

SaliencyMap compose_vit_map(const std::vector<double>& weights, const UnitSet& selected,
                            std::size_t out_h, std::size_t out_w, PatchScalar scalar,
                            const Tensor* patches) {
  require_aligned(selected, weights);
  const std::size_t side = grid_side(selected.universe());
  if (scalar == PatchScalar::weight_times_norm &&
      (patches == nullptr || patches->rank() != 2 || patches->dim(0) != selected.universe())) {
    throw ShapeError("weight_times_norm scalarization needs the N x D patch tokens");
  }
  Tensor grid({side, side});
  const auto members = selected.indices();
  for (std::size_t i = 0; i < members.size(); ++i) {
    double value = weights[i];
    if (scalar == PatchScalar::weight_times_norm) {
      double sq = 0.0;
      for (float v : patches->slice(members[i])) sq += static_cast<double>(v) * v;
      value *= std::sqrt(sq);
    }
    grid.data()[members[i]] = static_cast<float>(value);
  }
  return SaliencyMap(bilinear_upsample(minmax_normalize(grid), out_h, out_w));
}

}  // namespace ddcam
