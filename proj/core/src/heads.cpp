#include "ddcam/heads.hpp"

#include <algorithm>
#include <cmath>

#include "ddcam/error.hpp"

namespace ddcam {

namespace {

void require_matrix(const Tensor& m, const std::string& name) {
  if (m.rank() != 2) {
    throw ShapeError(name + " must be a matrix, got shape " + shape_to_string(m.shape()));
  }
}

void require_length(const std::vector<float>& v, std::size_t n, const std::string& name) {
  if (v.size() != n) {
    throw ShapeError(name + " has length " + std::to_string(v.size()) + ", expected " +
                     std::to_string(n));
  }
}

// y = x * M for a row vector x and an n x n matrix M.
std::vector<double> row_times(std::span<const double> x, const Tensor& m) {
  const std::size_t rows = m.dim(0);
  const std::size_t cols = m.dim(1);
  std::vector<double> y(cols, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    if (x[r] == 0.0) continue;
    for (std::size_t c = 0; c < cols; ++c) y[c] += x[r] * m.at(r, c);
  }
  return y;
}

}  // namespace

void LinearHead::validate() const {
  require_matrix(weight, "linear weight");
  require_length(bias, weight.dim(0), "linear bias");
  if (weight.dim(0) < 2) throw ShapeError("linear head needs at least 2 classes");
}

void MlpHead::validate() const {
  if (layers.empty()) throw ShapeError("MLP head has no layers");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& layer = layers[i];
    const auto name = "MLP layer " + std::to_string(i);
    require_matrix(layer.weight, name + " weight");
    require_length(layer.bias, layer.out_features(), name + " bias");
    if (i > 0 && layer.in_features() != layers[i - 1].out_features()) {
      throw ShapeError(name + " expects " + std::to_string(layer.in_features()) +
                       " inputs but the previous layer produces " +
                       std::to_string(layers[i - 1].out_features()));
    }
  }
  if (layers.back().activation != Activation::identity) {
    throw ShapeError("final MLP layer must use the identity activation");
  }
  if (num_classes() < 2) throw ShapeError("MLP head needs at least 2 classes");
}

void AttentionHead::validate() const {
  require_matrix(query, "Wq");
  require_matrix(key, "Wk");
  require_matrix(value, "Wv");
  require_matrix(classifier, "Wcls");
  const std::size_t d = query.dim(0);
  for (const auto* m : {&query, &key, &value}) {
    if (m->dim(0) != d || m->dim(1) != d) {
      throw ShapeError("attention projections must all be " + std::to_string(d) + " x " +
                       std::to_string(d) + ", got " + shape_to_string(m->shape()));
    }
  }
  if (classifier.dim(1) != d) {
    throw ShapeError("Wcls shape " + shape_to_string(classifier.shape()) +
                     " does not match embedding dim " + std::to_string(d));
  }
  require_length(classifier_bias, classifier.dim(0), "bcls");
  require_length(cls_token, d, "cls_token");
  if (classifier.dim(0) < 2) throw ShapeError("attention head needs at least 2 classes");
}

HeadKind head_kind(const Head& head) {
  return std::visit(
      [](const auto& h) {
        using T = std::decay_t<decltype(h)>;
        if constexpr (std::is_same_v<T, LinearHead>) return HeadKind::linear;
        else if constexpr (std::is_same_v<T, MlpHead>) return HeadKind::mlp;
        else return HeadKind::vit;
      },
      head);
}

std::string to_string(HeadKind kind) {
  switch (kind) {
    case HeadKind::linear: return "linear";
    case HeadKind::mlp: return "mlp";
    case HeadKind::vit: return "vit";
  }
  return "?";
}

HeadKind parse_head_kind(const std::string& text) {
  if (text == "linear") return HeadKind::linear;
  if (text == "mlp") return HeadKind::mlp;
  if (text == "vit") return HeadKind::vit;
  throw FormatError("unknown head kind '" + text + "' (expected linear, mlp or vit)");
}

Logits forward_linear(const LinearHead& head, const Tensor& activations) {
  if (activations.rank() != 3 || activations.dim(0) != head.num_units()) {
    throw ShapeError("linear head weight " + shape_to_string(head.weight.shape()) +
                     " does not match activation stack " + shape_to_string(activations.shape()));
  }
  const std::size_t units = head.num_units();
  const std::size_t area = activations.slice_size();
  std::vector<double> gap(units, 0.0);
  for (std::size_t k = 0; k < units; ++k) {
    double sum = 0.0;
    for (float v : activations.slice(k)) sum += v;
    gap[k] = area == 0 ? 0.0 : sum / static_cast<double>(area);
  }
  Logits logits(head.num_classes());
  for (std::size_t c = 0; c < logits.size(); ++c) {
    double acc = head.bias[c];
    for (std::size_t k = 0; k < units; ++k) acc += static_cast<double>(head.weight.at(c, k)) * gap[k];
    logits[c] = static_cast<float>(acc);
  }
  return logits;
}

Logits forward_mlp(const MlpHead& head, const Tensor& activations) {
  if (activations.size() != head.in_features()) {
    throw ShapeError("MLP head expects " + std::to_string(head.in_features()) +
                     " flattened features, activation stack " +
                     shape_to_string(activations.shape()) + " has " +
                     std::to_string(activations.size()));
  }
  std::vector<float> x(activations.data().begin(), activations.data().end());
  for (const auto& layer : head.layers) {
    std::vector<float> y(layer.out_features());
    for (std::size_t o = 0; o < y.size(); ++o) {
      double acc = layer.bias[o];
      const auto row = layer.weight.slice(o);
      for (std::size_t i = 0; i < x.size(); ++i) acc += static_cast<double>(row[i]) * x[i];
      if (layer.activation == Activation::relu) acc = std::max(acc, 0.0);
      y[o] = static_cast<float>(acc);
    }
    x = std::move(y);
  }
  return x;
}

Logits forward_attention(const AttentionHead& head, const Tensor& patches, const UnitSet& active) {
  const std::size_t d = head.embed_dim();
  if (patches.rank() != 2 || patches.dim(1) != d) {
    throw ShapeError("patch tokens " + shape_to_string(patches.shape()) +
                     " do not match embedding dim " + std::to_string(d));
  }
  const std::size_t n = patches.dim(0);
  if (active.universe() != n) {
    throw ShapeError("active set over " + std::to_string(active.universe()) + " units, but " +
                     std::to_string(n) + " patches");
  }

  // Only the CLS output row reaches the classifier, so only its query is needed.
  std::vector<std::vector<double>> tokens;
  tokens.reserve(n + 1);
  tokens.emplace_back(head.cls_token.begin(), head.cls_token.end());
  for (std::size_t i = 0; i < n; ++i) {
    if (active.contains(i)) {
      const auto row = patches.slice(i);
      tokens.emplace_back(row.begin(), row.end());
    } else {
      tokens.emplace_back(d, 0.0);
    }
  }

  const auto q0 = row_times(tokens[0], head.query);
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
  std::vector<double> scores(tokens.size());
  for (std::size_t j = 0; j < tokens.size(); ++j) {
    const auto kj = row_times(tokens[j], head.key);
    double s = 0.0;
    for (std::size_t c = 0; c < d; ++c) s += q0[c] * kj[c];
    scores[j] = s * inv_sqrt_d;
  }
  const double peak = *std::ranges::max_element(scores);
  double z = 0.0;
  for (auto& s : scores) {
    s = std::exp(s - peak);
    z += s;
  }

  std::vector<double> out(d, 0.0);
  for (std::size_t j = 0; j < tokens.size(); ++j) {
    const double a = scores[j] / z;
    const auto vj = row_times(tokens[j], head.value);
    for (std::size_t c = 0; c < d; ++c) out[c] += a * vj[c];
  }

  Logits logits(head.num_classes());
  for (std::size_t c = 0; c < logits.size(); ++c) {
    double acc = head.classifier_bias[c];
    const auto row = head.classifier.slice(c);
    for (std::size_t i = 0; i < d; ++i) acc += static_cast<double>(row[i]) * out[i];
    logits[c] = static_cast<float>(acc);
  }
  return logits;
}

Logits masked_logits(const Head& head, const Tensor& activations, const UnitSet& active) {
  return std::visit(
      [&](const auto& h) -> Logits {
        using T = std::decay_t<decltype(h)>;
        if constexpr (std::is_same_v<T, LinearHead>) {
          return forward_linear(h, apply_unit_mask(activations, active));
        } else if constexpr (std::is_same_v<T, MlpHead>) {
          return forward_mlp(h, apply_unit_mask(activations, active));
        } else {
          return forward_attention(h, activations, active);
        }
      },
      head);
}

std::size_t predict(const Logits& logits) {
  if (logits.empty()) throw DomainError("predict: empty logit vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < logits.size(); ++i) {
    if (logits[i] > logits[best]) best = i;
  }
  return best;
}

std::vector<double> softmax(const Logits& logits) {
  std::vector<double> p(logits.begin(), logits.end());
  if (p.empty()) return p;
  const double peak = *std::ranges::max_element(p);
  double z = 0.0;
  for (auto& v : p) {
    v = std::exp(v - peak);
    z += v;
  }
  for (auto& v : p) v /= z;
  return p;
}

std::size_t unit_count(const Head& head, const Tensor& activations) {
  return std::visit(
      [&](const auto& h) -> std::size_t {
        using T = std::decay_t<decltype(h)>;
        if constexpr (std::is_same_v<T, LinearHead>) {
          if (activations.rank() != 3 || activations.dim(0) != h.num_units()) {
            throw ShapeError("linear weight " + shape_to_string(h.weight.shape()) + " has " +
                             std::to_string(h.num_units()) + " columns but activations " +
                             shape_to_string(activations.shape()) + " have K=" +
                             (activations.rank() ? std::to_string(activations.dim(0)) : "?"));
          }
        } else if constexpr (std::is_same_v<T, MlpHead>) {
          if (activations.rank() != 3 || activations.size() != h.in_features()) {
            throw ShapeError("MLP first layer " + shape_to_string(h.layers.front().weight.shape()) +
                             " does not accept activations " + shape_to_string(activations.shape()));
          }
        } else {
          if (activations.rank() != 2 || activations.dim(1) != h.embed_dim()) {
            throw ShapeError("attention head with D=" + std::to_string(h.embed_dim()) +
                             " does not accept patch tokens " + shape_to_string(activations.shape()));
          }
        }
        return activations.dim(0);
      },
      head);
}

}  // namespace ddcam
