#pragma once

#include <cstddef>
#include <string>
#include <variant>
#include <vector>

#include "ddcam/tensor.hpp"
#include "ddcam/unit_set.hpp"

namespace ddcam {

using Logits = std::vector<float>;

/// Global average pooling followed by one fully connected layer.
struct LinearHead {
  Tensor weight;  // C x K
  std::vector<float> bias;  // C

  std::size_t num_classes() const { return weight.dim(0); }
  std::size_t num_units() const { return weight.dim(1); }
  void validate() const;
};

enum class Activation { relu, identity };

struct DenseLayer {
  Tensor weight;  // out x in
  std::vector<float> bias;  // out
  Activation activation = Activation::relu;

  std::size_t in_features() const { return weight.dim(1); }
  std::size_t out_features() const { return weight.dim(0); }
};

/// Fully connected stack over the flattened K*h*w activations.
struct MlpHead {
  std::vector<DenseLayer> layers;

  std::size_t in_features() const { return layers.front().in_features(); }
  std::size_t num_classes() const { return layers.back().out_features(); }
  void validate() const;
};

/// Single-head self-attention block over [CLS; patches] feeding a linear
/// classifier on the CLS output row. Projections use the row-vector
/// convention: Q = X * query, K = X * key, V = X * value.
struct AttentionHead {
  Tensor query;  // D x D
  Tensor key;    // D x D
  Tensor value;  // D x D
  Tensor classifier;  // C x D
  std::vector<float> classifier_bias;  // C
  std::vector<float> cls_token;  // D

  std::size_t embed_dim() const { return query.dim(0); }
  std::size_t num_classes() const { return classifier.dim(0); }
  void validate() const;
};

using Head = std::variant<LinearHead, MlpHead, AttentionHead>;

enum class HeadKind { linear, mlp, vit };

HeadKind head_kind(const Head& head);
std::string to_string(HeadKind kind);
HeadKind parse_head_kind(const std::string& text);

// logits = W * gap(a) + b for a K x h x w stack.
Logits forward_linear(const LinearHead& head, const Tensor& activations);

// Affine + activation per layer on flatten(a).
Logits forward_mlp(const MlpHead& head, const Tensor& activations);

// Patches outside `active` are zeroed; the CLS row is always kept.
Logits forward_attention(const AttentionHead& head, const Tensor& patches, const UnitSet& active);

// Logits of `head` with only `active` units of `activations` kept.
Logits masked_logits(const Head& head, const Tensor& activations, const UnitSet& active);

// Argmax; ties go to the lowest index.
std::size_t predict(const Logits& logits);

// Numerically stable softmax in double precision.
std::vector<double> softmax(const Logits& logits);

// Validates that `activations` fits `head` and returns the unit count M.
std::size_t unit_count(const Head& head, const Tensor& activations);

}  // namespace ddcam
