#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ddcam/heads.hpp"
#include "ddcam/tensor.hpp"
#include "ddcam/toy_extractor.hpp"

namespace ddcam {

/// A validated model bundle: head, cached activations and metadata.
///
/// On disk this is a JSON manifest that references NPY files by paths
/// relative to the manifest's directory:
///
///   {
///     "kind": "linear" | "mlp" | "vit",
///     "units": M,
///     "input_hw": [H, W],
///     "weights": { name: npy path, ... },
///     "activations": npy path,
///     "cls_token": npy path,              // vit only
///     "reference_logits": npy path,       // optional
///     "labels": [ ... ],                  // optional, one per class
///     "layer_activations": ["relu", ...], // optional, mlp only
///     "extractor": {"kind": "toy", "channels": L, "filters": K, "seed": s}  // optional
///   }
///
/// Weight names: linear {W, b}; mlp {W0, b0, W1, b1, ...};
/// vit {Wq, Wk, Wv, Wcls, bcls}.
struct ModelBundle {
  Head head;
  Tensor activations;
  std::size_t units = 0;
  std::array<std::size_t, 2> input_hw{0, 0};
  std::vector<std::string> labels;
  std::optional<Tensor> reference_logits;
  std::optional<ToyExtractor> extractor;

  HeadKind kind() const { return head_kind(head); }
  std::size_t num_classes() const;
};

// Throws FormatError / ShapeError / IoError with a diagnostic naming the offending field.
ModelBundle load_manifest(const std::filesystem::path& manifest_path);

// Writes manifest.json plus one NPY per tensor into `directory`; returns the manifest path.
std::filesystem::path save_bundle(const ModelBundle& bundle, const std::filesystem::path& directory);

// Cross-checks fields that load_manifest also enforces; used for in-memory bundles.
void validate_bundle(const ModelBundle& bundle);

// Largest |logit - reference| over the full (unmasked) forward pass, or nullopt
// when the bundle carries no reference logits.
std::optional<double> reference_logit_error(const ModelBundle& bundle);

}  // namespace ddcam
