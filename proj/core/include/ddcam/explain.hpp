#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ddcam/ddmin.hpp"
#include "ddcam/manifest.hpp"
#include "ddcam/saliency.hpp"

namespace ddcam {

enum class SearchMode { general, onepass, automatic };

SearchMode parse_search_mode(const std::string& text);
std::string to_string(SearchMode mode);

struct ExplainConfig {
  SearchMode mode = SearchMode::automatic;
  std::size_t initial_granularity = 2;
  bool repair = true;
  bool parallel = false;
  bool verify_memo_hits = false;
  DropBaseline baseline = DropBaseline::selected;
  PatchScalar patch_scalar = PatchScalar::weight;
};

// Automatic mode: one-pass for linear heads, general DD otherwise.
SearchMode resolve_mode(SearchMode mode, HeadKind kind);

struct ExplanationResult {
  std::size_t target_class = 0;
  std::size_t units = 0;
  SearchMode mode = SearchMode::general;
  UnitSet selected;
  std::vector<double> delta;
  std::vector<double> weights;
  SaliencyMap map;
  SearchStats stats;
  std::vector<std::string> warnings;
};

// Oracle "prediction with only the active units kept" over the bundle's head.
PredictionOracle make_head_oracle(const Head& head, const Tensor& activations);

// Full pipeline: search, weights, saliency map at the bundle's input resolution.
ExplanationResult explain(const ModelBundle& bundle, const ExplainConfig& config = {});

// Runs only the saliency stage for a given selection.
SaliencyMap render_map(const ModelBundle& bundle, const UnitSet& selected,
                       const std::vector<double>& weights, PatchScalar scalar = PatchScalar::weight);

// Result JSON. `map_npy`/`map_pgm` are stored verbatim (callers pass paths
// relative to the JSON file). The only timing field is "wall_time_ms".
nlohmann::json result_to_json(const ExplanationResult& result, const std::string& map_npy,
                              const std::string& map_pgm, const std::vector<std::string>& labels = {});

// Fields read back by verification.
struct StoredResult {
  std::size_t target_class = 0;
  std::vector<std::size_t> selected_units;
};
StoredResult stored_result_from_json(const nlohmann::json& j);

}  // namespace ddcam
