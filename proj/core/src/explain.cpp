#include "ddcam/explain.hpp"

#include "ddcam/error.hpp"

namespace ddcam {

SearchMode parse_search_mode(const std::string& text) {
  if (text == "general") return SearchMode::general;
  if (text == "onepass") return SearchMode::onepass;
  if (text == "auto") return SearchMode::automatic;
  throw DomainError("unknown search mode '" + text + "' (expected general, onepass or auto)");
}

std::string to_string(SearchMode mode) {
  switch (mode) {
    case SearchMode::general: return "general";
    case SearchMode::onepass: return "onepass";
    case SearchMode::automatic: return "auto";
  }
  return "?";
}

SearchMode resolve_mode(SearchMode mode, HeadKind kind) {
  if (mode != SearchMode::automatic) return mode;
  return kind == HeadKind::linear ? SearchMode::onepass : SearchMode::general;
}

PredictionOracle make_head_oracle(const Head& head, const Tensor& activations) {
  const std::size_t m = unit_count(head, activations);
  return PredictionOracle(m, [head, activations](const UnitSet& active) {
    return predict(masked_logits(head, activations, active));
  });
}

SaliencyMap render_map(const ModelBundle& bundle, const UnitSet& selected,
                       const std::vector<double>& weights, PatchScalar scalar) {
  const auto [h, w] = bundle.input_hw;
  if (bundle.kind() == HeadKind::vit) {
    return compose_vit_map(weights, selected, h, w, scalar, &bundle.activations);
  }
  return compose_cnn_map(bundle.activations, selected, weights, h, w);
}

ExplanationResult explain(const ModelBundle& bundle, const ExplainConfig& config) {
  auto oracle = make_head_oracle(bundle.head, bundle.activations);
  oracle.set_verify_memo_hits(config.verify_memo_hits);

  ExplanationResult result;
  result.units = oracle.universe();
  result.target_class = oracle.target();
  result.mode = resolve_mode(config.mode, bundle.kind());

  SearchResult search;
  if (result.mode == SearchMode::onepass) {
    search = find_minimal_onepass(oracle, {.repair = config.repair});
  } else {
    search = find_minimal_general(
        oracle, {.initial_granularity = config.initial_granularity, .parallel = config.parallel, .on_round = {}});
  }
  result.selected = std::move(search.selected);
  result.stats = search.stats;

  auto weights = compute_unit_weights(bundle.head, bundle.activations, result.selected,
                                      result.target_class, config.baseline, config.parallel);
  result.delta = std::move(weights.delta);
  result.weights = std::move(weights.weights);

  if (result.selected.is_empty()) {
    result.warnings.push_back("prediction is preserved with every unit masked; the saliency map is empty");
    result.map = SaliencyMap::zeros(bundle.input_hw[0], bundle.input_hw[1]);
  } else {
    result.map = render_map(bundle, result.selected, result.weights, config.patch_scalar);
  }
  return result;
}

nlohmann::json result_to_json(const ExplanationResult& result, const std::string& map_npy,
                              const std::string& map_pgm, const std::vector<std::string>& labels) {
  nlohmann::json j;
  j["target_class"] = result.target_class;
  if (result.target_class < labels.size()) j["target_label"] = labels[result.target_class];
  j["units"] = result.units;
  j["mode"] = to_string(result.mode);
  j["selected_units"] = result.selected.indices();
  j["delta"] = result.delta;
  j["weights"] = result.weights;
  j["forward_evaluations"] = result.stats.forward_evaluations;
  j["total_requests"] = result.stats.total_requests;
  j["rounds"] = result.stats.rounds;
  j["repair_evaluations"] = result.stats.repair_evaluations;
  j["wall_time_ms"] = result.stats.wall_time.count();
  j["map_npy"] = map_npy;
  j["map_pgm"] = map_pgm;
  j["warnings"] = result.warnings;
  return j;
}

StoredResult stored_result_from_json(const nlohmann::json& j) {
  try {
    return {j.at("target_class").get<std::size_t>(),
            j.at("selected_units").get<std::vector<std::size_t>>()};
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("result JSON lacks target_class/selected_units (") + e.what() + ")");
  }
}

}  // namespace ddcam
