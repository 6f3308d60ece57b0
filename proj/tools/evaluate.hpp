#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ddcam/explain.hpp"
#include "ddcam/metrics.hpp"

namespace ddcam::cli {

struct EvaluationRecord {
  std::size_t target_class = 0;
  std::size_t selected_units = 0;
  ConfidencePair confidence;
  double complexity = 0.0;
  double coherency = 0.0;
  double adcc = 0.0;
  std::optional<LocalizationScores> localization;
  std::optional<std::size_t> regions;
  std::optional<double> pct_highlighted;
};

struct EvaluationReport {
  std::vector<EvaluationRecord> records;
  double average_drop = 0.0;
  double increase_in_confidence = 0.0;
  double average_drop_deletion = 0.0;
  double coherency = 0.0;
  double complexity = 0.0;
  double adcc = 0.0;
  std::optional<double> iou;
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> regions;
  std::optional<double> pct_highlighted;
};

// Softmax confidence of `target` on image * map (o) and image * (1 - map) (d);
// y is the confidence on the unmodified image.
ConfidencePair masked_confidences(const ModelBundle& bundle, const Tensor& image, const SaliencyMap& map,
                                  std::size_t target);

// Explains one L x H x W image through the bundle's toy extractor and scores it.
EvaluationRecord evaluate_image(const ModelBundle& bundle, const Tensor& image, const std::vector<Box>& boxes,
                                const ExplainConfig& config, double tau);

// `images` is L x H x W or B x L x H x W. Empty `boxes` skips localization.
EvaluationReport evaluate_images(const ModelBundle& bundle, const Tensor& images, const std::vector<Box>& boxes,
                                 const ExplainConfig& config, double tau);

// Recomputes the aggregate fields from `report.records`.
void aggregate(EvaluationReport& report);

nlohmann::json report_to_json(const EvaluationReport& report);
std::string report_to_csv(const EvaluationReport& report);

std::vector<Box> parse_boxes(const nlohmann::json& j);

}  // namespace ddcam::cli
