#include "evaluate.hpp"

#include <iomanip>
#include <sstream>

#include "ddcam/error.hpp"
#include "ddcam/toy_extractor.hpp"

namespace ddcam::cli {

namespace {

Tensor modulate(const Tensor& image, const SaliencyMap& map, bool inverse) {
  const std::size_t h = image.dim(1);
  const std::size_t w = image.dim(2);
  if (map.height() != h || map.width() != w) {
    throw ShapeError("saliency map " + shape_to_string(map.tensor().shape()) +
                     " does not match image " + shape_to_string(image.shape()));
  }
  Tensor out = image;
  for (std::size_t c = 0; c < image.dim(0); ++c) {
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        const float m = map.at(y, x);
        out.at(c, y, x) *= inverse ? 1.0F - m : m;
      }
    }
  }
  return out;
}

const ToyExtractor& require_extractor(const ModelBundle& bundle) {
  if (!bundle.extractor) {
    throw FormatError("evaluation needs a bundle wired to the toy extractor (\"extractor\" in the manifest)");
  }
  return *bundle.extractor;
}

double confidence(const ModelBundle& bundle, const Tensor& image, std::size_t target) {
  const Tensor acts = toy_extract(image, require_extractor(bundle));
  return softmax(masked_logits(bundle.head, acts, UnitSet::full(acts.dim(0))))[target];
}

ModelBundle with_activations(const ModelBundle& bundle, const Tensor& image) {
  ModelBundle b = bundle;
  b.activations = toy_extract(image, require_extractor(bundle));
  b.reference_logits.reset();
  return b;
}

double mean_of(const std::vector<EvaluationRecord>& records, auto field) {
  double sum = 0.0;
  for (const auto& r : records) sum += field(r);
  return sum / static_cast<double>(records.size());
}

}  // namespace

ConfidencePair masked_confidences(const ModelBundle& bundle, const Tensor& image, const SaliencyMap& map,
                                  std::size_t target) {
  return {confidence(bundle, image, target), confidence(bundle, modulate(image, map, false), target),
          confidence(bundle, modulate(image, map, true), target)};
}

EvaluationRecord evaluate_image(const ModelBundle& bundle, const Tensor& image, const std::vector<Box>& boxes,
                                const ExplainConfig& config, double tau) {
  if (image.rank() != 3 || image.dim(1) != bundle.input_hw[0] || image.dim(2) != bundle.input_hw[1]) {
    throw ShapeError("image " + shape_to_string(image.shape()) + " does not match input resolution " +
                     std::to_string(bundle.input_hw[0]) + " x " + std::to_string(bundle.input_hw[1]));
  }
  const auto original = explain(with_activations(bundle, image), config);

  EvaluationRecord r;
  r.target_class = original.target_class;
  r.selected_units = original.selected.size();
  r.confidence = masked_confidences(bundle, image, original.map, original.target_class);
  r.complexity = complexity(original.map);

  // Coherency compares against the explanation of the explanation-masked input.
  const Tensor masked = modulate(image, original.map, false);
  const auto rerun = explain(with_activations(bundle, masked), config);
  r.coherency = coherency(original.map, rerun.map);

  const double ad = r.confidence.y > 0.0 ? std::max(0.0, r.confidence.y - r.confidence.o) / r.confidence.y : 0.0;
  r.adcc = adcc(ad, r.coherency, r.complexity);

  if (!boxes.empty()) {
    const auto mask = binarize(original.map, tau);
    r.localization = localization_scores(mask, boxes);
    r.regions = count_regions(mask);
    r.pct_highlighted = percentage_highlighted(mask);
  }
  return r;
}

EvaluationReport evaluate_images(const ModelBundle& bundle, const Tensor& images, const std::vector<Box>& boxes,
                                 const ExplainConfig& config, double tau) {
  EvaluationReport report;
  if (images.rank() == 3) {
    report.records.push_back(evaluate_image(bundle, images, boxes, config, tau));
  } else if (images.rank() == 4) {
    for (std::size_t b = 0; b < images.dim(0); ++b) {
      const auto s = images.slice(b);
      Tensor one({images.dim(1), images.dim(2), images.dim(3)}, std::vector<float>(s.begin(), s.end()));
      report.records.push_back(evaluate_image(bundle, one, boxes, config, tau));
    }
  } else {
    throw ShapeError("images must be L x H x W or B x L x H x W, got " + shape_to_string(images.shape()));
  }
  if (report.records.empty()) throw DomainError("no images to evaluate");
  aggregate(report);
  return report;
}

void aggregate(EvaluationReport& report) {
  const auto& rs = report.records;
  std::vector<ConfidencePair> pairs;
  for (const auto& r : rs) pairs.push_back(r.confidence);
  report.average_drop = average_drop(pairs);
  report.increase_in_confidence = increase_in_confidence(pairs);
  report.average_drop_deletion = average_drop_deletion(pairs);
  report.coherency = mean_of(rs, [](const auto& r) { return r.coherency; });
  report.complexity = mean_of(rs, [](const auto& r) { return r.complexity; });
  report.adcc = mean_of(rs, [](const auto& r) { return r.adcc; });
  if (!rs.empty() && rs.front().localization) {
    report.iou = mean_of(rs, [](const auto& r) { return r.localization->iou; });
    report.precision = mean_of(rs, [](const auto& r) { return r.localization->precision; });
    report.recall = mean_of(rs, [](const auto& r) { return r.localization->recall; });
    report.regions = mean_of(rs, [](const auto& r) { return static_cast<double>(*r.regions); });
    report.pct_highlighted = mean_of(rs, [](const auto& r) { return *r.pct_highlighted; });
  }
}

nlohmann::json report_to_json(const EvaluationReport& report) {
  using nlohmann::json;
  json records = json::array();
  for (const auto& r : report.records) {
    json j = {{"target_class", r.target_class},
              {"selected_units", r.selected_units},
              {"y", r.confidence.y},
              {"o", r.confidence.o},
              {"d", r.confidence.d},
              {"complexity", r.complexity},
              {"coherency", r.coherency},
              {"adcc", r.adcc}};
    if (r.localization) {
      j["iou"] = r.localization->iou;
      j["precision"] = r.localization->precision;
      j["recall"] = r.localization->recall;
      j["regions"] = *r.regions;
      j["pct_highlighted"] = *r.pct_highlighted;
    } else {
      for (const char* key : {"iou", "precision", "recall", "regions", "pct_highlighted"}) j[key] = nullptr;
    }
    records.push_back(std::move(j));
  }
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  json agg = {{"images", report.records.size()},
              {"adcc", report.adcc},
              {"average_drop", report.average_drop},
              {"coherency", report.coherency},
              {"complexity", report.complexity},
              {"increase_in_confidence", report.increase_in_confidence},
              {"average_drop_deletion", report.average_drop_deletion},
              {"iou", opt(report.iou)},
              {"precision", opt(report.precision)},
              {"recall", opt(report.recall)},
              {"regions", opt(report.regions)},
              {"pct_highlighted", opt(report.pct_highlighted)}};
  return {{"records", records}, {"aggregate", agg}};
}

std::string report_to_csv(const EvaluationReport& report) {
  std::ostringstream os;
  os << std::setprecision(6) << std::fixed;
  os << "images,ADCC,AD,Coh,Com,IC,ADD,IoU,Precision,Recall,Regions,PctHighlighted\n";
  auto opt = [&](const std::optional<double>& v) {
    if (v) os << *v;
  };
  os << report.records.size() << ',' << report.adcc << ',' << report.average_drop << ',' << report.coherency
     << ',' << report.complexity << ',' << report.increase_in_confidence << ','
     << report.average_drop_deletion << ',';
  opt(report.iou);
  os << ',';
  opt(report.precision);
  os << ',';
  opt(report.recall);
  os << ',';
  opt(report.regions);
  os << ',';
  opt(report.pct_highlighted);
  os << '\n';
  return os.str();
}

std::vector<Box> parse_boxes(const nlohmann::json& j) {
  std::vector<Box> boxes;
  try {
    for (const auto& b : j.at("boxes")) {
      const auto v = b.get<std::vector<std::size_t>>();
      if (v.size() != 4) throw FormatError("each box must be [x, y, w, h]");
      boxes.push_back({v[0], v[1], v[2], v[3]});
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("boxes JSON must be {\"boxes\": [[x, y, w, h], ...]} (") + e.what() + ")");
  }
  if (boxes.empty()) throw FormatError("boxes JSON lists no boxes");
  return boxes;
}

}  // namespace ddcam::cli
