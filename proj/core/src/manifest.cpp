#include "ddcam/manifest.hpp"

#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "ddcam/error.hpp"

namespace ddcam {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<float> as_vector(const Tensor& t) { return {t.data().begin(), t.data().end()}; }

template <typename T>
T required(const json& j, const char* key, const fs::path& path) {
  if (!j.contains(key)) throw FormatError(path.string() + ": manifest lacks \"" + key + "\"");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": manifest field \"" + key + "\" has the wrong type (" +
                      e.what() + ")");
  }
}

Tensor load_ref(const json& files, const std::string& name, const fs::path& base,
                const fs::path& manifest) {
  if (!files.contains(name)) {
    throw FormatError(manifest.string() + ": manifest lacks weight \"" + name + "\"");
  }
  const fs::path rel = files.at(name).get<std::string>();
  const fs::path full = rel.is_absolute() ? rel : base / rel;
  if (!fs::exists(full)) {
    throw IoError(manifest.string() + ": referenced file " + full.string() + " does not exist");
  }
  return load_tensor(full);
}

std::vector<float> load_vector(const json& files, const std::string& name, const fs::path& base,
                               const fs::path& manifest) {
  const Tensor t = load_ref(files, name, base, manifest);
  if (t.rank() != 1) {
    throw ShapeError(manifest.string() + ": \"" + name + "\" must be 1-D, got " +
                     shape_to_string(t.shape()));
  }
  return as_vector(t);
}

Activation parse_activation(const std::string& s) {
  if (s == "relu") return Activation::relu;
  if (s == "identity") return Activation::identity;
  throw FormatError("unknown layer activation '" + s + "'");
}

}  // namespace

std::size_t ModelBundle::num_classes() const {
  return std::visit([](const auto& h) { return h.num_classes(); }, head);
}

void validate_bundle(const ModelBundle& bundle) {
  std::visit([](const auto& h) { h.validate(); }, bundle.head);
  const std::size_t m = unit_count(bundle.head, bundle.activations);
  if (m != bundle.units) {
    throw ShapeError("manifest declares " + std::to_string(bundle.units) +
                     " units but activations " + shape_to_string(bundle.activations.shape()) +
                     " hold " + std::to_string(m));
  }
  if (bundle.input_hw[0] == 0 || bundle.input_hw[1] == 0) {
    throw ShapeError("input_hw must be positive");
  }
  if (bundle.kind() == HeadKind::vit) {
    const auto side = static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(m))));
    if (side * side != m) {
      throw ShapeError("vit bundle has " + std::to_string(m) + " patches, not a square grid");
    }
  }
  if (!bundle.labels.empty() && bundle.labels.size() != bundle.num_classes()) {
    throw ShapeError("manifest lists " + std::to_string(bundle.labels.size()) +
                     " labels for a head with " + std::to_string(bundle.num_classes()) + " classes");
  }
  if (bundle.reference_logits && bundle.reference_logits->size() != bundle.num_classes()) {
    throw ShapeError("reference logits " + shape_to_string(bundle.reference_logits->shape()) +
                     " do not match " + std::to_string(bundle.num_classes()) + " classes");
  }
  if (bundle.extractor) {
    if (bundle.kind() == HeadKind::vit) throw FormatError("the toy extractor only feeds CNN heads");
    if (bundle.activations.dim(0) != bundle.extractor->filters) {
      throw ShapeError("toy extractor produces " + std::to_string(bundle.extractor->filters) +
                       " maps but activations have " + std::to_string(bundle.activations.dim(0)));
    }
    if (bundle.activations.dim(1) != bundle.extractor->output_extent(bundle.input_hw[0]) ||
        bundle.activations.dim(2) != bundle.extractor->output_extent(bundle.input_hw[1])) {
      throw ShapeError("activation extent " + shape_to_string(bundle.activations.shape()) +
                       " does not match the toy extractor output for the input resolution");
    }
  }
}

ModelBundle load_manifest(const fs::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw IoError("cannot open manifest " + manifest_path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw FormatError(manifest_path.string() + ": invalid JSON (" + e.what() + ")");
  }
  if (!j.is_object()) throw FormatError(manifest_path.string() + ": manifest must be a JSON object");
  const fs::path base = manifest_path.parent_path();

  const auto kind = parse_head_kind(required<std::string>(j, "kind", manifest_path));
  const auto files = required<json>(j, "weights", manifest_path);
  if (!files.is_object()) throw FormatError(manifest_path.string() + ": \"weights\" must be an object");

  ModelBundle bundle;
  bundle.units = required<std::size_t>(j, "units", manifest_path);
  const auto hw = required<std::vector<std::size_t>>(j, "input_hw", manifest_path);
  if (hw.size() != 2) throw FormatError(manifest_path.string() + ": \"input_hw\" must be [H, W]");
  bundle.input_hw = {hw[0], hw[1]};
  if (j.contains("labels")) bundle.labels = j.at("labels").get<std::vector<std::string>>();

  json act_ref = {{"activations", required<std::string>(j, "activations", manifest_path)}};
  bundle.activations = load_ref(act_ref, "activations", base, manifest_path);

  switch (kind) {
    case HeadKind::linear: {
      LinearHead h{load_ref(files, "W", base, manifest_path), load_vector(files, "b", base, manifest_path)};
      bundle.head = std::move(h);
      break;
    }
    case HeadKind::mlp: {
      MlpHead h;
      for (std::size_t i = 0; files.contains("W" + std::to_string(i)); ++i) {
        const auto idx = std::to_string(i);
        h.layers.push_back({load_ref(files, "W" + idx, base, manifest_path),
                            load_vector(files, "b" + idx, base, manifest_path), Activation::relu});
      }
      if (h.layers.empty()) throw FormatError(manifest_path.string() + ": mlp manifest lacks weight \"W0\"");
      if (j.contains("layer_activations")) {
        const auto acts = j.at("layer_activations").get<std::vector<std::string>>();
        if (acts.size() != h.layers.size()) {
          throw FormatError(manifest_path.string() + ": layer_activations lists " +
                            std::to_string(acts.size()) + " entries for " +
                            std::to_string(h.layers.size()) + " layers");
        }
        for (std::size_t i = 0; i < acts.size(); ++i) h.layers[i].activation = parse_activation(acts[i]);
      } else {
        h.layers.back().activation = Activation::identity;
      }
      bundle.head = std::move(h);
      break;
    }
    case HeadKind::vit: {
      AttentionHead h;
      h.query = load_ref(files, "Wq", base, manifest_path);
      h.key = load_ref(files, "Wk", base, manifest_path);
      h.value = load_ref(files, "Wv", base, manifest_path);
      h.classifier = load_ref(files, "Wcls", base, manifest_path);
      h.classifier_bias = load_vector(files, "bcls", base, manifest_path);
      json cls_ref = {{"cls_token", required<std::string>(j, "cls_token", manifest_path)}};
      h.cls_token = load_vector(cls_ref, "cls_token", base, manifest_path);
      bundle.head = std::move(h);
      break;
    }
  }

  if (j.contains("reference_logits") && !j.at("reference_logits").is_null()) {
    json ref = {{"reference_logits", j.at("reference_logits").get<std::string>()}};
    bundle.reference_logits = load_ref(ref, "reference_logits", base, manifest_path);
  }
  if (j.contains("extractor") && !j.at("extractor").is_null()) {
    const auto& e = j.at("extractor");
    if (e.value("kind", std::string{}) != "toy") {
      throw FormatError(manifest_path.string() + ": only the \"toy\" extractor is supported");
    }
    bundle.extractor = ToyExtractor{e.at("channels").get<std::size_t>(),
                                    e.at("filters").get<std::size_t>(),
                                    e.at("seed").get<std::uint64_t>()};
  }

  try {
    validate_bundle(bundle);
  } catch (const ShapeError& e) {
    throw ShapeError(manifest_path.string() + ": " + e.what());
  }
  return bundle;
}

fs::path save_bundle(const ModelBundle& bundle, const fs::path& directory) {
  validate_bundle(bundle);
  fs::create_directories(directory);
  json files = json::object();
  auto put = [&](const std::string& name, const Tensor& t) {
    const std::string file = name + ".npy";
    save_tensor(t, directory / file);
    return file;
  };
  auto put_vector = [&](const std::string& name, const std::vector<float>& v) {
    return put(name, Tensor({v.size()}, v));
  };

  json j;
  j["kind"] = to_string(bundle.kind());
  j["units"] = bundle.units;
  j["input_hw"] = {bundle.input_hw[0], bundle.input_hw[1]};

  std::visit(
      [&](const auto& h) {
        using T = std::decay_t<decltype(h)>;
        if constexpr (std::is_same_v<T, LinearHead>) {
          files["W"] = put("W", h.weight);
          files["b"] = put_vector("b", h.bias);
        } else if constexpr (std::is_same_v<T, MlpHead>) {
          json acts = json::array();
          for (std::size_t i = 0; i < h.layers.size(); ++i) {
            const auto idx = std::to_string(i);
            files["W" + idx] = put("W" + idx, h.layers[i].weight);
            files["b" + idx] = put_vector("b" + idx, h.layers[i].bias);
            acts.push_back(h.layers[i].activation == Activation::relu ? "relu" : "identity");
          }
          j["layer_activations"] = acts;
        } else {
          files["Wq"] = put("Wq", h.query);
          files["Wk"] = put("Wk", h.key);
          files["Wv"] = put("Wv", h.value);
          files["Wcls"] = put("Wcls", h.classifier);
          files["bcls"] = put_vector("bcls", h.classifier_bias);
          j["cls_token"] = put_vector("cls_token", h.cls_token);
        }
      },
      bundle.head);
  j["weights"] = files;
  j["activations"] = put("activations", bundle.activations);
  if (bundle.reference_logits) j["reference_logits"] = put("reference_logits", *bundle.reference_logits);
  j["labels"] = bundle.labels;
  if (bundle.extractor) {
    j["extractor"] = {{"kind", "toy"},
                      {"channels", bundle.extractor->channels},
                      {"filters", bundle.extractor->filters},
                      {"seed", bundle.extractor->seed}};
  }

  const auto manifest = directory / "manifest.json";
  std::ofstream out(manifest, std::ios::trunc);
  if (!out) throw IoError("cannot write " + manifest.string());
  out << j.dump(2) << '\n';
  return manifest;
}

std::optional<double> reference_logit_error(const ModelBundle& bundle) {
  if (!bundle.reference_logits) return std::nullopt;
  const auto logits = masked_logits(bundle.head, bundle.activations, UnitSet::full(bundle.units));
  double worst = 0.0;
  const auto ref = bundle.reference_logits->data();
  for (std::size_t i = 0; i < logits.size(); ++i) {
    worst = std::max(worst, std::abs(static_cast<double>(logits[i]) - ref[i]));
  }
  return worst;
}

}  // namespace ddcam
