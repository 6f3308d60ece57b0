#include "demo.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

#include "ddcam/error.hpp"
#include "ddcam/rng.hpp"
#include "ddcam/toy_extractor.hpp"

namespace ddcam::cli {

namespace {

constexpr std::size_t kMapSide = 3;        // linear demo feature maps are 3 x 3
constexpr std::size_t kMlpMapSide = 2;     // mlp demo feature maps are 2 x 2
constexpr std::size_t kMlpHidden = 16;
constexpr std::size_t kEmbedDim = 8;
constexpr std::size_t kPatchPixels = 16;   // vit input side = 16 * grid side
constexpr std::size_t kCnnInputSide = 32;
constexpr std::size_t kToyChannels = 3;
constexpr std::size_t kToyImageSide = 34;  // 3x3 valid conv -> 32, 4x pool -> 8

Tensor uniform_tensor(Lcg64& rng, Shape shape, float lo, float hi) {
  Tensor t(std::move(shape));
  for (float& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

std::vector<float> uniform_vector(Lcg64& rng, std::size_t n, float lo, float hi) {
  std::vector<float> v(n);
  for (float& x : v) x = rng.uniform(lo, hi);
  return v;
}

std::vector<std::string> class_labels(std::size_t classes) {
  std::vector<std::string> labels;
  for (std::size_t c = 0; c < classes; ++c) labels.push_back("class_" + std::to_string(c));
  return labels;
}

// Unique 1-minimal set by construction: planted units lift the target logit
// by exactly 1 each, the rival's bias sits |R| - 0.5 above the target's, and
// every other unit shifts all classes alike up to noise below 0.4 in total.
LinearHead engineered_linear(Lcg64& rng, const Tensor& activations, std::size_t classes,
                             UnitSet& planted) {
  const std::size_t m = activations.dim(0);
  std::vector<double> gap(m);
  for (std::size_t k = 0; k < m; ++k) {
    const auto s = activations.slice(k);
    gap[k] = std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(s.size());
  }

  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = m; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  const std::size_t planted_count = 1 + rng.below(std::max<std::size_t>(1, m / 3));
  planted = UnitSet(m, std::vector<std::size_t>(order.begin(), order.begin() + planted_count));

  const std::size_t target = rng.below(classes);
  const std::size_t rival = (target + 1 + rng.below(classes - 1)) % classes;
  const double noise = 0.2 / static_cast<double>(m);

  LinearHead head{Tensor({classes, m}), std::vector<float>(classes)};
  for (std::size_t k = 0; k < m; ++k) {
    if (planted.contains(k)) {
      head.weight.at(target, k) = static_cast<float>(1.0 / gap[k]);
      continue;
    }
    const double shared = rng.uniform(-1.0F, 1.0F);
    for (std::size_t c = 0; c < classes; ++c) {
      const double jitter = noise * rng.uniform(-1.0F, 1.0F);
      head.weight.at(c, k) = static_cast<float>((shared + jitter) / gap[k]);
    }
  }
  const double rival_bias = static_cast<double>(planted_count) - 0.5;
  for (std::size_t c = 0; c < classes; ++c) {
    head.bias[c] = static_cast<float>(c == target ? 0.0 : (c == rival ? rival_bias : rival_bias - 1.0));
  }
  return head;
}

MlpHead random_mlp(Lcg64& rng, std::size_t in, std::size_t classes) {
  const auto s0 = static_cast<float>(std::sqrt(6.0 / static_cast<double>(in)));
  const auto s1 = static_cast<float>(std::sqrt(6.0 / static_cast<double>(kMlpHidden)));
  MlpHead head;
  head.layers.push_back({uniform_tensor(rng, {kMlpHidden, in}, -s0, s0),
                         uniform_vector(rng, kMlpHidden, -0.1F, 0.1F), Activation::relu});
  head.layers.push_back({uniform_tensor(rng, {classes, kMlpHidden}, -s1, s1),
                         uniform_vector(rng, classes, -0.1F, 0.1F), Activation::identity});
  return head;
}

// Smooth random images with one bright blob inside a shared box region.
Tensor toy_images(Lcg64& rng, std::size_t count, const Box& box) {
  const std::size_t side = kToyImageSide;
  Tensor images({count, kToyChannels, side, side});
  auto data = images.data();
  for (std::size_t b = 0; b < count; ++b) {
    const double cy = box.y + box.h * (0.3 + 0.4 * rng.uniform01());
    const double cx = box.x + box.w * (0.3 + 0.4 * rng.uniform01());
    const double radius = 0.25 * static_cast<double>(std::min(box.w, box.h));
    for (std::size_t c = 0; c < kToyChannels; ++c) {
      const double tint = 0.6 + 0.4 * rng.uniform01();
      for (std::size_t y = 0; y < side; ++y) {
        for (std::size_t x = 0; x < side; ++x) {
          const double r2 = ((y - cy) * (y - cy) + (x - cx) * (x - cx)) / (radius * radius);
          const double v = tint * std::exp(-0.5 * r2) + 0.15 * rng.uniform01();
          data[((b * kToyChannels + c) * side + y) * side + x] = static_cast<float>(std::min(v, 1.0));
        }
      }
    }
  }
  return images;
}

std::vector<float>& output_bias(Head& head) {
  if (auto* h = std::get_if<LinearHead>(&head)) return h->bias;
  if (auto* h = std::get_if<MlpHead>(&head)) return h->layers.back().bias;
  return std::get<AttentionHead>(head).classifier_bias;
}

double margin(const Logits& logits, std::size_t cls) {
  double rival = -INFINITY;
  for (std::size_t c = 0; c < logits.size(); ++c)
    if (c != cls) rival = std::max(rival, static_cast<double>(logits[c]));
  return logits[cls] - rival;
}

// Lowers the predicted class's output bias so that the all-masked input no
// longer yields it, when the unmasked margin leaves room to do so.
void calibrate_empty_prediction(ModelBundle& b) {
  const auto full = masked_logits(b.head, b.activations, UnitSet::full(b.units));
  const std::size_t target = predict(full);
  const double empty_margin = margin(masked_logits(b.head, b.activations, UnitSet(b.units)), target);
  const double full_margin = margin(full, target);
  if (empty_margin < 0.0 || full_margin <= empty_margin) return;
  output_bias(b.head)[target] -= static_cast<float>(0.5 * (empty_margin + full_margin));
  if (predict(masked_logits(b.head, b.activations, UnitSet::full(b.units))) != target) {
    output_bias(b.head)[target] += static_cast<float>(0.5 * (empty_margin + full_margin));
  }
}

// Toy-wired heads: every class but the last gathers non-negative evidence
// from the units; the last ("background") class holds a quarter of the
// strongest evidence on the reference activations as a constant bias, so it
// wins only when little of the input survives.
Head toy_head(Lcg64& rng, HeadKind kind, const Tensor& activations, std::size_t classes) {
  const std::size_t m = activations.dim(0);
  Head head;
  if (kind == HeadKind::linear) {
    LinearHead h{Tensor({classes, m}), std::vector<float>(classes, 0.0F)};
    for (std::size_t c = 0; c + 1 < classes; ++c)
      for (std::size_t k = 0; k < m; ++k) h.weight.at(c, k) = rng.uniform(0.0F, 1.0F);
    head = std::move(h);
  } else {
    MlpHead h = random_mlp(rng, activations.size(), classes);
    std::ranges::fill(h.layers[0].bias, 0.0F);
    auto& out = h.layers[1];
    const float s1 = static_cast<float>(std::sqrt(6.0 / static_cast<double>(kMlpHidden)));
    for (std::size_t c = 0; c < classes; ++c)
      for (std::size_t j = 0; j < kMlpHidden; ++j) out.weight.at(c, j) = c + 1 < classes ? rng.uniform(0.0F, s1) : 0.0F;
    std::ranges::fill(out.bias, 0.0F);
    head = std::move(h);
  }
  const auto logits = masked_logits(head, activations, UnitSet::full(m));
  const float strongest = *std::max_element(logits.begin(), logits.end() - 1);
  output_bias(head).back() = 0.25F * strongest;
  return head;
}

Tensor first_image(const Tensor& images) {
  const std::size_t per = images.slice_size();
  std::vector<float> one(images.data().begin(), images.data().begin() + static_cast<std::ptrdiff_t>(per));
  return Tensor({images.dim(1), images.dim(2), images.dim(3)}, std::move(one));
}

}  // namespace

DemoBundle make_demo_bundle(const DemoSpec& spec) {
  if (spec.units == 0) throw DomainError("demo needs at least one unit");
  if (spec.classes < 2) throw DomainError("demo needs at least two classes");
  Lcg64 rng(spec.seed);
  DemoBundle demo;
  ModelBundle& b = demo.bundle;
  b.units = spec.units;
  b.labels = class_labels(spec.classes);

  if (spec.toy_images > 0) {
    if (spec.kind == HeadKind::vit) throw DomainError("toy images are only available for linear and mlp demos");
    b.extractor = ToyExtractor{kToyChannels, spec.units, spec.seed};
    b.input_hw = {kToyImageSide, kToyImageSide};
    demo.boxes = {Box{10, 10, 14, 14}};
    demo.images = toy_images(rng, spec.toy_images, demo.boxes.front());
    b.activations = toy_extract(first_image(*demo.images), *b.extractor);
    b.head = toy_head(rng, spec.kind, b.activations, spec.classes);
    b.labels.back() = "background";
  } else {
    switch (spec.kind) {
      case HeadKind::linear: {
        b.input_hw = {kCnnInputSide, kCnnInputSide};
        b.activations = uniform_tensor(rng, {spec.units, kMapSide, kMapSide}, 0.1F, 1.0F);
        if (spec.engineered) {
          UnitSet planted;
          b.head = engineered_linear(rng, b.activations, spec.classes, planted);
          demo.planted = planted;
        } else {
          b.head = LinearHead{uniform_tensor(rng, {spec.classes, spec.units}, -1.0F, 1.0F),
                              uniform_vector(rng, spec.classes, -0.5F, 0.5F)};
        }
        break;
      }
      case HeadKind::mlp: {
        b.input_hw = {kCnnInputSide, kCnnInputSide};
        b.activations = uniform_tensor(rng, {spec.units, kMlpMapSide, kMlpMapSide}, 0.0F, 1.0F);
        b.head = random_mlp(rng, b.activations.size(), spec.classes);
        break;
      }
      case HeadKind::vit: {
        const auto side = static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(spec.units))));
        if (side * side != spec.units) {
          throw DomainError("vit demo needs a square patch count, got " + std::to_string(spec.units));
        }
        b.input_hw = {kPatchPixels * side, kPatchPixels * side};
        const float proj = 1.5F * static_cast<float>(std::sqrt(3.0 / kEmbedDim));
        AttentionHead h;
        h.query = uniform_tensor(rng, {kEmbedDim, kEmbedDim}, -proj, proj);
        h.key = uniform_tensor(rng, {kEmbedDim, kEmbedDim}, -proj, proj);
        h.value = uniform_tensor(rng, {kEmbedDim, kEmbedDim}, -proj, proj);
        h.classifier = uniform_tensor(rng, {spec.classes, kEmbedDim}, -1.0F, 1.0F);
        h.classifier_bias = uniform_vector(rng, spec.classes, -0.1F, 0.1F);
        h.cls_token = uniform_vector(rng, kEmbedDim, -1.0F, 1.0F);
        b.activations = uniform_tensor(rng, {spec.units, kEmbedDim}, -1.0F, 1.0F);
        b.head = std::move(h);
        break;
      }
    }
  }

  if (!demo.planted) calibrate_empty_prediction(b);
  const auto logits = masked_logits(b.head, b.activations, UnitSet::full(b.units));
  b.reference_logits = Tensor({logits.size()}, logits);
  validate_bundle(b);
  return demo;
}

std::filesystem::path write_demo(const DemoBundle& demo, const std::filesystem::path& directory) {
  const auto manifest = save_bundle(demo.bundle, directory);
  if (demo.images) save_tensor(*demo.images, directory / "images.npy");
  if (!demo.boxes.empty()) {
    nlohmann::json boxes = nlohmann::json::array();
    for (const auto& box : demo.boxes) boxes.push_back({box.x, box.y, box.w, box.h});
    std::ofstream out(directory / "boxes.json", std::ios::trunc);
    out << nlohmann::json{{"boxes", boxes}}.dump(2) << '\n';
  }
  return manifest;
}

}  // namespace ddcam::cli
