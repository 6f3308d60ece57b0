#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "ddcam/manifest.hpp"
#include "ddcam/metrics.hpp"

namespace ddcam::cli {

struct DemoSpec {
  HeadKind kind = HeadKind::linear;
  std::size_t units = 10;
  std::uint64_t seed = 0;
  std::size_t classes = 4;
  // Linear only: plant a set R so that S is sufficient iff R is a subset of S.
  bool engineered = true;
  // > 0: wire the bundle to the toy extractor and also emit this many images.
  std::size_t toy_images = 0;
};

struct DemoBundle {
  ModelBundle bundle;
  std::optional<UnitSet> planted;  // unique 1-minimal set of an engineered linear bundle
  std::optional<Tensor> images;    // B x L x H x W
  std::vector<Box> boxes;          // ground truth shared by all images
};

// Deterministic: the same DemoSpec always yields identical tensors.
DemoBundle make_demo_bundle(const DemoSpec& spec);

// Writes manifest.json and tensors (plus images.npy and boxes.json when present).
std::filesystem::path write_demo(const DemoBundle& demo, const std::filesystem::path& directory);

}  // namespace ddcam::cli
