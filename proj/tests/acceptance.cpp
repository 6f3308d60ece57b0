#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "commands.hpp"
#include "ddcam/ddmin.hpp"
#include "ddcam/explain.hpp"
#include "ddcam/metrics.hpp"
#include "support/oracles.hpp"
#include "support/temp_dir.hpp"

using namespace ddcam;
using namespace ddcam::cli;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

struct Fixture {
  DemoSpec spec;
  ModelBundle bundle;
  std::filesystem::path manifest;
};

class FixtureFactory {
 public:
  Fixture make(const DemoSpec& spec) {
    const auto dir = root_ / ("fixture-" + std::to_string(count_++));
    std::ostringstream out, err;
    if (cmd_demo(spec, dir, out, err) != kSuccess) throw std::runtime_error("demo failed: " + err.str());
    const auto manifest = dir / "manifest.json";
    return {spec, load_manifest(manifest), manifest};
  }
  const std::filesystem::path& root() const { return root_.path(); }

 private:
  testing::TempDir root_;
  std::size_t count_ = 0;
};

std::string kind_name(HeadKind k) { return to_string(k); }

// 200 instances over all head kinds with M <= 64.
std::vector<DemoSpec> soundness_matrix() {
  std::vector<DemoSpec> specs;
  std::mt19937_64 rng(2024);
  const std::vector<std::size_t> square{4, 9, 16, 25, 36, 49, 64};
  for (std::uint64_t i = 0; i < 200; ++i) {
    DemoSpec s;
    s.seed = 1000 + i;
    s.classes = 2 + rng() % 6;
    switch (i % 3) {
      case 0:
        s.kind = HeadKind::linear;
        s.units = 2 + rng() % 63;
        s.engineered = (i % 2 == 0);
        break;
      case 1:
        s.kind = HeadKind::mlp;
        s.units = 2 + rng() % 63;
        break;
      default:
        s.kind = HeadKind::vit;
        s.units = square[rng() % square.size()];
        break;
    }
    specs.push_back(s);
  }
  return specs;
}

Outcome reference_trace() {
  const UnitSet required(8, {2, 4});
  const auto t0 = Clock::now();
  PredictionOracle oracle(8, [&](const UnitSet& s) -> std::size_t { return required.is_subset_of(s) ? 0 : 1; });
  const auto result = find_minimal_general(oracle);
  const double ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
  std::ostringstream d;
  d << "S* = " << result.selected.to_string() << ", " << std::fixed << std::setprecision(3) << ms << " ms";
  return {result.selected == required && ms < 10.0, d.str()};
}

Outcome brute_force_equivalence(FixtureFactory& factory) {
  const auto t0 = Clock::now();
  std::size_t failures = 0;
  std::size_t instances = 0;
  auto check = [&](const DemoSpec& spec) {
    const auto fx = factory.make(spec);
    auto reference = make_head_oracle(fx.bundle.head, fx.bundle.activations);
    const auto all = brute_force_minimal_sets(reference);
    auto g = make_head_oracle(fx.bundle.head, fx.bundle.activations);
    auto o = make_head_oracle(fx.bundle.head, fx.bundle.activations);
    const auto general = find_minimal_general(g).selected;
    const auto onepass = find_minimal_onepass(o).selected;
    if (std::ranges::find(all, general) == all.end()) ++failures;
    if (std::ranges::find(all, onepass) == all.end()) ++failures;
    ++instances;
  };
  for (std::uint64_t seed = 0; seed < 100; ++seed)
    check({.kind = HeadKind::linear, .units = 10, .seed = seed, .classes = 4, .engineered = seed % 2 == 0});
  for (std::uint64_t seed = 0; seed < 50; ++seed) check({.kind = HeadKind::mlp, .units = 8, .seed = seed});
  const double s = std::chrono::duration<double>(Clock::now() - t0).count();
  std::ostringstream d;
  d << instances << " instances, " << failures << " non-members, " << std::fixed << std::setprecision(2) << s
    << " s";
  return {failures == 0 && s < 60.0, d.str()};
}

struct MatrixStats {
  std::size_t instances = 0;
  std::size_t not_minimal = 0;
  std::size_t onepass_count_violations = 0;
  std::size_t general_bound_violations = 0;
  std::size_t worst_general = 0;
  double worst_general_ratio = 0.0;
  std::size_t weight_violations = 0;
  std::size_t map_violations = 0;
  std::size_t exclusion_violations = 0;
  std::size_t cnn_maps = 0;
  std::size_t empty_results = 0;
  std::size_t full_results = 0;
};

MatrixStats run_matrix(FixtureFactory& factory) {
  MatrixStats st;
  for (const auto& spec : soundness_matrix()) {
    const auto fx = factory.make(spec);
    const auto& b = fx.bundle;
    const std::size_t m = b.units;
    ++st.instances;

    auto g = make_head_oracle(b.head, b.activations);
    const auto general = find_minimal_general(g);
    auto o = make_head_oracle(b.head, b.activations);
    const auto repaired = find_minimal_onepass(o, {.repair = true});
    auto check = make_head_oracle(b.head, b.activations);
    if (general.selected.is_empty()) ++st.empty_results;
    if (general.selected.size() == m) ++st.full_results;
    if (!is_one_minimal(check, general.selected)) ++st.not_minimal;
    if (!is_one_minimal(check, repaired.selected)) ++st.not_minimal;

    auto plain = make_head_oracle(b.head, b.activations);
    if (find_minimal_onepass(plain, {.repair = false}).stats.forward_evaluations != m) ++st.onepass_count_violations;
    if (general.stats.forward_evaluations > 2 * m * m) ++st.general_bound_violations;
    const double ratio = static_cast<double>(general.stats.forward_evaluations) / static_cast<double>(m * m);
    if (ratio > st.worst_general_ratio) {
      st.worst_general_ratio = ratio;
      st.worst_general = general.stats.forward_evaluations;
    }

    const auto result = explain(b);
    if (!result.selected.is_empty()) {
      double sum_delta = 0;
      for (double d : result.delta) sum_delta += d;
      double sum_w = 0;
      for (double w : result.weights) sum_w += w;
      if (sum_delta > 0 && std::abs(sum_w - 1.0) > 1e-6) ++st.weight_violations;
    }
    const auto& map = result.map;
    bool in_range = map.height() == b.input_hw[0] && map.width() == b.input_hw[1];
    for (float v : map.tensor().data()) in_range = in_range && v >= 0.0F && v <= 1.0F;
    if (!in_range) ++st.map_violations;

    if (b.kind() != HeadKind::vit && !result.selected.is_empty()) {
      ++st.cnn_maps;
      ModelBundle perturbed = b;
      std::mt19937_64 rng(spec.seed);
      std::uniform_real_distribution<float> dist(-5.0F, 5.0F);
      for (std::size_t k = 0; k < m; ++k) {
        if (result.selected.contains(k)) continue;
        for (float& v : perturbed.activations.slice(k)) v = dist(rng);
      }
      if (!(render_map(perturbed, result.selected, result.weights) == map)) ++st.exclusion_violations;
    }
  }
  return st;
}

Outcome metric_identities() {
  std::size_t bad = 0;
  const double a1 = adcc(0, 1, 0);
  const double a2 = adcc(0.5, 1, 0.5);
  const bool exact = a1 == 1.0 && std::abs(a2 - 0.6) <= 1e-9;

  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t h = 4 + rng() % 40, w = 4 + rng() % 40;
    BinaryMask mask(h, w);
    const auto density = 2 + rng() % 6;
    for (auto& bit : mask.bits) bit = rng() % density == 0;
    std::vector<Box> boxes;
    const std::size_t nb = 1 + rng() % 3;
    for (std::size_t i = 0; i < nb; ++i) {
      const std::size_t x = rng() % w, y = rng() % h;
      boxes.push_back({x, y, 1 + rng() % (w - x), 1 + rng() % (h - y)});
    }
    const auto s = localization_scores(mask, boxes);
    if (s.iou > std::min(s.precision, s.recall) + 1e-12) ++bad;
  }
  std::size_t region_mismatch = 0;
  for (int trial = 0; trial < 100; ++trial) {
    BinaryMask mask(1 + rng() % 64, 1 + rng() % 64);
    const auto density = 2 + rng() % 5;
    for (auto& bit : mask.bits) bit = rng() % density == 0;
    if (count_regions(mask) != testing::flood_fill_regions(mask)) ++region_mismatch;
  }
  std::ostringstream d;
  d << "adcc(0,1,0)=" << a1 << ", adcc(.5,1,.5)=" << std::setprecision(12) << a2 << ", IoU bound violations "
    << bad << "/1000, region mismatches " << region_mismatch << "/100";
  return {exact && bad == 0 && region_mismatch == 0, d.str()};
}

Outcome linear_additivity(FixtureFactory& factory) {
  double worst_gain = 0.0;
  double worst_delta = 0.0;
  std::mt19937_64 rng(99);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto fx = factory.make({.kind = HeadKind::linear, .units = 32, .seed = seed, .engineered = false});
    const auto& head = std::get<LinearHead>(fx.bundle.head);
    const auto& a = fx.bundle.activations;
    const std::size_t m = fx.bundle.units;
    const std::size_t classes = fx.bundle.num_classes();
    for (int draw = 0; draw < 1000; ++draw) {
      const std::size_t j = rng() % m;
      auto s1 = UnitSet::from_mask(m, rng() & ((1ULL << m) - 1));
      auto s2 = UnitSet::from_mask(m, rng() & ((1ULL << m) - 1));
      s1.erase(j);
      s2.erase(j);
      const auto with1 = masked_logits(head, a, s1.united(UnitSet(m, {j})));
      const auto without1 = masked_logits(head, a, s1);
      const auto with2 = masked_logits(head, a, s2.united(UnitSet(m, {j})));
      const auto without2 = masked_logits(head, a, s2);
      for (std::size_t c = 0; c < classes; ++c) {
        const double g1 = static_cast<double>(with1[c]) - without1[c];
        const double g2 = static_cast<double>(with2[c]) - without2[c];
        worst_gain = std::max(worst_gain, std::abs(g1 - g2));
      }
    }
    for (int draw = 0; draw < 50; ++draw) {
      auto s = UnitSet::from_mask(m, rng() & ((1ULL << m) - 1));
      if (s.is_empty()) s.insert(0);
      const std::size_t target = rng() % classes;
      const auto uw = compute_unit_weights(head, a, s, target);
      const auto members = s.indices();
      for (std::size_t i = 0; i < members.size(); ++i) {
        double mean = 0;
        for (float v : a.slice(members[i])) mean += v;
        mean /= static_cast<double>(a.slice_size());
        worst_delta = std::max(worst_delta, std::abs(uw.delta[i] - head.weight.at(target, members[i]) * mean));
      }
    }
  }
  std::ostringstream d;
  d << std::scientific << std::setprecision(2) << "max gain deviation " << worst_gain << ", max delta error "
    << worst_delta << " over 10 heads x 1000 draws";
  return {worst_gain <= 1e-5 && worst_delta <= 1e-5, d.str()};
}

Outcome determinism(FixtureFactory& factory) {
  std::size_t runs = 0;
  std::size_t mismatches = 0;
  std::size_t unverified = 0;
  for (auto kind : {HeadKind::linear, HeadKind::mlp, HeadKind::vit}) {
    for (std::size_t units : {9u, 16u, 36u, 64u}) {
      for (std::uint64_t seed = 0; seed < 3; ++seed) {
        const auto fx = factory.make({.kind = kind, .units = units, .seed = seed});
        for (auto mode : {SearchMode::general, SearchMode::onepass, SearchMode::automatic}) {
          const auto base = factory.root() / ("det-" + std::to_string(runs++));
          std::ostringstream out, err;
          const int a = cmd_explain(fx.manifest, {.mode = mode, .parallel = false}, base / "seq", out, err);
          const int b = cmd_explain(fx.manifest, {.mode = mode, .parallel = true}, base / "par", out, err);
          auto ja = testing::read_json(base / "seq" / "result.json");
          auto jb = testing::read_json(base / "par" / "result.json");
          ja.erase("wall_time_ms");
          jb.erase("wall_time_ms");
          if (a != kSuccess || b != kSuccess || ja != jb) ++mismatches;
          if (cmd_verify(fx.manifest, base / "seq" / "result.json", out, err) != kSuccess) ++unverified;
        }
      }
    }
  }
  std::ostringstream d;
  d << runs << " explain pairs, " << mismatches << " JSON mismatches, " << unverified << " failed verification";
  return {mismatches == 0 && unverified == 0, d.str()};
}

}  // namespace

int main() {
  FixtureFactory factory;
  std::size_t failed = 0;
  auto report = [&](const std::string& name, const Outcome& o) {
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << name << "  (" << o.detail << ")\n" << std::flush;
    if (!o.pass) ++failed;
  };
  auto guarded = [&](const std::string& name, const std::function<Outcome()>& fn) {
    try {
      report(name, fn());
    } catch (const std::exception& e) {
      report(name, {false, std::string("exception: ") + e.what()});
    }
  };

  guarded("reference trace", reference_trace);
  guarded("brute-force equivalence", [&] { return brute_force_equivalence(factory); });

  MatrixStats st;
  bool matrix_ok = true;
  try {
    st = run_matrix(factory);
  } catch (const std::exception& e) {
    matrix_ok = false;
    report("instance matrix", {false, std::string("exception: ") + e.what()});
  }
  if (matrix_ok) {
    {
      std::ostringstream d;
      d << st.instances << " instances x 2 modes, " << st.not_minimal << " not 1-minimal; general S* empty on "
        << st.empty_results << ", full on " << st.full_results;
      report("1-minimality soundness", {st.not_minimal == 0, d.str()});
    }
    {
      std::ostringstream d;
      d << st.onepass_count_violations << " one-pass count violations, " << st.general_bound_violations
        << " general bound violations, worst general " << st.worst_general << " evals ("
        << std::setprecision(3) << st.worst_general_ratio << " M^2)";
      report("call-count contracts",
             {st.onepass_count_violations == 0 && st.general_bound_violations == 0, d.str()});
    }
    {
      std::ostringstream d;
      d << st.weight_violations << " weight-sum violations, " << st.map_violations << " map range/size violations, "
        << st.exclusion_violations << "/" << st.cnn_maps << " CNN maps changed by excluded units";
      report("weight and map contracts",
             {st.weight_violations == 0 && st.map_violations == 0 && st.exclusion_violations == 0, d.str()});
    }
  }
  guarded("metric identities", metric_identities);
  guarded("linear-head additivity", [&] { return linear_additivity(factory); });
  guarded("determinism", [&] { return determinism(factory); });

  std::cout << (failed == 0 ? "all acceptance criteria passed" : std::to_string(failed) + " criteria failed") << '\n';
  return failed == 0 ? 0 : 1;
}
