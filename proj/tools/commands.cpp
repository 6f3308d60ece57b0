#include "commands.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "ddcam/error.hpp"
#include "evaluate.hpp"

namespace ddcam::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Maps library exceptions onto the exit-code contract.
template <typename Fn>
int guarded(std::ostream& err, Fn&& body) {
  try {
    return body();
  } catch (const NondeterminismError& e) {
    err << "error: " << e.what() << '\n';
    return kPropertyViolation;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const json::exception& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  }
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": invalid JSON (" + e.what() + ")");
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
}

}  // namespace

int cmd_explain(const fs::path& manifest, const ExplainConfig& config, const fs::path& out_dir, std::ostream& out,
                std::ostream& err) {
  return guarded(err, [&] {
    const auto bundle = load_manifest(manifest);
    if (auto gap = reference_logit_error(bundle); gap && *gap > 1e-3) {
      err << "warning: logits differ from the bundled reference logits by " << *gap << '\n';
    }
    const auto result = explain(bundle, config);
    for (const auto& w : result.warnings) err << "warning: " << w << '\n';

    fs::create_directories(out_dir);
    save_tensor(result.map.tensor(), out_dir / "map.npy");
    save_pgm(result.map, out_dir / "map.pgm");
    write_text(out_dir / "result.json", result_to_json(result, "map.npy", "map.pgm", bundle.labels).dump(2) + "\n");

    out << "mode: " << to_string(result.mode) << '\n'
        << "target class: " << result.target_class << '\n'
        << "S* = " << result.selected.to_string() << '\n'
        << "|S*| = " << result.selected.size() << " of " << result.units << '\n'
        << "forward evaluations: " << result.stats.forward_evaluations << '\n'
        << "result: " << (out_dir / "result.json").string() << '\n';
    return static_cast<int>(kSuccess);
  });
}

int cmd_verify(const fs::path& manifest, const fs::path& result_path, std::ostream& out, std::ostream& err) {
  return guarded(err, [&]() -> int {
    const auto bundle = load_manifest(manifest);
    const auto stored = stored_result_from_json(read_json(result_path));
    auto oracle = make_head_oracle(bundle.head, bundle.activations);

    if (stored.target_class != oracle.target()) {
      err << "violation: target class " << stored.target_class << " is not the unmasked prediction "
          << oracle.target() << '\n';
      return kPropertyViolation;
    }
    UnitSet selected(oracle.universe());
    for (auto i : stored.selected_units) {
      if (i >= oracle.universe()) {
        err << "violation: unit " << i << " out of range for " << oracle.universe() << " units\n";
        return kPropertyViolation;
      }
      selected.insert(i);
    }
    if (!is_sufficient(oracle, selected)) {
      err << "violation: selected set " << selected.to_string() << " is not sufficient\n";
      return kPropertyViolation;
    }
    if (!is_one_minimal(oracle, selected)) {
      err << "violation: selected set " << selected.to_string() << " is not 1-minimal\n";
      return kPropertyViolation;
    }
    out << "sufficient: yes\n1-minimal: yes\n";
    if (oracle.universe() <= kBruteForceMaxUnits) {
      const auto all = brute_force_minimal_sets(oracle);
      if (std::ranges::find(all, selected) == all.end()) {
        err << "violation: selected set is not among the " << all.size() << " brute-force 1-minimal sets\n";
        return kPropertyViolation;
      }
      out << "brute force: member of " << all.size() << " 1-minimal set(s)\n";
    }
    return kSuccess;
  });
}

int cmd_evaluate(const fs::path& manifest, const fs::path& images, const std::optional<fs::path>& boxes,
                 const ExplainConfig& config, double tau, const fs::path& out_dir, std::ostream& out,
                 std::ostream& err) {
  return guarded(err, [&] {
    const auto bundle = load_manifest(manifest);
    if (images.empty()) throw IoError("evaluation needs --images");
    const Tensor batch = load_tensor(images);
    const std::vector<Box> gt = boxes ? parse_boxes(read_json(*boxes)) : std::vector<Box>{};
    const auto report = evaluate_images(bundle, batch, gt, config, tau);

    fs::create_directories(out_dir);
    write_text(out_dir / "report.json", report_to_json(report).dump(2) + "\n");
    const auto csv = report_to_csv(report);
    write_text(out_dir / "report.csv", csv);
    out << csv;
    return static_cast<int>(kSuccess);
  });
}

int cmd_demo(const DemoSpec& spec, const fs::path& out_dir, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto demo = make_demo_bundle(spec);
    const auto path = write_demo(demo, out_dir);
    out << "manifest: " << path.string() << '\n';
    if (demo.planted) out << "planted minimal set: " << demo.planted->to_string() << '\n';
    return static_cast<int>(kSuccess);
  });
}

}  // namespace ddcam::cli
