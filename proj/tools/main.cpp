#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "commands.hpp"

namespace {

void add_search_flags(CLI::App& cmd, std::string& mode, std::size_t& n_init, bool& no_repair, bool& parallel) {
  cmd.add_option("--mode", mode, "Search strategy: general, onepass or auto (onepass for linear heads)")
      ->check(CLI::IsMember({"general", "onepass", "auto"}))
      ->capture_default_str();
  cmd.add_option("--n-init", n_init, "Initial granularity for general delta debugging")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd.add_flag("--no-repair", no_repair, "One-pass search without the repair sweeps");
  cmd.add_flag("--parallel", parallel, "Evaluate the complements of each round concurrently");
}

}  // namespace

int main(int argc, char** argv) {
  using namespace ddcam;
  CLI::App app{"ddcam: minimal sufficient saliency explanations by delta debugging"};
  app.require_subcommand(1);

  std::string mode = "auto";
  std::size_t n_init = 2;
  bool no_repair = false;
  bool parallel = false;
  std::string baseline = "selected";
  std::string patch_scalar = "weight";
  bool verify_memo = false;
  std::string out_dir = "ddcam_out";
  double tau = 0.5;

  auto* explain = app.add_subcommand("explain", "Find S*, weights and the saliency map for a model bundle");
  std::string manifest;
  explain->add_option("manifest", manifest, "Bundle manifest JSON")->required();
  add_search_flags(*explain, mode, n_init, no_repair, parallel);
  explain->add_option("--baseline", baseline, "Logit baseline for drops: selected or full")
      ->check(CLI::IsMember({"selected", "full"}))
      ->capture_default_str();
  explain->add_option("--patch-scalar", patch_scalar, "ViT grid value: weight or norm (w_n * ||P_n||)")
      ->check(CLI::IsMember({"weight", "norm"}))
      ->capture_default_str();
  explain->add_flag("--verify-memo", verify_memo, "Re-evaluate memo hits to detect a nondeterministic head");
  explain->add_option("--out", out_dir, "Output directory")->capture_default_str();

  auto* verify = app.add_subcommand("verify", "Check that a result is sufficient and 1-minimal");
  std::string result_path;
  verify->add_option("manifest", manifest, "Bundle manifest JSON")->required();
  verify->add_option("result", result_path, "result.json written by explain")->required();

  auto* evaluate = app.add_subcommand("evaluate", "Faithfulness and localization metrics on toy-extractor bundles");
  std::string images;
  std::string boxes;
  evaluate->add_option("manifest", manifest, "Bundle manifest JSON (with a toy extractor)")->required();
  evaluate->add_option("--images", images, "Image NPY, L x H x W or B x L x H x W")->required();
  evaluate->add_option("--boxes", boxes, "Ground-truth boxes JSON {\"boxes\": [[x, y, w, h], ...]}");
  evaluate->add_option("--tau", tau, "Binarization threshold as a fraction of the map maximum")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  add_search_flags(*evaluate, mode, n_init, no_repair, parallel);
  evaluate->add_option("--out", out_dir, "Output directory")->capture_default_str();

  auto* demo = app.add_subcommand("demo", "Generate a seeded demo bundle");
  cli::DemoSpec spec;
  std::string kind = "linear";
  bool random_weights = false;
  demo->add_option("--kind", kind, "linear, mlp or vit")
      ->check(CLI::IsMember({"linear", "mlp", "vit"}))
      ->capture_default_str();
  demo->add_option("--units", spec.units, "Unit count M (a square number for vit)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  demo->add_option("--seed", spec.seed, "PRNG seed")->capture_default_str();
  demo->add_option("--classes", spec.classes, "Number of classes")->check(CLI::Range(2, 1000))->capture_default_str();
  demo->add_flag("--random-weights", random_weights, "Linear: random head instead of a planted minimal set");
  demo->add_option("--toy-images", spec.toy_images, "Wire to the toy extractor and emit this many images");
  demo->add_option("--out", out_dir, "Output directory")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return cli::kUsageError;
  }

  ExplainConfig config;
  try {
    config.mode = parse_search_mode(mode);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cli::kUsageError;
  }
  config.initial_granularity = n_init;
  config.repair = !no_repair;
  config.parallel = parallel;
  config.verify_memo_hits = verify_memo;
  config.baseline = baseline == "full" ? DropBaseline::full : DropBaseline::selected;
  config.patch_scalar = patch_scalar == "norm" ? PatchScalar::weight_times_norm : PatchScalar::weight;

  if (*explain) return cli::cmd_explain(manifest, config, out_dir, std::cout, std::cerr);
  if (*verify) return cli::cmd_verify(manifest, result_path, std::cout, std::cerr);
  if (*evaluate) {
    std::optional<std::filesystem::path> box_path;
    if (!boxes.empty()) box_path = boxes;
    return cli::cmd_evaluate(manifest, images, box_path, config, tau, out_dir, std::cout, std::cerr);
  }
  spec.kind = parse_head_kind(kind);
  spec.engineered = !random_weights;
  return cli::cmd_demo(spec, out_dir, std::cout, std::cerr);
}
