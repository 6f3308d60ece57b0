#pragma once

#include <filesystem>
#include <optional>
#include <ostream>

#include "ddcam/explain.hpp"
#include "demo.hpp"

namespace ddcam::cli {

// Process exit codes.
enum ExitCode : int {
  kSuccess = 0,
  kPropertyViolation = 1,
  kUsageError = 2,
};

// Writes result.json, map.npy and map.pgm into `out_dir`.
int cmd_explain(const std::filesystem::path& manifest, const ExplainConfig& config,
                const std::filesystem::path& out_dir, std::ostream& out, std::ostream& err);

// Re-checks sufficiency, 1-minimality and (M <= 20) brute-force membership.
int cmd_verify(const std::filesystem::path& manifest, const std::filesystem::path& result, std::ostream& out,
               std::ostream& err);

// Writes report.json and report.csv into `out_dir`.
int cmd_evaluate(const std::filesystem::path& manifest, const std::filesystem::path& images,
                 const std::optional<std::filesystem::path>& boxes, const ExplainConfig& config, double tau,
                 const std::filesystem::path& out_dir, std::ostream& out, std::ostream& err);

int cmd_demo(const DemoSpec& spec, const std::filesystem::path& out_dir, std::ostream& out, std::ostream& err);

}  // namespace ddcam::cli
