#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>

#include "armpose/json_io.hpp"

namespace armpose {

class ArmModel;

struct DemoOptions {
  std::uint64_t seed = 7;
  int n = 100;
  unsigned workers = 0;
  /// Seeds per reach target for the two reach runs.
  int reach_seeds = 1;
  /// When set, the dataset, the pseudo-labels and the report are written here.
  std::optional<std::filesystem::path> out_dir;
};

/// synth -> refine -> eval -> reach on a fresh synthetic dataset. The result
/// depends only on the options other than `workers` and `out_dir`.
Json run_demo(const ArmModel& model, const DemoOptions& opts);

/// Table-shaped text rendering of run_demo's result.
std::string format_demo(const Json& demo);

}  // namespace armpose
