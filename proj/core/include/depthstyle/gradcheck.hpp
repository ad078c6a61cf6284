#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace depthstyle {

struct GradcheckResult {
  std::string term;      // "content" | "style" | "tv" | "total"
  double max_rel_error;  // worst sampled coordinate
  int samples;           // coordinates checked
};

// Compares analytic gradients against central finite differences (h = 1e-3,
// double accumulation) on seeded random data. The feature-level terms check
// every coordinate of small random tensors; "total" runs the full objective
// on a 3x8x8 content/style/init triple with weights (1, 1e3, 1e-3) through
// the reference extractor at 50 sampled pixels. Coordinates where both
// gradients are below 1e-6 in magnitude count as zero error. Deterministic
// for a fixed seed.
std::vector<GradcheckResult> run_gradcheck(std::uint64_t seed);

// Pass threshold shared by the CLI subcommand and the acceptance run.
inline constexpr double kGradcheckTolerance = 1e-3;

}  // namespace depthstyle
