#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "depthstyle/losses.hpp"
#include "depthstyle/tensor.hpp"

namespace depthstyle {

// Adam moments and hyperparameters for one pixel-space run. t counts
// completed steps; m and v are shaped like the optimized image.
struct AdamState {
  Tensor3 m;
  Tensor3 v;
  long long t = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double lr = 0.02;
};

// Fresh zero-moment state for an image of the given shape. Throws OutOfRange
// on hyperparameters outside beta in [0,1), epsilon > 0, lr >= 0.
AdamState make_adam_state(int channels, int height, int width, double lr = 0.02,
                          double beta1 = 0.9, double beta2 = 0.999, double epsilon = 1e-8);

// One Adam update with bias correction, then projection to [0,1]:
//   m' = b1*m + (1-b1)*g;  v' = b2*v + (1-b2)*g^2;  t' = t+1
//   x' = clamp(x - lr * (m'/(1-b1^t')) / (sqrt(v'/(1-b2^t')) + eps), 0, 1)
// Mutates state; returns the projected iterate. Zero gradient with fresh
// state and lr = 0 are both exact identities on x.
Tensor3 adam_step(const Tensor3& x, const Tensor3& g, AdamState& state);

// Per-iteration record of one optimization run.
struct RunTrace {
  std::vector<LossReport> reports;          // one per executed iteration
  std::vector<int> snapshot_iterations;     // 1-based step counts when snapshots were written
  double seconds = 0.0;
};

struct OptimizeOptions {
  int iterations = 500;
  double lr = 0.02;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  // Writes snap_<step>.png into snapshot_dir every snapshot_interval steps
  // (1-based); 0 or an empty dir disables snapshotting.
  int snapshot_interval = 100;
  std::filesystem::path snapshot_dir;
  // Optional observer, called after each step with the 0-based iteration
  // index and its loss report.
  std::function<void(int, const LossReport&)> on_iteration;
};

// Runs iterations of total_loss + adam_step starting from init (a 3xHxW
// image in [0,1]). iterations = 0 returns init unchanged with an empty
// trace. Identical inputs produce bitwise-identical outputs and traces.
std::pair<Tensor3, RunTrace> run_optimization(const Tensor3& init, const StyleTargets& targets,
                                              const LossWeights& weights,
                                              const FeatureExtractor& extractor,
                                              const ResolvedLayers& layers,
                                              const std::optional<NormalizedDepth>& mask,
                                              const OptimizeOptions& options);

// trace.csv: header `iter,total,content,style,tv`, one row per iteration
// (iter is the 0-based index), every value printed with 9 significant digits.
void write_trace_csv(const RunTrace& trace, const std::filesystem::path& path);
std::string trace_csv_string(const RunTrace& trace);

}  // namespace depthstyle
