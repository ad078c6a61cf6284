#include "depthstyle/optimize.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include "depthstyle/error.hpp"
#include "depthstyle/image_io.hpp"

namespace depthstyle {

AdamState make_adam_state(int channels, int height, int width, double lr, double beta1,
                          double beta2, double epsilon) {
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    raise(ErrorCategory::OutOfRange, "Adam betas must lie in [0,1)");
  }
  if (!(epsilon > 0.0)) {
    raise(ErrorCategory::OutOfRange, "Adam epsilon must be > 0");
  }
  if (!std::isfinite(lr) || lr < 0.0) {
    raise(ErrorCategory::OutOfRange, "learning rate must be finite and >= 0");
  }
  AdamState s;
  s.m = Tensor3(channels, height, width);
  s.v = Tensor3(channels, height, width);
  s.beta1 = beta1;
  s.beta2 = beta2;
  s.epsilon = epsilon;
  s.lr = lr;
  return s;
}

Tensor3 adam_step(const Tensor3& x, const Tensor3& g, AdamState& state) {
  require_same_shape(x, g, "adam step");
  require_same_shape(x, state.m, "adam state");

  state.t += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));

  Tensor3 out(x.channels(), x.height(), x.width());
  std::span<const float> xv = x.values();
  std::span<const float> gv = g.values();
  std::span<float> mv = state.m.values();
  std::span<float> vv = state.v.values();
  std::span<float> ov = out.values();
  for (std::size_t i = 0; i < xv.size(); ++i) {
    const double gi = gv[i];
    const double mi = state.beta1 * mv[i] + (1.0 - state.beta1) * gi;
    const double vi = state.beta2 * vv[i] + (1.0 - state.beta2) * gi * gi;
    mv[i] = static_cast<float>(mi);
    vv[i] = static_cast<float>(vi);
    const double step = state.lr * (mi / bc1) / (std::sqrt(vi / bc2) + state.epsilon);
    ov[i] = std::clamp(static_cast<float>(xv[i] - step), 0.0f, 1.0f);
  }
  return out;
}

std::pair<Tensor3, RunTrace> run_optimization(const Tensor3& init, const StyleTargets& targets,
                                              const LossWeights& weights,
                                              const FeatureExtractor& extractor,
                                              const ResolvedLayers& layers,
                                              const std::optional<NormalizedDepth>& mask,
                                              const OptimizeOptions& options) {
  if (options.iterations < 0) {
    raise(ErrorCategory::OutOfRange, "iterations must be >= 0");
  }
  const auto start = std::chrono::steady_clock::now();

  RunTrace trace;
  trace.reports.reserve(static_cast<std::size_t>(options.iterations));
  Tensor3 x = init;
  AdamState state = make_adam_state(init.channels(), init.height(), init.width(), options.lr,
                                    options.beta1, options.beta2, options.epsilon);
  const bool snapshots = options.snapshot_interval > 0 && !options.snapshot_dir.empty();

  for (int i = 0; i < options.iterations; ++i) {
    auto [report, grad] = total_loss(x, targets, weights, extractor, layers, mask);
    trace.reports.push_back(report);
    x = adam_step(x, grad, state);
    if (options.on_iteration) {
      options.on_iteration(i, report);
    }
    const int step = i + 1;
    if (snapshots && step % options.snapshot_interval == 0) {
      save_image(ImageRGB::from_tensor(x),
                 options.snapshot_dir / ("snap_" + std::to_string(step) + ".png"));
      trace.snapshot_iterations.push_back(step);
    }
  }

  trace.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {std::move(x), std::move(trace)};
}

std::string trace_csv_string(const RunTrace& trace) {
  std::string out = "iter,total,content,style,tv\n";
  char line[160];
  for (std::size_t i = 0; i < trace.reports.size(); ++i) {
    const LossReport& r = trace.reports[i];
    std::snprintf(line, sizeof(line), "%zu,%.9g,%.9g,%.9g,%.9g\n", i, r.total, r.content,
                  r.style, r.tv);
    out += line;
  }
  return out;
}

void write_trace_csv(const RunTrace& trace, const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) {
    raise(ErrorCategory::IoError, "cannot open " + path.string() + " for writing");
  }
  f << trace_csv_string(trace);
  if (!f.good()) {
    raise(ErrorCategory::IoError, "failed writing " + path.string());
  }
}

}  // namespace depthstyle
