#include "depthstyle/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <future>
#include <vector>

#include "depthstyle/depth.hpp"
#include "depthstyle/error.hpp"
#include "depthstyle/features.hpp"
#include "depthstyle/heatmap.hpp"
#include "depthstyle/losses.hpp"
#include "depthstyle/optimize.hpp"
#include "depthstyle/resize.hpp"
#include "depthstyle/rng.hpp"

namespace depthstyle {

namespace fs = std::filesystem;

namespace {

void require_path(const std::string& value, const char* name) {
  if (value.empty()) {
    raise(ErrorCategory::InvalidArgument, std::string(name) + " is required");
  }
}

fs::path output_dir(const JobConfig& cfg) {
  require_path(cfg.output_dir, "output_dir");
  fs::create_directories(cfg.output_dir);
  return cfg.output_dir;
}

}  // namespace

ImageRGB load_image_capped(const std::filesystem::path& path, int size_cap) {
  ImageRGB img = load_image(path);
  const int h = img.height();
  const int w = img.width();
  if (std::max(h, w) <= size_cap) {
    return img;
  }
  int nh, nw;
  if (h >= w) {
    nh = size_cap;
    nw = std::max(1, static_cast<int>(std::lround(
                         static_cast<double>(w) * size_cap / static_cast<double>(h))));
  } else {
    nw = size_cap;
    nh = std::max(1, static_cast<int>(std::lround(
                         static_cast<double>(h) * size_cap / static_cast<double>(w))));
  }
  return ImageRGB::from_tensor(resize_bilinear(img.tensor(), nh, nw));
}

void cmd_depth(const JobConfig& cfg) {
  validate_job_config(cfg);
  require_path(cfg.content, "content");
  const fs::path out = output_dir(cfg);
  const ImageRGB img = load_image_capped(cfg.content, cfg.size);

  DepthMap d;
  if (!cfg.depth.empty()) {
    d = load_depth(cfg.depth);
    if (d.height() != img.height() || d.width() != img.width()) {
      d = DepthMap::from_tensor(resize_bilinear(d.tensor(), img.height(), img.width()));
    }
  } else {
    auto backend = make_depth_backend(cfg.depth_backend);
    d = estimate_depth(img, *backend, cfg.cache_dir.empty() ? fs::path{} : fs::path(cfg.cache_dir));
  }
  save_depth(normalize_depth(d), out / "depth.png");
}

void cmd_heatmap(const JobConfig& cfg) {
  validate_job_config(cfg);
  const fs::path out = output_dir(cfg);
  const DepthMap d = load_depth(out / "depth.png");
  save_image(apply_colormap(normalize_depth(d)), out / "heatmap.png");
}

void cmd_blend(const JobConfig& cfg) {
  validate_job_config(cfg);
  require_path(cfg.content, "content");
  const fs::path out = output_dir(cfg);
  const ImageRGB content = load_image_capped(cfg.content, cfg.size);
  const ImageRGB heat = load_image(out / "heatmap.png");
  save_image(blend(content, heat, cfg.alpha), out / "blended.png");
}

void cmd_stylize(const JobConfig& cfg,
                 const std::optional<std::filesystem::path>& input_override) {
  validate_job_config(cfg);
  require_path(cfg.content, "content");
  require_path(cfg.style, "style");
  const fs::path out = output_dir(cfg);
  const ImageRGB content = load_image_capped(cfg.content, cfg.size);
  // The image being stylized: an explicit --input, else the pipeline's
  // blended artifact, else the content image itself (plain stylize mode).
  ImageRGB input;
  if (input_override.has_value()) {
    input = load_image_capped(*input_override, cfg.size);
  } else if (fs::exists(out / "blended.png")) {
    input = load_image_capped(out / "blended.png", cfg.size);
  } else {
    input = content;
  }
  const ImageRGB style = load_image_capped(cfg.style, cfg.size);

  ExtractorSpec spec;
  spec.backend_id = cfg.feature_backend;
  spec.style_layers = cfg.style_layers;
  spec.content_layer = cfg.content_layer;
  spec.pretrained_model = cfg.pretrained_model;
  auto extractor = make_extractor(spec);
  const ResolvedLayers layers = resolve_layers(spec, *extractor);

  LossWeights weights;
  weights.content = cfg.content_weight;
  weights.style = cfg.style_weight;
  weights.tv = cfg.tv_weight;
  weights.kappa = cfg.kappa;

  std::optional<NormalizedDepth> mask;
  if (cfg.kappa > 0.0) {
    const fs::path artifact = out / "depth.png";
    if (fs::exists(artifact)) {
      mask = normalize_depth(load_depth(artifact));
    } else if (!cfg.depth.empty()) {
      mask = normalize_depth(load_depth(cfg.depth));
    } else {
      raise(ErrorCategory::InvalidArgument,
            "kappa > 0 needs a depth map: run the depth stage first or pass --depth");
    }
  }

  // Targets anchor the optimization to the original content image; the
  // blended input is only the starting iterate.
  const StyleTargets targets =
      compute_targets(*extractor, layers, content.tensor(), style.tensor());

  const Tensor3 init = cfg.init == "noise"
                           ? noise_tensor(3, input.height(), input.width(), cfg.seed)
                           : input.tensor();

  OptimizeOptions options;
  options.iterations = cfg.iterations;
  options.lr = cfg.lr;
  options.snapshot_interval = cfg.snapshot_interval;
  options.snapshot_dir = out;
  auto [result, trace] = run_optimization(init, targets, weights, *extractor, layers, mask, options);

  save_image(ImageRGB::from_tensor(result), out / "stylized.png");
  write_trace_csv(trace, out / "trace.csv");
}

namespace {

void pipeline_single(const JobConfig& cfg) {
  cmd_depth(cfg);
  cmd_heatmap(cfg);
  cmd_blend(cfg);
  cmd_stylize(cfg);
}

void pipeline_batch(const JobConfig& cfg) {
  std::vector<fs::path> inputs;
  for (const auto& entry : fs::directory_iterator(cfg.content)) {
    if (entry.is_regular_file() && entry.path().extension() == ".png") {
      inputs.push_back(entry.path());
    }
  }
  if (inputs.empty()) {
    raise(ErrorCategory::InvalidArgument,
          "no .png files in directory " + cfg.content);
  }
  std::sort(inputs.begin(), inputs.end());

  // One job per image; each owns its output subdirectory, so the only
  // shared resource is the depth cache (safe via atomic renames).
  std::vector<std::future<void>> jobs;
  jobs.reserve(inputs.size());
  for (const auto& input : inputs) {
    JobConfig job = cfg;
    job.content = input.string();
    job.output_dir = (fs::path(cfg.output_dir) / input.stem()).string();
    jobs.push_back(std::async(std::launch::async, [job] { pipeline_single(job); }));
  }

  std::exception_ptr first_error;
  for (auto& job : jobs) {
    try {
      job.get();
    } catch (...) {
      if (!first_error) first_error = std::current_exception();
    }
  }
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace

void cmd_pipeline(const JobConfig& cfg) {
  validate_job_config(cfg);
  require_path(cfg.content, "content");
  require_path(cfg.style, "style");
  if (fs::is_directory(cfg.content)) {
    pipeline_batch(cfg);
  } else {
    pipeline_single(cfg);
  }
}

}  // namespace depthstyle
