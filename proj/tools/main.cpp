#include <cstdint>
#include <cstdio>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "depthstyle/config.hpp"
#include "depthstyle/error.hpp"
#include "depthstyle/gradcheck.hpp"
#include "depthstyle/pipeline.hpp"

namespace {

using depthstyle::JobConfig;

// Every job subcommand accepts the full option set plus --config; precedence
// is defaults < config file < flags, with $DEPTHSTYLE_CACHE trumping
// cache_dir at the end.
struct JobOptions {
  JobConfig f;  // parse targets; only fields whose option was seen are used
  std::string config_file;

  CLI::Option* content = nullptr;
  CLI::Option* style = nullptr;
  CLI::Option* depth = nullptr;
  CLI::Option* output_dir = nullptr;
  CLI::Option* alpha = nullptr;
  CLI::Option* size = nullptr;
  CLI::Option* content_weight = nullptr;
  CLI::Option* style_weight = nullptr;
  CLI::Option* tv_weight = nullptr;
  CLI::Option* kappa = nullptr;
  CLI::Option* iterations = nullptr;
  CLI::Option* lr = nullptr;
  CLI::Option* feature_backend = nullptr;
  CLI::Option* depth_backend = nullptr;
  CLI::Option* pretrained_model = nullptr;
  CLI::Option* style_layers = nullptr;
  CLI::Option* content_layer = nullptr;
  CLI::Option* init = nullptr;
  CLI::Option* seed = nullptr;
  CLI::Option* snapshot_interval = nullptr;
  CLI::Option* cache_dir = nullptr;

  void add(CLI::App& app) {
    app.add_option("--config", config_file, "JSON config file");
    content = app.add_option("--content", f.content, "content PNG (or directory in batch mode)");
    style = app.add_option("--style", f.style, "style PNG");
    depth = app.add_option("--depth", f.depth, "precomputed 16-bit depth PNG");
    output_dir = app.add_option("--output_dir", f.output_dir, "artifact directory");
    alpha = app.add_option("--alpha", f.alpha, "heatmap blend fraction in [0,1]");
    size = app.add_option("--size", f.size, "longest-side cap applied at load");
    content_weight = app.add_option("--content_weight", f.content_weight, "content loss weight");
    style_weight = app.add_option("--style_weight", f.style_weight, "style loss weight");
    tv_weight = app.add_option("--tv_weight", f.tv_weight, "total-variation weight");
    kappa = app.add_option("--kappa", f.kappa, "depth-mask strength on the content loss");
    iterations = app.add_option("--iterations", f.iterations, "optimization steps");
    lr = app.add_option("--lr", f.lr, "Adam learning rate");
    feature_backend =
        app.add_option("--feature_backend", f.feature_backend, "tiny | pretrained:<name>");
    depth_backend =
        app.add_option("--depth_backend", f.depth_backend, "file | external:<program>");
    pretrained_model =
        app.add_option("--pretrained_model", f.pretrained_model, "ONNX model for pretrained backends");
    style_layers = app.add_option("--style_layers", f.style_layers, "comma-separated layer names")
                       ->delimiter(',');
    content_layer = app.add_option("--content_layer", f.content_layer, "content target layer");
    init = app.add_option("--init", f.init, "starting iterate: image | noise");
    seed = app.add_option("--seed", f.seed, "noise-init generator seed");
    snapshot_interval =
        app.add_option("--snapshot_interval", f.snapshot_interval, "iterations between snapshots");
    cache_dir = app.add_option("--cache_dir", f.cache_dir, "depth cache directory");
  }

  JobConfig merge() const {
    JobConfig cfg;
    if (!config_file.empty()) {
      depthstyle::apply_config_file(cfg, config_file);
    }
    if (content->count()) cfg.content = f.content;
    if (style->count()) cfg.style = f.style;
    if (depth->count()) cfg.depth = f.depth;
    if (output_dir->count()) cfg.output_dir = f.output_dir;
    if (alpha->count()) cfg.alpha = f.alpha;
    if (size->count()) cfg.size = f.size;
    if (content_weight->count()) cfg.content_weight = f.content_weight;
    if (style_weight->count()) cfg.style_weight = f.style_weight;
    if (tv_weight->count()) cfg.tv_weight = f.tv_weight;
    if (kappa->count()) cfg.kappa = f.kappa;
    if (iterations->count()) cfg.iterations = f.iterations;
    if (lr->count()) cfg.lr = f.lr;
    if (feature_backend->count()) cfg.feature_backend = f.feature_backend;
    if (depth_backend->count()) cfg.depth_backend = f.depth_backend;
    if (pretrained_model->count()) cfg.pretrained_model = f.pretrained_model;
    if (style_layers->count()) cfg.style_layers = f.style_layers;
    if (content_layer->count()) cfg.content_layer = f.content_layer;
    if (init->count()) cfg.init = f.init;
    if (seed->count()) cfg.seed = f.seed;
    if (snapshot_interval->count()) cfg.snapshot_interval = f.snapshot_interval;
    if (cache_dir->count()) cfg.cache_dir = f.cache_dir;
    depthstyle::apply_cache_env(cfg);
    return cfg;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"depth-guided neural style transfer"};
  app.require_subcommand(1);

  std::vector<std::unique_ptr<JobOptions>> all_opts;
  auto add_job_subcommand = [&](const char* name, const char* desc, auto&& run) {
    CLI::App* sub = app.add_subcommand(name, desc);
    auto opts = std::make_unique<JobOptions>();
    opts->add(*sub);
    JobOptions* o = opts.get();
    sub->callback([o, run] { run(o->merge()); });
    all_opts.push_back(std::move(opts));
    return sub;
  };

  add_job_subcommand("pipeline", "depth, heatmap, blend and stylize in order",
                     [](const JobConfig& cfg) { depthstyle::cmd_pipeline(cfg); });
  add_job_subcommand("depth", "write the normalized depth map",
                     [](const JobConfig& cfg) { depthstyle::cmd_depth(cfg); });
  add_job_subcommand("heatmap", "colormap the depth artifact",
                     [](const JobConfig& cfg) { depthstyle::cmd_heatmap(cfg); });
  add_job_subcommand("blend", "mix the content image with its heatmap",
                     [](const JobConfig& cfg) { depthstyle::cmd_blend(cfg); });

  std::string stylize_input;
  CLI::App* stylize = app.add_subcommand("stylize", "optimize the stylized image");
  {
    auto opts = std::make_unique<JobOptions>();
    opts->add(*stylize);
    CLI::Option* input_opt = stylize->add_option(
        "--input", stylize_input, "image to stylize (default <output_dir>/blended.png)");
    JobOptions* o = opts.get();
    stylize->callback([o, input_opt, &stylize_input] {
      std::optional<std::filesystem::path> input;
      if (input_opt->count()) input = stylize_input;
      depthstyle::cmd_stylize(o->merge(), input);
    });
    all_opts.push_back(std::move(opts));
  }

  std::uint64_t gradcheck_seed = 42;
  CLI::App* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient check");
  gradcheck->add_option("--seed", gradcheck_seed, "random data seed");
  gradcheck->callback([&gradcheck_seed] {
    bool ok = true;
    for (const auto& r : depthstyle::run_gradcheck(gradcheck_seed)) {
      std::printf("%s max_rel_err=%.6g samples=%d\n", r.term.c_str(), r.max_rel_error, r.samples);
      ok = ok && r.max_rel_error < depthstyle::kGradcheckTolerance;
    }
    if (!ok) {
      depthstyle::raise(depthstyle::ErrorCategory::OutOfRange,
                        "gradient check exceeded max relative error 1e-3");
    }
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const depthstyle::Error& e) {
    std::fprintf(stderr, "%s\n", e.formatted().c_str());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error:Internal: %s\n", e.what());
    return 1;
  }
  return 0;
}
