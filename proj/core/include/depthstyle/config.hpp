#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace depthstyle {

// One stylization job. The JSON config file uses exactly these field names
// as its keys; anything else is rejected so a typo cannot silently fall back
// to a default.
struct JobConfig {
  std::string content;                    // input PNG, or a directory in batch mode
  std::string style;                      // style PNG
  std::string depth;                      // optional precomputed 16-bit depth PNG
  std::string output_dir = "out";
  double alpha = 0.5;                     // heatmap blend fraction, in [0,1]
  int size = 512;                         // longest-side cap applied at load
  double content_weight = 1.0;
  double style_weight = 1e3;
  double tv_weight = 1e-3;
  double kappa = 0.0;                     // depth-mask strength on the content loss
  int iterations = 500;
  double lr = 0.02;
  std::string feature_backend = "tiny";   // "tiny" | "pretrained:<name>"
  std::string depth_backend = "file";     // "file" | "external:<program>"
  std::string pretrained_model;           // ONNX file for pretrained feature backends
  std::vector<std::string> style_layers;  // empty = backend defaults
  std::string content_layer;              // empty = backend default
  std::string init = "image";             // "image" | "noise"
  std::uint64_t seed = 42;                // noise-init generator seed
  int snapshot_interval = 100;            // iterations between snap_<n>.png, 0 = off
  std::string cache_dir;                  // depth cache directory, empty = no cache

  bool operator==(const JobConfig&) const = default;
};

// Overlays the keys present in a JSON document onto cfg.
// Errors: MalformedConfig (unparsable JSON, non-object root, wrong value
// type), UnknownKey (naming the offending key).
void apply_config_json(JobConfig& cfg, const std::string& json_text);

// read_file_bytes + apply_config_json.
void apply_config_file(JobConfig& cfg, const std::filesystem::path& path);

// Serializes every field; applying the result onto a default JobConfig
// reproduces cfg exactly.
std::string config_to_json(const JobConfig& cfg);

// Range and enumeration checks on the merged config (alpha in [0,1],
// size >= 1, nonnegative weights, lr > 0, init mode, ...). Paths are not
// checked here; each command requires the ones it uses.
void validate_job_config(const JobConfig& cfg);

// Replaces cache_dir with $DEPTHSTYLE_CACHE when the variable is set and
// non-empty. Called after file and flag merging, so the environment wins.
void apply_cache_env(JobConfig& cfg);

}  // namespace depthstyle
