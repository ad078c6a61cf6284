#include "depthstyle/config.hpp"

#include <cmath>
#include <cstdlib>

#include <json.hpp>

#include "depthstyle/error.hpp"
#include "depthstyle/image_io.hpp"

namespace depthstyle {

namespace {

using nlohmann::json;

[[noreturn]] void bad_type(const std::string& key, const char* expected) {
  raise(ErrorCategory::MalformedConfig,
        "config key \"" + key + "\" must be " + expected);
}

std::string get_string(const json& v, const std::string& key) {
  if (!v.is_string()) bad_type(key, "a string");
  return v.get<std::string>();
}

double get_number(const json& v, const std::string& key) {
  if (!v.is_number()) bad_type(key, "a number");
  return v.get<double>();
}

int get_int(const json& v, const std::string& key) {
  if (!v.is_number_integer()) bad_type(key, "an integer");
  return v.get<int>();
}

std::uint64_t get_u64(const json& v, const std::string& key) {
  if (!v.is_number_unsigned()) bad_type(key, "a nonnegative integer");
  return v.get<std::uint64_t>();
}

std::vector<std::string> get_string_list(const json& v, const std::string& key) {
  if (!v.is_array()) bad_type(key, "an array of strings");
  std::vector<std::string> out;
  for (const auto& item : v) {
    if (!item.is_string()) bad_type(key, "an array of strings");
    out.push_back(item.get<std::string>());
  }
  return out;
}

}  // namespace

void apply_config_json(JobConfig& cfg, const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    raise(ErrorCategory::MalformedConfig, std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) {
    raise(ErrorCategory::MalformedConfig, "config root must be a JSON object");
  }

  for (const auto& [key, value] : doc.items()) {
    if (key == "content") cfg.content = get_string(value, key);
    else if (key == "style") cfg.style = get_string(value, key);
    else if (key == "depth") cfg.depth = get_string(value, key);
    else if (key == "output_dir") cfg.output_dir = get_string(value, key);
    else if (key == "alpha") cfg.alpha = get_number(value, key);
    else if (key == "size") cfg.size = get_int(value, key);
    else if (key == "content_weight") cfg.content_weight = get_number(value, key);
    else if (key == "style_weight") cfg.style_weight = get_number(value, key);
    else if (key == "tv_weight") cfg.tv_weight = get_number(value, key);
    else if (key == "kappa") cfg.kappa = get_number(value, key);
    else if (key == "iterations") cfg.iterations = get_int(value, key);
    else if (key == "lr") cfg.lr = get_number(value, key);
    else if (key == "feature_backend") cfg.feature_backend = get_string(value, key);
    else if (key == "depth_backend") cfg.depth_backend = get_string(value, key);
    else if (key == "pretrained_model") cfg.pretrained_model = get_string(value, key);
    else if (key == "style_layers") cfg.style_layers = get_string_list(value, key);
    else if (key == "content_layer") cfg.content_layer = get_string(value, key);
    else if (key == "init") cfg.init = get_string(value, key);
    else if (key == "seed") cfg.seed = get_u64(value, key);
    else if (key == "snapshot_interval") cfg.snapshot_interval = get_int(value, key);
    else if (key == "cache_dir") cfg.cache_dir = get_string(value, key);
    else raise(ErrorCategory::UnknownKey, "unknown config key \"" + key + "\"");
  }
}

void apply_config_file(JobConfig& cfg, const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = read_file_bytes(path);
  apply_config_json(cfg, std::string(bytes.begin(), bytes.end()));
}

std::string config_to_json(const JobConfig& cfg) {
  json doc;
  doc["content"] = cfg.content;
  doc["style"] = cfg.style;
  doc["depth"] = cfg.depth;
  doc["output_dir"] = cfg.output_dir;
  doc["alpha"] = cfg.alpha;
  doc["size"] = cfg.size;
  doc["content_weight"] = cfg.content_weight;
  doc["style_weight"] = cfg.style_weight;
  doc["tv_weight"] = cfg.tv_weight;
  doc["kappa"] = cfg.kappa;
  doc["iterations"] = cfg.iterations;
  doc["lr"] = cfg.lr;
  doc["feature_backend"] = cfg.feature_backend;
  doc["depth_backend"] = cfg.depth_backend;
  doc["pretrained_model"] = cfg.pretrained_model;
  doc["style_layers"] = cfg.style_layers;
  doc["content_layer"] = cfg.content_layer;
  doc["init"] = cfg.init;
  doc["seed"] = cfg.seed;
  doc["snapshot_interval"] = cfg.snapshot_interval;
  doc["cache_dir"] = cfg.cache_dir;
  return doc.dump(2) + "\n";
}

void validate_job_config(const JobConfig& cfg) {
  if (!std::isfinite(cfg.alpha) || cfg.alpha < 0.0 || cfg.alpha > 1.0) {
    raise(ErrorCategory::OutOfRange, "alpha must lie in [0,1]");
  }
  if (cfg.size < 1) {
    raise(ErrorCategory::OutOfRange, "size must be >= 1");
  }
  const double weights[] = {cfg.content_weight, cfg.style_weight, cfg.tv_weight, cfg.kappa};
  const char* names[] = {"content_weight", "style_weight", "tv_weight", "kappa"};
  for (int i = 0; i < 4; ++i) {
    if (!std::isfinite(weights[i]) || weights[i] < 0.0) {
      raise(ErrorCategory::OutOfRange, std::string(names[i]) + " must be finite and >= 0");
    }
  }
  if (cfg.iterations < 0) {
    raise(ErrorCategory::OutOfRange, "iterations must be >= 0");
  }
  if (!std::isfinite(cfg.lr) || cfg.lr <= 0.0) {
    raise(ErrorCategory::OutOfRange, "lr must be finite and > 0");
  }
  if (cfg.init != "image" && cfg.init != "noise") {
    raise(ErrorCategory::OutOfRange, "init must be \"image\" or \"noise\", got \"" + cfg.init + "\"");
  }
  if (cfg.snapshot_interval < 0) {
    raise(ErrorCategory::OutOfRange, "snapshot_interval must be >= 0");
  }
}

void apply_cache_env(JobConfig& cfg) {
  const char* env = std::getenv("DEPTHSTYLE_CACHE");
  if (env != nullptr && env[0] != '\0') {
    cfg.cache_dir = env;
  }
}

}  // namespace depthstyle
