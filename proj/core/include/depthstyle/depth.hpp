#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "depthstyle/image_io.hpp"
#include "depthstyle/tensor.hpp"

namespace depthstyle {

// Relative inverse depth (larger = closer to the camera, the MiDaS
// convention), at an arbitrary positive scale. 1xHxW tensor, all values
// finite and >= 0.
class DepthMap {
 public:
  DepthMap() : t_(1, 1, 1) {}
  static DepthMap from_tensor(Tensor3 t);

  const Tensor3& tensor() const { return t_; }
  int height() const { return t_.height(); }
  int width() const { return t_.width(); }

 private:
  explicit DepthMap(Tensor3 t) : t_(std::move(t)) {}
  Tensor3 t_;
};

// Depth confined to [0,1]: min 0 and max 1, or the constant 0.5 degenerate
// form produced from a flat input.
class NormalizedDepth {
 public:
  NormalizedDepth() : t_(1, 1, 1, 0.5f) {}
  static NormalizedDepth from_tensor(Tensor3 t);

  const Tensor3& tensor() const { return t_; }
  int height() const { return t_.height(); }
  int width() const { return t_.width(); }

 private:
  explicit NormalizedDepth(Tensor3 t) : t_(std::move(t)) {}
  Tensor3 t_;
};

// Reads a 16-bit grayscale PNG as v = raw16/65535.
DepthMap load_depth(const std::filesystem::path& path);

// Writes a 16-bit grayscale PNG with raw16 = floor(clamp(v,0,1)*65535 + 0.5).
void save_depth(const NormalizedDepth& d, const std::filesystem::path& path);

// v' = (v - min)/(max - min); a constant input maps to all 0.5.
NormalizedDepth normalize_depth(const DepthMap& d);

// Lowercase hex SHA-256 of (img_bytes || 0x00 || backend_id).
std::string cache_key(const std::vector<std::uint8_t>& img_bytes, const std::string& backend_id);

// A depth estimator. "file" is a placeholder that always reports
// BackendUnavailable (depth must come from load_depth); "external:<program>"
// runs `<program> <input.png> <output.png>` and reads the 16-bit grayscale
// result. Tests may supply in-process estimators through the same interface.
class DepthBackend {
 public:
  virtual ~DepthBackend() = default;
  virtual const std::string& id() const = 0;
  // Produces a depth map for img; dimensions may differ from the input
  // (estimate_depth resizes). Throws BackendUnavailable / BackendFailure.
  virtual DepthMap estimate(const ImageRGB& img) = 0;
};

// Parses a backend id ("file" or "external:<program>"); throws OutOfRange on
// anything else.
std::unique_ptr<DepthBackend> make_depth_backend(const std::string& backend_id);

// Runs the backend (or serves the result from cache) and returns a depth map
// with the same dimensions as img. When cache_dir is non-empty, results are
// stored as <cache_dir>/<sha256>.png with the key derived from the PNG
// encoding of img and the backend id; writes go through a temp file and an
// atomic rename so concurrent jobs never see partial files.
DepthMap estimate_depth(const ImageRGB& img, DepthBackend& backend,
                        const std::filesystem::path& cache_dir = {});

}  // namespace depthstyle
