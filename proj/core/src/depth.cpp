#include "depthstyle/depth.hpp"

#include <openssl/evp.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cstdio>
#include <random>

#include "depthstyle/error.hpp"
#include "depthstyle/resize.hpp"

namespace depthstyle {

DepthMap DepthMap::from_tensor(Tensor3 t) {
  if (t.channels() != 1) {
    raise(ErrorCategory::ShapeMismatch,
          "DepthMap requires a single channel, got " + t.shape_string());
  }
  t.check_finite("DepthMap");
  for (float v : t.values()) {
    if (v < 0.0f) {
      raise(ErrorCategory::OutOfRange, "DepthMap value below zero");
    }
  }
  return DepthMap(std::move(t));
}

NormalizedDepth NormalizedDepth::from_tensor(Tensor3 t) {
  if (t.channels() != 1) {
    raise(ErrorCategory::ShapeMismatch,
          "NormalizedDepth requires a single channel, got " + t.shape_string());
  }
  t.check_finite("NormalizedDepth");
  for (float v : t.values()) {
    if (v < 0.0f || v > 1.0f) {
      raise(ErrorCategory::OutOfRange, "NormalizedDepth value outside [0,1]");
    }
  }
  return NormalizedDepth(std::move(t));
}

DepthMap load_depth(const std::filesystem::path& path) {
  return DepthMap::from_tensor(load_gray16(path));
}

void save_depth(const NormalizedDepth& d, const std::filesystem::path& path) {
  save_gray16(d.tensor(), path);
}

NormalizedDepth normalize_depth(const DepthMap& d) {
  const Tensor3& t = d.tensor();
  float lo = t.values()[0];
  float hi = t.values()[0];
  for (float v : t.values()) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  Tensor3 out(1, t.height(), t.width());
  if (lo == hi) {
    std::fill(out.values().begin(), out.values().end(), 0.5f);
  } else {
    const double range = static_cast<double>(hi) - static_cast<double>(lo);
    for (std::size_t i = 0; i < t.size(); ++i) {
      double v = (static_cast<double>(t.values()[i]) - lo) / range;
      out.values()[i] = static_cast<float>(std::clamp(v, 0.0, 1.0));
    }
  }
  return NormalizedDepth::from_tensor(std::move(out));
}

std::string cache_key(const std::vector<std::uint8_t>& img_bytes, const std::string& backend_id) {
  std::vector<std::uint8_t> buf;
  buf.reserve(img_bytes.size() + 1 + backend_id.size());
  buf.insert(buf.end(), img_bytes.begin(), img_bytes.end());
  buf.push_back(0x00);
  buf.insert(buf.end(), backend_id.begin(), backend_id.end());

  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int digest_len = 0;
  if (EVP_Digest(buf.data(), buf.size(), digest, &digest_len, EVP_sha256(), nullptr) != 1) {
    raise(ErrorCategory::Internal, "SHA-256 computation failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(digest_len * 2);
  for (unsigned int i = 0; i < digest_len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xf]);
  }
  return out;
}

namespace {

class FileBackend final : public DepthBackend {
 public:
  const std::string& id() const override { return id_; }
  DepthMap estimate(const ImageRGB&) override {
    raise(ErrorCategory::BackendUnavailable,
          "depth backend \"file\" cannot estimate depth; supply a depth map file "
          "(load_depth / --depth) or configure an \"external:<program>\" backend");
  }

 private:
  std::string id_ = "file";
};

class ExternalBackend final : public DepthBackend {
 public:
  explicit ExternalBackend(std::string program)
      : program_(std::move(program)), id_("external:" + program_) {}

  const std::string& id() const override { return id_; }

  DepthMap estimate(const ImageRGB& img) override {
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() /
                   ("depthstyle-backend-" + std::to_string(::getpid()) + "-" +
                    std::to_string(counter_++));
    fs::create_directories(dir);
    fs::path input = dir / "input.png";
    fs::path output = dir / "output.png";
    save_image(img, input);

    int status = run_program(input, output);
    if (status != 0) {
      fs::remove_all(dir);
      raise(ErrorCategory::BackendFailure,
            "depth backend \"" + id_ + "\" exited with status " + std::to_string(status));
    }
    DepthMap result = [&] {
      try {
        return load_depth(output);
      } catch (const Error& e) {
        raise(ErrorCategory::BackendFailure,
              "depth backend \"" + id_ + "\" produced unreadable output: " + e.what());
      }
    }();
    fs::remove_all(dir);
    return result;
  }

 private:
  int run_program(const std::filesystem::path& input, const std::filesystem::path& output) {
    pid_t pid = ::fork();
    if (pid < 0) {
      raise(ErrorCategory::Internal, "fork failed");
    }
    if (pid == 0) {
      ::execl(program_.c_str(), program_.c_str(), input.c_str(), output.c_str(),
              static_cast<char*>(nullptr));
      _exit(127);  // exec failed: program missing or not executable
    }
    int status = 0;
    if (::waitpid(pid, &status, 0) < 0) {
      raise(ErrorCategory::Internal, "waitpid failed");
    }
    if (WIFEXITED(status)) {
      int code = WEXITSTATUS(status);
      if (code == 127) {
        raise(ErrorCategory::BackendUnavailable,
              "depth backend program not found or not executable: " + program_);
      }
      return code;
    }
    raise(ErrorCategory::BackendFailure, "depth backend terminated abnormally");
  }

  std::string program_;
  std::string id_;
  int counter_ = 0;
};

}  // namespace

std::unique_ptr<DepthBackend> make_depth_backend(const std::string& backend_id) {
  if (backend_id == "file") {
    return std::make_unique<FileBackend>();
  }
  if (backend_id.rfind("external:", 0) == 0 && backend_id.size() > 9) {
    return std::make_unique<ExternalBackend>(backend_id.substr(9));
  }
  raise(ErrorCategory::OutOfRange,
        "depth_backend must be \"file\" or \"external:<program>\", got \"" + backend_id + "\"");
}

DepthMap estimate_depth(const ImageRGB& img, DepthBackend& backend,
                        const std::filesystem::path& cache_dir) {
  namespace fs = std::filesystem;
  fs::path cache_file;
  if (!cache_dir.empty()) {
    const std::string key = cache_key(encode_image(img), backend.id());
    cache_file = cache_dir / (key + ".png");
    if (fs::exists(cache_file)) {
      return load_depth(cache_file);
    }
  }

  DepthMap d = backend.estimate(img);
  if (d.height() != img.height() || d.width() != img.width()) {
    d = DepthMap::from_tensor(resize_bilinear(d.tensor(), img.height(), img.width()));
  }

  if (!cache_file.empty()) {
    fs::create_directories(cache_dir);
    // Temp file + rename keeps concurrent readers away from partial files.
    fs::path tmp = cache_file;
    tmp += ".tmp" + std::to_string(::getpid());
    Tensor3 clamped = d.tensor();
    for (float& v : clamped.values()) {
      v = std::min(v, 1.0f);
    }
    save_gray16(clamped, tmp);
    std::error_code ec;
    fs::rename(tmp, cache_file, ec);
    if (ec) {
      fs::remove(tmp, ec);
    }
    // Serve the cache file's 16-bit quantized values right away so a later
    // cache hit returns bitwise-identical data to this first call.
    return load_depth(cache_file);
  }
  return d;
}

}  // namespace depthstyle
