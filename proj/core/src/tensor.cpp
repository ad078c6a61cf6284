#include "depthstyle/tensor.hpp"

#include <cmath>
#include <cstring>

#include "depthstyle/error.hpp"

namespace depthstyle {

const char* to_string(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::FileNotFound: return "FileNotFound";
    case ErrorCategory::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorCategory::CorruptFile: return "CorruptFile";
    case ErrorCategory::IoError: return "IoError";
    case ErrorCategory::BackendUnavailable: return "BackendUnavailable";
    case ErrorCategory::BackendFailure: return "BackendFailure";
    case ErrorCategory::ShapeMismatch: return "ShapeMismatch";
    case ErrorCategory::DimensionMismatch: return "DimensionMismatch";
    case ErrorCategory::UnknownLayer: return "UnknownLayer";
    case ErrorCategory::LayerMismatch: return "LayerMismatch";
    case ErrorCategory::ChannelMismatch: return "ChannelMismatch";
    case ErrorCategory::MalformedConfig: return "MalformedConfig";
    case ErrorCategory::UnknownKey: return "UnknownKey";
    case ErrorCategory::OutOfRange: return "OutOfRange";
    case ErrorCategory::InvalidArgument: return "InvalidArgument";
    case ErrorCategory::Internal: return "Internal";
  }
  return "Internal";
}

std::string Error::formatted() const {
  return std::string("error:") + to_string(category_) + ": " + what();
}

Tensor3::Tensor3(int channels, int height, int width, float fill)
    : channels_(channels), height_(height), width_(width) {
  if (channels < 1 || height < 1 || width < 1) {
    raise(ErrorCategory::InvalidArgument,
          "tensor dimensions must all be >= 1, got " + std::to_string(channels) +
              "x" + std::to_string(height) + "x" + std::to_string(width));
  }
  data_.assign(static_cast<std::size_t>(channels) * height * width, fill);
}

Tensor3 Tensor3::from_data(int channels, int height, int width, std::vector<float> data) {
  Tensor3 t(channels, height, width);
  if (data.size() != t.size()) {
    raise(ErrorCategory::ShapeMismatch,
          "data length " + std::to_string(data.size()) + " does not match " +
              t.shape_string());
  }
  t.data_ = std::move(data);
  t.check_finite("Tensor3::from_data");
  return t;
}

bool Tensor3::bitwise_equal(const Tensor3& other) const {
  return same_shape(other) &&
         std::memcmp(data_.data(), other.data_.data(), data_.size() * sizeof(float)) == 0;
}

std::string Tensor3::shape_string() const {
  return std::to_string(channels_) + "x" + std::to_string(height_) + "x" +
         std::to_string(width_);
}

void Tensor3::check_finite(const char* context) const {
  for (float v : data_) {
    if (!std::isfinite(v)) {
      raise(ErrorCategory::InvalidArgument,
            std::string(context) + ": tensor contains a non-finite value");
    }
  }
}

void require_same_shape(const Tensor3& a, const Tensor3& b, const char* context) {
  if (!a.same_shape(b)) {
    raise(ErrorCategory::ShapeMismatch,
          std::string(context) + ": shape " + a.shape_string() + " vs " +
              b.shape_string());
  }
}

}  // namespace depthstyle
