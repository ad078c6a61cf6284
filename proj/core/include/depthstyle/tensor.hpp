#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace depthstyle {

// Dense rank-3 array of single-precision values, laid out row-major as
// channels x height x width: index = (c*H + y)*W + x. This is the carrier
// for images, feature maps and pixel gradients throughout the library.
//
// Invariants enforced at construction and by check_finite():
//   - every dimension >= 1
//   - data length == channels*height*width
//   - all values finite
class Tensor3 {
 public:
  Tensor3() : channels_(1), height_(1), width_(1), data_(1, 0.0f) {}
  Tensor3(int channels, int height, int width, float fill = 0.0f);

  // Takes ownership of `data`; throws ShapeMismatch if the length is wrong
  // and InvalidArgument if any value is non-finite.
  static Tensor3 from_data(int channels, int height, int width, std::vector<float> data);

  int channels() const { return channels_; }
  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t size() const { return data_.size(); }

  float& at(int c, int y, int x) { return data_[index(c, y, x)]; }
  float at(int c, int y, int x) const { return data_[index(c, y, x)]; }

  std::size_t index(int c, int y, int x) const {
    return (static_cast<std::size_t>(c) * height_ + y) * width_ + x;
  }

  std::span<float> values() { return data_; }
  std::span<const float> values() const { return data_; }

  bool same_shape(const Tensor3& other) const {
    return channels_ == other.channels_ && height_ == other.height_ &&
           width_ == other.width_;
  }

  bool bitwise_equal(const Tensor3& other) const;

  // "CxHxW" displayed form for error messages.
  std::string shape_string() const;

  // Throws InvalidArgument naming `context` if any value is NaN/Inf.
  void check_finite(const char* context) const;

 private:
  int channels_;
  int height_;
  int width_;
  std::vector<float> data_;
};

// Throws ShapeMismatch unless a and b have identical dimensions.
void require_same_shape(const Tensor3& a, const Tensor3& b, const char* context);

}  // namespace depthstyle
