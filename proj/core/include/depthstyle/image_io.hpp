#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "depthstyle/tensor.hpp"

namespace depthstyle {

// 3-channel image with values in [0,1]; v = byte/255 maps 8-bit sRGB
// channels linearly onto the float range.
class ImageRGB {
 public:
  ImageRGB() : t_(3, 1, 1) {}

  // Validates channels == 3 and all values in [0,1].
  static ImageRGB from_tensor(Tensor3 t);

  const Tensor3& tensor() const { return t_; }
  int height() const { return t_.height(); }
  int width() const { return t_.width(); }

  bool bitwise_equal(const ImageRGB& other) const { return t_.bitwise_equal(other.t_); }

 private:
  explicit ImageRGB(Tensor3 t) : t_(std::move(t)) {}
  Tensor3 t_;
};

// Reads an 8-bit RGB or RGBA PNG; the alpha channel, if present, is
// discarded. Values map as v = byte/255 exactly.
// Errors: FileNotFound, UnsupportedFormat (non-PNG, 16-bit color,
// grayscale, palette), CorruptFile.
ImageRGB load_image(const std::filesystem::path& path);
ImageRGB decode_image(const std::vector<std::uint8_t>& png_bytes);

// Writes an 8-bit RGB PNG; byte = floor(clamp(v,0,1)*255 + 0.5).
void save_image(const ImageRGB& img, const std::filesystem::path& path);
std::vector<std::uint8_t> encode_image(const ImageRGB& img);

// 16-bit grayscale PNG I/O used for depth maps; raw16 = floor(clamp(v,0,1)*65535 + 0.5)
// on write and v = raw16/65535 on read. The tensor is 1xHxW.
Tensor3 load_gray16(const std::filesystem::path& path);
Tensor3 decode_gray16(const std::vector<std::uint8_t>& png_bytes);
void save_gray16(const Tensor3& gray, const std::filesystem::path& path);
std::vector<std::uint8_t> encode_gray16(const Tensor3& gray);

// The value maps the PNG round trips apply, exposed so pipeline stages can
// quantize in memory exactly as a save->load cycle would.
std::uint8_t quantize_byte(float v);
std::uint16_t quantize_u16(float v);
ImageRGB quantize_image(const ImageRGB& img);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);

}  // namespace depthstyle
