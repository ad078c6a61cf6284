#include "depthstyle/image_io.hpp"

#include <png.h>

#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "depthstyle/error.hpp"

namespace depthstyle {

namespace {

constexpr std::size_t kMaxPixels = std::size_t(1) << 26;

struct MemReader {
  const std::uint8_t* data;
  std::size_t size;
  std::size_t pos;
};

extern "C" void mem_read_fn(png_structp png, png_bytep out, png_size_t n) {
  auto* r = static_cast<MemReader*>(png_get_io_ptr(png));
  if (r->pos + n > r->size) {
    png_error(png, "unexpected end of data");
  }
  std::memcpy(out, r->data + r->pos, n);
  r->pos += n;
}

extern "C" void mem_write_fn(png_structp png, png_bytep data, png_size_t n) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + n);
}

extern "C" void mem_flush_fn(png_structp) {}

bool has_png_signature(const std::vector<std::uint8_t>& bytes) {
  return bytes.size() >= 8 && png_sig_cmp(bytes.data(), 0, 8) == 0;
}

struct DecodedPng {
  int width = 0;
  int height = 0;
  int bit_depth = 0;
  int color_type = 0;
  int channels = 0;
  std::vector<std::uint8_t> rows;  // raw row data, rowbytes * height
  std::size_t rowbytes = 0;
};

// Decodes any PNG into raw rows; format validation happens in the callers
// so they can report precise UnsupportedFormat messages.
DecodedPng decode_png(const std::vector<std::uint8_t>& bytes) {
  if (!has_png_signature(bytes)) {
    raise(ErrorCategory::UnsupportedFormat, "not a PNG file");
  }

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) {
    raise(ErrorCategory::Internal, "png_create_read_struct failed");
  }
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    raise(ErrorCategory::Internal, "png_create_info_struct failed");
  }

  DecodedPng out;
  std::vector<png_bytep> row_ptrs;
  MemReader reader{bytes.data(), bytes.size(), 0};

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    raise(ErrorCategory::CorruptFile, "PNG decode failed (truncated or corrupt data)");
  }

  png_set_read_fn(png, &reader, mem_read_fn);
  png_read_info(png, info);

  out.width = static_cast<int>(png_get_image_width(png, info));
  out.height = static_cast<int>(png_get_image_height(png, info));
  out.bit_depth = png_get_bit_depth(png, info);
  out.color_type = png_get_color_type(png, info);

  if (static_cast<std::size_t>(out.width) * out.height > kMaxPixels) {
    png_destroy_read_struct(&png, &info, nullptr);
    raise(ErrorCategory::UnsupportedFormat, "image exceeds the supported pixel count");
  }

  png_set_interlace_handling(png);
  png_read_update_info(png, info);

  out.channels = png_get_channels(png, info);
  out.rowbytes = png_get_rowbytes(png, info);
  out.rows.resize(out.rowbytes * out.height);
  row_ptrs.resize(out.height);
  for (int y = 0; y < out.height; ++y) {
    row_ptrs[y] = out.rows.data() + out.rowbytes * y;
  }
  png_read_image(png, row_ptrs.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return out;
}

void encode_png(std::vector<std::uint8_t>& out, int width, int height, int bit_depth,
                int color_type, const std::vector<std::uint8_t>& rows, std::size_t rowbytes) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) {
    raise(ErrorCategory::Internal, "png_create_write_struct failed");
  }
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    raise(ErrorCategory::Internal, "png_create_info_struct failed");
  }

  std::vector<png_bytep> row_ptrs(height);
  for (int y = 0; y < height; ++y) {
    row_ptrs[y] = const_cast<png_bytep>(rows.data() + rowbytes * y);
  }

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    raise(ErrorCategory::IoError, "PNG encode failed");
  }

  png_set_write_fn(png, &out, mem_write_fn, mem_flush_fn);
  png_set_IHDR(png, info, width, height, bit_depth, color_type, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, row_ptrs.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

void write_file_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) {
    raise(ErrorCategory::IoError, "cannot open for writing: " + path.string());
  }
  f.write(reinterpret_cast<const char*>(bytes.data()),
          static_cast<std::streamsize>(bytes.size()));
  if (!f) {
    raise(ErrorCategory::IoError, "write failed: " + path.string());
  }
}

}  // namespace

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::exists(path, ec) || ec) {
    raise(ErrorCategory::FileNotFound, "no such file: " + path.string());
  }
  if (std::filesystem::is_directory(path)) {
    raise(ErrorCategory::IoError, "is a directory: " + path.string());
  }
  std::ifstream f(path, std::ios::binary);
  if (!f) {
    raise(ErrorCategory::IoError, "cannot open: " + path.string());
  }
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                  std::istreambuf_iterator<char>());
  if (f.bad()) {
    raise(ErrorCategory::IoError, "read failed: " + path.string());
  }
  return bytes;
}

ImageRGB ImageRGB::from_tensor(Tensor3 t) {
  if (t.channels() != 3) {
    raise(ErrorCategory::ShapeMismatch,
          "ImageRGB requires 3 channels, got " + t.shape_string());
  }
  t.check_finite("ImageRGB");
  for (float v : t.values()) {
    if (v < 0.0f || v > 1.0f) {
      raise(ErrorCategory::OutOfRange, "ImageRGB value outside [0,1]");
    }
  }
  return ImageRGB(std::move(t));
}

ImageRGB decode_image(const std::vector<std::uint8_t>& png_bytes) {
  DecodedPng p = decode_png(png_bytes);
  if (p.bit_depth != 8 || (p.color_type != PNG_COLOR_TYPE_RGB &&
                           p.color_type != PNG_COLOR_TYPE_RGB_ALPHA)) {
    raise(ErrorCategory::UnsupportedFormat,
          "expected an 8-bit RGB or RGBA PNG (bit depth " + std::to_string(p.bit_depth) +
              ", color type " + std::to_string(p.color_type) + ")");
  }
  Tensor3 t(3, p.height, p.width);
  const int nch = p.channels;  // 3 or 4; alpha is dropped
  for (int y = 0; y < p.height; ++y) {
    const std::uint8_t* row = p.rows.data() + p.rowbytes * y;
    for (int x = 0; x < p.width; ++x) {
      for (int c = 0; c < 3; ++c) {
        t.at(c, y, x) = static_cast<float>(row[x * nch + c]) / 255.0f;
      }
    }
  }
  return ImageRGB::from_tensor(std::move(t));
}

ImageRGB load_image(const std::filesystem::path& path) {
  return decode_image(read_file_bytes(path));
}

std::uint8_t quantize_byte(float v) {
  double c = std::fmin(std::fmax(static_cast<double>(v), 0.0), 1.0);
  return static_cast<std::uint8_t>(std::floor(c * 255.0 + 0.5));
}

std::uint16_t quantize_u16(float v) {
  double c = std::fmin(std::fmax(static_cast<double>(v), 0.0), 1.0);
  return static_cast<std::uint16_t>(std::floor(c * 65535.0 + 0.5));
}

ImageRGB quantize_image(const ImageRGB& img) {
  const Tensor3& t = img.tensor();
  Tensor3 q(t.channels(), t.height(), t.width());
  for (std::size_t i = 0; i < t.size(); ++i) {
    q.values()[i] = static_cast<float>(quantize_byte(t.values()[i])) / 255.0f;
  }
  return ImageRGB::from_tensor(std::move(q));
}

std::vector<std::uint8_t> encode_image(const ImageRGB& img) {
  const Tensor3& t = img.tensor();
  const int h = t.height();
  const int w = t.width();
  const std::size_t rowbytes = static_cast<std::size_t>(w) * 3;
  std::vector<std::uint8_t> rows(rowbytes * h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        rows[rowbytes * y + x * 3 + c] = quantize_byte(t.at(c, y, x));
      }
    }
  }
  std::vector<std::uint8_t> out;
  encode_png(out, w, h, 8, PNG_COLOR_TYPE_RGB, rows, rowbytes);
  return out;
}

void save_image(const ImageRGB& img, const std::filesystem::path& path) {
  write_file_bytes(path, encode_image(img));
}

Tensor3 decode_gray16(const std::vector<std::uint8_t>& png_bytes) {
  DecodedPng p = decode_png(png_bytes);
  if (p.bit_depth != 16 || p.color_type != PNG_COLOR_TYPE_GRAY) {
    raise(ErrorCategory::UnsupportedFormat,
          "expected a 16-bit grayscale PNG (bit depth " + std::to_string(p.bit_depth) +
              ", color type " + std::to_string(p.color_type) + ")");
  }
  Tensor3 t(1, p.height, p.width);
  for (int y = 0; y < p.height; ++y) {
    const std::uint8_t* row = p.rows.data() + p.rowbytes * y;
    for (int x = 0; x < p.width; ++x) {
      // PNG 16-bit samples are big-endian on the wire.
      std::uint16_t raw = static_cast<std::uint16_t>((row[x * 2] << 8) | row[x * 2 + 1]);
      t.at(0, y, x) = static_cast<float>(raw) / 65535.0f;
    }
  }
  return t;
}

Tensor3 load_gray16(const std::filesystem::path& path) {
  return decode_gray16(read_file_bytes(path));
}

std::vector<std::uint8_t> encode_gray16(const Tensor3& gray) {
  if (gray.channels() != 1) {
    raise(ErrorCategory::ShapeMismatch,
          "gray16 tensor must have 1 channel, got " + gray.shape_string());
  }
  const int h = gray.height();
  const int w = gray.width();
  const std::size_t rowbytes = static_cast<std::size_t>(w) * 2;
  std::vector<std::uint8_t> rows(rowbytes * h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      std::uint16_t raw = quantize_u16(gray.at(0, y, x));
      rows[rowbytes * y + x * 2] = static_cast<std::uint8_t>(raw >> 8);
      rows[rowbytes * y + x * 2 + 1] = static_cast<std::uint8_t>(raw & 0xff);
    }
  }
  std::vector<std::uint8_t> out;
  encode_png(out, w, h, 16, PNG_COLOR_TYPE_GRAY, rows, rowbytes);
  return out;
}

void save_gray16(const Tensor3& gray, const std::filesystem::path& path) {
  write_file_bytes(path, encode_gray16(gray));
}

}  // namespace depthstyle
