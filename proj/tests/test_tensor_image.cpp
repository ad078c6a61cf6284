#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <vector>

#include "depthstyle/error.hpp"
#include "depthstyle/image_io.hpp"
#include "depthstyle/rng.hpp"
#include "depthstyle/tensor.hpp"
#include "support/checks.hpp"
#include "support/golden_pngs.hpp"
#include "support/testenv.hpp"

using checks::category_of;
using depthstyle::decode_gray16;
using depthstyle::decode_image;
using depthstyle::encode_gray16;
using depthstyle::encode_image;
using depthstyle::Error;
using depthstyle::ErrorCategory;
using depthstyle::ImageRGB;
using depthstyle::Tensor3;

TEST_CASE("tensor construction and layout") {
  Tensor3 d;
  CHECK(d.channels() == 1);
  CHECK(d.height() == 1);
  CHECK(d.width() == 1);
  CHECK(d.at(0, 0, 0) == 0.0f);

  Tensor3 t(2, 3, 4, 0.25f);
  CHECK(t.size() == 24);
  for (float v : t.values()) CHECK(v == 0.25f);

  // index = (c*H + y)*W + x
  t.at(1, 2, 3) = 9.0f;
  CHECK(t.values()[(1 * 3 + 2) * 4 + 3] == 9.0f);
  CHECK(t.index(0, 0, 1) == 1);
  CHECK(t.index(0, 1, 0) == 4);
  CHECK(t.index(1, 0, 0) == 12);

  CHECK(t.shape_string() == "2x3x4");
}

TEST_CASE("tensor validation") {
  CHECK(category_of([] { Tensor3 t(0, 1, 1); }) == ErrorCategory::InvalidArgument);
  CHECK(category_of([] { Tensor3 t(1, -2, 1); }) == ErrorCategory::InvalidArgument);

  CHECK(category_of([] {
          Tensor3::from_data(1, 1, 2, {1.0f});
        }) == ErrorCategory::ShapeMismatch);
  CHECK(category_of([] {
          Tensor3::from_data(1, 1, 1, {std::numeric_limits<float>::quiet_NaN()});
        }) == ErrorCategory::InvalidArgument);
  CHECK(category_of([] {
          Tensor3::from_data(1, 1, 1, {std::numeric_limits<float>::infinity()});
        }) == ErrorCategory::InvalidArgument);

  Tensor3 a(1, 2, 2);
  Tensor3 b(1, 2, 3);
  CHECK(category_of([&] { depthstyle::require_same_shape(a, b, "test"); }) ==
        ErrorCategory::ShapeMismatch);
  CHECK_NOTHROW(depthstyle::require_same_shape(a, a, "test"));
}

TEST_CASE("tensor bitwise equality") {
  Tensor3 a = Tensor3::from_data(1, 1, 3, {0.0f, 0.5f, 1.0f});
  Tensor3 b = a;
  CHECK(a.bitwise_equal(b));
  b.at(0, 0, 1) = std::nextafter(0.5f, 1.0f);
  CHECK_FALSE(a.bitwise_equal(b));
  CHECK_FALSE(a.bitwise_equal(Tensor3(1, 3, 1)));

  // -0.0f and +0.0f differ in representation, and bitwise means bitwise.
  Tensor3 z1 = Tensor3::from_data(1, 1, 1, {0.0f});
  Tensor3 z2 = Tensor3::from_data(1, 1, 1, {-0.0f});
  CHECK_FALSE(z1.bitwise_equal(z2));
}

TEST_CASE("decoding PNGs written by an independent encoder") {
  SUBCASE("1x1 pure red") {
    ImageRGB img = decode_image(golden::kRed1x1);
    REQUIRE(img.width() == 1);
    REQUIRE(img.height() == 1);
    CHECK(img.tensor().at(0, 0, 0) == 1.0f);
    CHECK(img.tensor().at(1, 0, 0) == 0.0f);
    CHECK(img.tensor().at(2, 0, 0) == 0.0f);
  }

  SUBCASE("1x1 mid gray maps byte/255 exactly") {
    ImageRGB img = decode_image(golden::kGray128Rgb1x1);
    for (int c = 0; c < 3; ++c) {
      CHECK(img.tensor().at(c, 0, 0) == 128.0f / 255.0f);
    }
  }

  SUBCASE("2x2 RGBA drops alpha, keeps RGB per pixel") {
    ImageRGB img = decode_image(golden::kRgba2x2);
    REQUIRE(img.width() == 2);
    REQUIRE(img.height() == 2);
    const int expected[4][3] = {{10, 20, 30}, {40, 50, 60}, {70, 80, 90}, {100, 110, 120}};
    int p = 0;
    for (int y = 0; y < 2; ++y) {
      for (int x = 0; x < 2; ++x, ++p) {
        for (int c = 0; c < 3; ++c) {
          CHECK(img.tensor().at(c, y, x) == static_cast<float>(expected[p][c]) / 255.0f);
        }
      }
    }
  }
}

TEST_CASE("rejecting PNG flavors outside the supported set") {
  CHECK(category_of([] { decode_image(golden::kGray8_1x1); }) ==
        ErrorCategory::UnsupportedFormat);
  CHECK(category_of([] { decode_image(golden::kRgb16_1x1); }) ==
        ErrorCategory::UnsupportedFormat);
  CHECK(category_of([] { decode_image(golden::kPalette2x2); }) ==
        ErrorCategory::UnsupportedFormat);
  CHECK(category_of([] { decode_image(golden::kGray16Mid); }) ==
        ErrorCategory::UnsupportedFormat);

  CHECK(category_of([] { decode_gray16(golden::kGray8_1x1); }) ==
        ErrorCategory::UnsupportedFormat);
  CHECK(category_of([] { decode_gray16(golden::kRed1x1); }) ==
        ErrorCategory::UnsupportedFormat);
}

TEST_CASE("rejecting non-PNG and truncated data") {
  std::vector<std::uint8_t> text = {'h', 'e', 'l', 'l', 'o'};
  CHECK(category_of([&] { decode_image(text); }) == ErrorCategory::UnsupportedFormat);

  std::vector<std::uint8_t> truncated(golden::kRed1x1.begin(),
                                      golden::kRed1x1.begin() + 40);
  CHECK(category_of([&] { decode_image(truncated); }) == ErrorCategory::CorruptFile);

  std::vector<std::uint8_t> corrupted = golden::kRed1x1;
  corrupted[45] ^= 0xff;  // inside IDAT
  CHECK(category_of([&] { decode_image(corrupted); }) == ErrorCategory::CorruptFile);
}

TEST_CASE("file-level errors") {
  testenv::TempDir tmp;
  CHECK(category_of([&] { depthstyle::load_image(tmp / "absent.png"); }) ==
        ErrorCategory::FileNotFound);
  CHECK(category_of([&] { depthstyle::read_file_bytes(tmp.path()); }) ==
        ErrorCategory::IoError);
}

TEST_CASE("16-bit grayscale decode against an independent encoder") {
  Tensor3 zero = decode_gray16(golden::kGray16Zero);
  CHECK(zero.at(0, 0, 0) == 0.0f);

  Tensor3 mid = decode_gray16(golden::kGray16Mid);
  CHECK(mid.at(0, 0, 0) == 32768.0f / 65535.0f);

  Tensor3 max = decode_gray16(golden::kGray16Max);
  CHECK(max.at(0, 0, 0) == 1.0f);

  // A 3x1 row pins both the big-endian sample decoding and the x ordering.
  Tensor3 row = decode_gray16(golden::kGray16Row3);
  REQUIRE(row.width() == 3);
  REQUIRE(row.height() == 1);
  CHECK(row.at(0, 0, 0) == 2000.0f / 65535.0f);
  CHECK(row.at(0, 0, 1) == 40000.0f / 65535.0f);
  CHECK(row.at(0, 0, 2) == 60000.0f / 65535.0f);
}

TEST_CASE("quantization maps") {
  using depthstyle::quantize_byte;
  using depthstyle::quantize_u16;

  CHECK(quantize_byte(0.0f) == 0);
  CHECK(quantize_byte(1.0f) == 255);
  CHECK(quantize_byte(-0.5f) == 0);
  CHECK(quantize_byte(1.5f) == 255);
  CHECK(quantize_byte(0.5f) == 128);  // floor(127.5 + 0.5)
  CHECK(quantize_byte(128.0f / 255.0f) == 128);

  CHECK(quantize_u16(0.0f) == 0);
  CHECK(quantize_u16(1.0f) == 65535);
  CHECK(quantize_u16(-1.0f) == 0);
  CHECK(quantize_u16(2.0f) == 65535);
  CHECK(quantize_u16(0.25f) == 16384);  // floor(16383.75 + 0.5)
  for (int k : {0, 1, 777, 32768, 65534, 65535}) {
    CHECK(quantize_u16(static_cast<float>(k) / 65535.0f) == k);
  }
}

TEST_CASE("RGB PNG round trip is the identity on quantized values") {
  depthstyle::Rng rng(11);
  Tensor3 t(3, 7, 5);
  for (float& v : t.values()) v = static_cast<float>(rng.next_unit());
  ImageRGB quantized = depthstyle::quantize_image(ImageRGB::from_tensor(t));

  ImageRGB back = decode_image(encode_image(quantized));
  CHECK(back.bitwise_equal(quantized));

  testenv::TempDir tmp;
  depthstyle::save_image(quantized, tmp / "rt.png");
  CHECK(depthstyle::load_image(tmp / "rt.png").bitwise_equal(quantized));

  // quantize_image is idempotent (it mirrors a save/load cycle exactly).
  CHECK(depthstyle::quantize_image(quantized).bitwise_equal(quantized));
}

TEST_CASE("gray16 PNG round trip is the identity on representable values") {
  Tensor3 g(1, 2, 3);
  const int raws[6] = {0, 1, 1000, 32768, 65534, 65535};
  for (int i = 0; i < 6; ++i) {
    g.values()[i] = static_cast<float>(raws[i]) / 65535.0f;
  }
  Tensor3 back = decode_gray16(encode_gray16(g));
  CHECK(back.bitwise_equal(g));

  testenv::TempDir tmp;
  depthstyle::save_gray16(g, tmp / "g.png");
  CHECK(depthstyle::load_gray16(tmp / "g.png").bitwise_equal(g));

  CHECK(category_of([] { encode_gray16(Tensor3(2, 1, 1)); }) ==
        ErrorCategory::ShapeMismatch);
}

TEST_CASE("ImageRGB validation") {
  CHECK(category_of([] { ImageRGB::from_tensor(Tensor3(1, 2, 2)); }) ==
        ErrorCategory::ShapeMismatch);
  CHECK(category_of([] {
          ImageRGB::from_tensor(Tensor3::from_data(3, 1, 1, {0.0f, 0.5f, 1.5f}));
        }) == ErrorCategory::OutOfRange);
  CHECK_NOTHROW(ImageRGB::from_tensor(Tensor3(3, 1, 1, 1.0f)));
}

TEST_CASE("error formatting is the machine-parsable CLI line") {
  Error e(ErrorCategory::UnknownKey, "unknown config key \"bogus\"");
  CHECK(e.formatted() == "error:UnknownKey: unknown config key \"bogus\"");
  CHECK(std::string(depthstyle::to_string(ErrorCategory::BackendUnavailable)) ==
        "BackendUnavailable");
}
