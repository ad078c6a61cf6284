#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "depthstyle/resize.hpp"
#include "depthstyle/rng.hpp"
#include "support/checks.hpp"
#include "support/oracles.hpp"

using depthstyle::resize_bilinear;
using depthstyle::Rng;
using depthstyle::Tensor3;

TEST_CASE("resizing to the same size is the bitwise identity") {
  Rng rng(3);
  Tensor3 t = oracle::random_tensor(rng, 3, 9, 7, 0.0, 1.0);
  CHECK(resize_bilinear(t, 9, 7).bitwise_equal(t));
}

TEST_CASE("a constant image stays constant bitwise under any resize") {
  Tensor3 t(2, 5, 5, 0.3f);
  for (auto [h, w] : {std::pair{10, 10}, {3, 3}, {1, 17}, {12, 2}}) {
    Tensor3 r = resize_bilinear(t, h, w);
    REQUIRE(r.height() == h);
    REQUIRE(r.width() == w);
    for (float v : r.values()) CHECK(v == 0.3f);
  }
}

TEST_CASE("half-pixel-center upsample of a 2-pixel row") {
  Tensor3 t = Tensor3::from_data(1, 1, 2, {0.0f, 1.0f});
  Tensor3 r = resize_bilinear(t, 1, 4);
  // sx = (dx+0.5)*0.5 - 0.5 = {-0.25, 0.25, 0.75, 1.25}, clamped to [0,1].
  const float expected[4] = {0.0f, 0.25f, 0.75f, 1.0f};
  for (int x = 0; x < 4; ++x) CHECK(r.at(0, 0, x) == expected[x]);
}

TEST_CASE("half-pixel-center downsample of a 4-pixel row") {
  Tensor3 t = Tensor3::from_data(1, 1, 4, {0.0f, 1.0f, 2.0f, 3.0f});
  Tensor3 r = resize_bilinear(t, 1, 2);
  // sx = (dx+0.5)*2 - 0.5 = {0.5, 2.5}: midpoints of the source pairs.
  CHECK(r.at(0, 0, 0) == 0.5f);
  CHECK(r.at(0, 0, 1) == 2.5f);
}

TEST_CASE("outputs stay inside the source value range") {
  Rng rng(17);
  Tensor3 t = oracle::random_tensor(rng, 3, 8, 6, -2.0, 2.0);
  const auto [mn_it, mx_it] = std::minmax_element(t.values().begin(), t.values().end());
  const float mn = *mn_it;
  const float mx = *mx_it;
  for (auto [h, w] : {std::pair{16, 12}, {5, 3}, {8, 20}}) {
    Tensor3 r = resize_bilinear(t, h, w);
    for (float v : r.values()) {
      CHECK(v >= mn);
      CHECK(v <= mx);
    }
  }
}

TEST_CASE("channels are resampled independently") {
  Rng rng(23);
  Tensor3 ch0 = oracle::random_tensor(rng, 1, 6, 6, 0.0, 1.0);
  Tensor3 ch1 = oracle::random_tensor(rng, 1, 6, 6, 0.0, 1.0);
  Tensor3 both(2, 6, 6);
  for (int y = 0; y < 6; ++y) {
    for (int x = 0; x < 6; ++x) {
      both.at(0, y, x) = ch0.at(0, y, x);
      both.at(1, y, x) = ch1.at(0, y, x);
    }
  }
  Tensor3 r = resize_bilinear(both, 9, 4);
  Tensor3 r0 = resize_bilinear(ch0, 9, 4);
  Tensor3 r1 = resize_bilinear(ch1, 9, 4);
  for (int y = 0; y < 9; ++y) {
    for (int x = 0; x < 4; ++x) {
      CHECK(r.at(0, y, x) == r0.at(0, y, x));
      CHECK(r.at(1, y, x) == r1.at(0, y, x));
    }
  }
}

TEST_CASE("invalid target dimensions are rejected") {
  Tensor3 t(1, 2, 2);
  CHECK(checks::category_of([&] { resize_bilinear(t, 0, 2); }) ==
        depthstyle::ErrorCategory::InvalidArgument);
  CHECK(checks::category_of([&] { resize_bilinear(t, 2, -1); }) ==
        depthstyle::ErrorCategory::InvalidArgument);
}
