#pragma once

#include <array>

#include "depthstyle/depth.hpp"
#include "depthstyle/image_io.hpp"

namespace depthstyle {

struct ColorRGB {
  float r = 0.0f;
  float g = 0.0f;
  float b = 0.0f;
};

// Closed-form jet-style map evaluated at t in [0,1]:
//   r = clamp(1.5 - |4t - 3|, 0, 1)
//   g = clamp(1.5 - |4t - 2|, 0, 1)
//   b = clamp(1.5 - |4t - 1|, 0, 1)
ColorRGB colormap_formula(double t);

// 256-entry lookup table, entry i = colormap_formula(i/255).
using Colormap = std::array<ColorRGB, 256>;
const Colormap& colormap_lut();

// Per pixel: index = clamp(floor(v*255 + 0.5), 0, 255), output = LUT[index].
// With the inverse-depth convention, near objects land on the warm (red)
// end of the map.
ImageRGB apply_colormap(const NormalizedDepth& d);

// out = (1 - alpha)*content + alpha*heat, per pixel per channel.
// alpha=0 returns content bitwise and alpha=1 returns heat bitwise.
ImageRGB blend(const ImageRGB& content, const ImageRGB& heat, double alpha);

}  // namespace depthstyle
