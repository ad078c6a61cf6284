#include "depthstyle/resize.hpp"

#include <algorithm>
#include <cmath>

#include "depthstyle/error.hpp"

namespace depthstyle {

Tensor3 resize_bilinear(const Tensor3& t, int out_h, int out_w) {
  if (out_h < 1 || out_w < 1) {
    raise(ErrorCategory::InvalidArgument, "resize target dimensions must be >= 1");
  }
  const int src_h = t.height();
  const int src_w = t.width();
  if (out_h == src_h && out_w == src_w) {
    return t;
  }

  const double scale_y = static_cast<double>(src_h) / out_h;
  const double scale_x = static_cast<double>(src_w) / out_w;

  Tensor3 out(t.channels(), out_h, out_w);
  for (int dy = 0; dy < out_h; ++dy) {
    double sy = (dy + 0.5) * scale_y - 0.5;
    sy = std::clamp(sy, 0.0, static_cast<double>(src_h - 1));
    const int y0 = static_cast<int>(std::floor(sy));
    const int y1 = std::min(y0 + 1, src_h - 1);
    const double fy = sy - y0;

    for (int dx = 0; dx < out_w; ++dx) {
      double sx = (dx + 0.5) * scale_x - 0.5;
      sx = std::clamp(sx, 0.0, static_cast<double>(src_w - 1));
      const int x0 = static_cast<int>(std::floor(sx));
      const int x1 = std::min(x0 + 1, src_w - 1);
      const double fx = sx - x0;

      for (int c = 0; c < t.channels(); ++c) {
        const double v00 = t.at(c, y0, x0);
        const double v01 = t.at(c, y0, x1);
        const double v10 = t.at(c, y1, x0);
        const double v11 = t.at(c, y1, x1);
        const double top = v00 * (1.0 - fx) + v01 * fx;
        const double bottom = v10 * (1.0 - fx) + v11 * fx;
        double r = top * (1.0 - fy) + bottom * fy;
        // Pin the convex-combination bound exactly despite rounding.
        const double lo = std::min(std::min(v00, v01), std::min(v10, v11));
        const double hi = std::max(std::max(v00, v01), std::max(v10, v11));
        r = std::clamp(r, lo, hi);
        out.at(c, dy, dx) = static_cast<float>(r);
      }
    }
  }
  return out;
}

}  // namespace depthstyle
