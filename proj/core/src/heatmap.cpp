#include "depthstyle/heatmap.hpp"

#include <cmath>

#include "depthstyle/error.hpp"

namespace depthstyle {

ColorRGB colormap_formula(double t) {
  auto clamp01 = [](double v) { return std::fmin(std::fmax(v, 0.0), 1.0); };
  ColorRGB c;
  c.r = static_cast<float>(clamp01(1.5 - std::fabs(4.0 * t - 3.0)));
  c.g = static_cast<float>(clamp01(1.5 - std::fabs(4.0 * t - 2.0)));
  c.b = static_cast<float>(clamp01(1.5 - std::fabs(4.0 * t - 1.0)));
  return c;
}

const Colormap& colormap_lut() {
  static const Colormap lut = [] {
    Colormap table;
    for (int i = 0; i < 256; ++i) {
      table[i] = colormap_formula(i / 255.0);
    }
    return table;
  }();
  return lut;
}

ImageRGB apply_colormap(const NormalizedDepth& d) {
  const Colormap& lut = colormap_lut();
  const Tensor3& t = d.tensor();
  Tensor3 out(3, t.height(), t.width());
  for (int y = 0; y < t.height(); ++y) {
    for (int x = 0; x < t.width(); ++x) {
      int index = static_cast<int>(std::floor(static_cast<double>(t.at(0, y, x)) * 255.0 + 0.5));
      index = std::min(std::max(index, 0), 255);
      const ColorRGB& c = lut[static_cast<std::size_t>(index)];
      out.at(0, y, x) = c.r;
      out.at(1, y, x) = c.g;
      out.at(2, y, x) = c.b;
    }
  }
  return ImageRGB::from_tensor(std::move(out));
}

ImageRGB blend(const ImageRGB& content, const ImageRGB& heat, double alpha) {
  if (content.height() != heat.height() || content.width() != heat.width()) {
    raise(ErrorCategory::DimensionMismatch,
          "blend inputs differ: " + content.tensor().shape_string() + " vs " +
              heat.tensor().shape_string());
  }
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    raise(ErrorCategory::OutOfRange, "blend alpha must be in [0,1]");
  }
  const Tensor3& c = content.tensor();
  const Tensor3& h = heat.tensor();
  Tensor3 out(3, c.height(), c.width());
  // Double arithmetic keeps each output inside [min(c,h), max(c,h)] exactly
  // after the cast back to float.
  const double w0 = 1.0 - alpha;
  for (std::size_t i = 0; i < c.size(); ++i) {
    out.values()[i] = static_cast<float>(w0 * c.values()[i] + alpha * h.values()[i]);
  }
  return ImageRGB::from_tensor(std::move(out));
}

}  // namespace depthstyle
