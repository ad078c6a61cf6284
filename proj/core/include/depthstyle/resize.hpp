#pragma once

#include "depthstyle/tensor.hpp"

namespace depthstyle {

// Bilinear resample with half-pixel centers: the source coordinate for
// destination column dx is sx = (dx+0.5)*(W_src/W_dst) - 0.5, clamped to
// [0, W_src-1] (same for rows). Channels are processed independently.
// Output values are clamped to the range of the four source corners, so a
// constant input stays constant bitwise and outputs never leave
// [min(input), max(input)]. Resizing to the input's own size is the
// bitwise identity.
Tensor3 resize_bilinear(const Tensor3& t, int out_h, int out_w);

}  // namespace depthstyle
