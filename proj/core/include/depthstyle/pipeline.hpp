#pragma once

#include <filesystem>
#include <optional>

#include "depthstyle/config.hpp"
#include "depthstyle/image_io.hpp"

namespace depthstyle {

// The pipeline stages communicate exclusively through files in
// cfg.output_dir (depth.png -> heatmap.png -> blended.png -> stylized.png),
// so `pipeline` is literally the four stage commands run in order and the
// composition produces identical artifacts by construction.

// Loads a PNG and caps its longest side at size_cap, preserving aspect
// ratio (bilinear). Images already within the cap are returned unchanged.
ImageRGB load_image_capped(const std::filesystem::path& path, int size_cap);

// content (capped) + depth source -> <output_dir>/depth.png, a normalized
// 16-bit depth map at the content's dimensions. The source is cfg.depth when
// set (resized if needed), otherwise cfg.depth_backend with caching under
// cfg.cache_dir.
void cmd_depth(const JobConfig& cfg);

// <output_dir>/depth.png -> <output_dir>/heatmap.png. The input is
// re-normalized, which is exact on anything cmd_depth wrote and makes a
// constant artifact map to the LUT midpoint.
void cmd_heatmap(const JobConfig& cfg);

// content (capped) + <output_dir>/heatmap.png -> <output_dir>/blended.png
// with blend fraction cfg.alpha.
void cmd_blend(const JobConfig& cfg);

// input image + cfg.style -> <output_dir>/stylized.png, trace.csv and
// snap_<n>.png. The input is <output_dir>/blended.png unless overridden
// (plain stylization of an arbitrary image); it serves as both the content
// target and, with init="image", the starting iterate. kappa > 0 takes the
// depth mask from <output_dir>/depth.png when present, else from cfg.depth.
void cmd_stylize(const JobConfig& cfg,
                 const std::optional<std::filesystem::path>& input_override = {});

// depth, heatmap, blend, stylize in order. When cfg.content is a directory,
// every *.png inside is processed concurrently, each into
// <output_dir>/<stem>/.
void cmd_pipeline(const JobConfig& cfg);

}  // namespace depthstyle
