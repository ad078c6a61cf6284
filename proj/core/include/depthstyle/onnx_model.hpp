#pragma once

#include <filesystem>
#include <memory>

#include "depthstyle/features.hpp"

namespace depthstyle {

// Loads a pretrained feature extractor from an ONNX model file. Supported
// graphs are single chains of Conv (3x3, stride 1, pads 1) / Relu /
// MaxPool (2x2, stride 2) nodes — the shape of a truncated VGG-style
// export. Layer names are the ONNX node names (falling back to each node's
// output tensor name when the node is unnamed).
//
// Throws BackendUnavailable when the file is absent and BackendFailure on
// malformed or unsupported models.
std::unique_ptr<FeatureExtractor> make_pretrained_extractor(const std::filesystem::path& model_path);

}  // namespace depthstyle
