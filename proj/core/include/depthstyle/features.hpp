#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "depthstyle/tensor.hpp"

namespace depthstyle {

// Layer name -> activation map. For the "tiny" backend on a 3xHxW input,
// "relu1" is 8xHxW and "relu2" is 16xHxW, all values >= 0.
using FeatureSet = std::map<std::string, Tensor3>;

// Layer name -> dL/dF, shapes matching the corresponding activations.
using LayerGradients = std::map<std::string, Tensor3>;

struct ExtractorSpec {
  std::string backend_id = "tiny";  // "tiny" | "pretrained:<name>"
  std::vector<std::string> style_layers;  // empty -> backend defaults
  std::string content_layer;              // empty -> backend default
  std::filesystem::path pretrained_model; // ONNX file for pretrained backends
};

class FeatureExtractor {
 public:
  virtual ~FeatureExtractor() = default;

  virtual std::vector<std::string> layer_names() const = 0;

  // Runs the forward pass on a 3xHxW input and returns the requested layers.
  // Throws UnknownLayer for names outside layer_names().
  virtual FeatureSet extract(const Tensor3& img, std::span<const std::string> layers) const = 0;

  // Accumulates dL/dimg (3xHxW) from per-layer feature gradients, back
  // through ReLU masks (a gradient passes only where the pre-activation was
  // strictly positive) and the padding-aware transposed convolutions.
  virtual Tensor3 backward(const Tensor3& img, const LayerGradients& grads) const = 0;
};

struct ResolvedLayers {
  std::vector<std::string> style_layers;
  std::string content_layer;
};

// Fills in backend defaults (tiny: style ["relu1","relu2"], content "relu2")
// and verifies every layer exists; throws UnknownLayer otherwise. Pretrained
// backends have no defaults and require both fields in the spec.
ResolvedLayers resolve_layers(const ExtractorSpec& spec, const FeatureExtractor& extractor);

// Constructs the backend named by spec.backend_id and validates the layer
// selection. Throws OutOfRange for unknown ids, BackendUnavailable when a
// pretrained model file is missing.
std::unique_ptr<FeatureExtractor> make_extractor(const ExtractorSpec& spec);

// ---- convolution primitives ----

enum class PadMode {
  Reflect,  // border mirrors about the edge pixel (-1 -> 1, H -> H-2);
            // size-1 dimensions clamp to the single pixel
  Zero,     // border contributes zero
};

struct Conv2dWeights {
  int out_channels = 0;
  int in_channels = 0;
  std::vector<float> weights;  // out x in x 3 x 3, row-major
  std::vector<float> bias;     // out

  float w(int o, int i, int ky, int kx) const {
    return weights[((static_cast<std::size_t>(o) * in_channels + i) * 3 + ky) * 3 + kx];
  }
};

// out[o][y][x] = bias[o] + sum_{i,ky,kx} w[o][i][ky][kx] * pad(input)[i][y+ky][x+kx].
// Stride 1, padding 1; output spatial size equals the input's.
Tensor3 conv3x3(const Tensor3& input, const Conv2dWeights& k, PadMode pad);

inline Tensor3 conv3x3_reflect(const Tensor3& input, const Conv2dWeights& k) {
  return conv3x3(input, k, PadMode::Reflect);
}

// The exact adjoint of conv3x3 with respect to its input: contributions to
// mirrored border coordinates accumulate back onto their source pixels.
Tensor3 conv3x3_input_grad(const Tensor3& grad_out, const Conv2dWeights& k, PadMode pad);

// The reflection index map used by PadMode::Reflect, exposed for tests.
int reflect_index(int i, int n);

// ---- the deterministic reference backend ----

struct TinyWeights {
  Conv2dWeights conv1;  // 8 x 3 x 3 x 3
  Conv2dWeights conv2;  // 16 x 8 x 3 x 3
};

// Closed-form integer-derived weights:
//   w1[o][i][ky][kx] = (((31o + 17i + 5ky + kx) mod 11) - 5)/20
//   b1[o]            = ((o mod 7) - 3)/10
//   w2[o][i][ky][kx] = (((29o + 13i + 7ky + 3kx) mod 11) - 5)/20
//   b2[o]            = ((o mod 5) - 2)/10
const TinyWeights& tiny_weights();

}  // namespace depthstyle
