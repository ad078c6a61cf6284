#include "depthstyle/features.hpp"

#include <algorithm>
#include <set>

#include "depthstyle/error.hpp"
#include "depthstyle/onnx_model.hpp"

namespace depthstyle {

int reflect_index(int i, int n) {
  if (n == 1) return 0;  // clamp: nothing to mirror about
  if (i < 0) return 1;
  if (i >= n) return n - 2;
  return i;
}

namespace {

void check_conv_shapes(const Tensor3& input, const Conv2dWeights& k) {
  if (k.in_channels != input.channels()) {
    raise(ErrorCategory::ShapeMismatch,
          "conv kernel expects " + std::to_string(k.in_channels) + " input channels, got " +
              input.shape_string());
  }
  if (k.weights.size() != static_cast<std::size_t>(k.out_channels) * k.in_channels * 9 ||
      k.bias.size() != static_cast<std::size_t>(k.out_channels)) {
    raise(ErrorCategory::ShapeMismatch, "conv weight array sizes are inconsistent");
  }
}

// Copies one channel into an (H+2)x(W+2) border-padded buffer.
void fill_padded(const Tensor3& input, int c, PadMode pad, std::vector<float>& buf) {
  const int h = input.height();
  const int w = input.width();
  const int pw = w + 2;
  for (int py = 0; py < h + 2; ++py) {
    for (int px = 0; px < pw; ++px) {
      const int sy = py - 1;
      const int sx = px - 1;
      float v = 0.0f;
      if (pad == PadMode::Reflect) {
        v = input.at(c, reflect_index(sy, h), reflect_index(sx, w));
      } else if (sy >= 0 && sy < h && sx >= 0 && sx < w) {
        v = input.at(c, sy, sx);
      }
      buf[static_cast<std::size_t>(py) * pw + px] = v;
    }
  }
}

}  // namespace

Tensor3 conv3x3(const Tensor3& input, const Conv2dWeights& k, PadMode pad) {
  check_conv_shapes(input, k);
  const int h = input.height();
  const int w = input.width();
  const int pw = w + 2;

  std::vector<std::vector<float>> padded(k.in_channels,
                                         std::vector<float>(static_cast<std::size_t>(h + 2) * pw));
  for (int i = 0; i < k.in_channels; ++i) {
    fill_padded(input, i, pad, padded[i]);
  }

  Tensor3 out(k.out_channels, h, w);
  std::vector<double> acc(static_cast<std::size_t>(h) * w);
  for (int o = 0; o < k.out_channels; ++o) {
    std::fill(acc.begin(), acc.end(), static_cast<double>(k.bias[o]));
    for (int i = 0; i < k.in_channels; ++i) {
      const float* p = padded[i].data();
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          double s = 0.0;
          for (int ky = 0; ky < 3; ++ky) {
            const float* row = p + static_cast<std::size_t>(y + ky) * pw + x;
            s += static_cast<double>(k.w(o, i, ky, 0)) * row[0] +
                 static_cast<double>(k.w(o, i, ky, 1)) * row[1] +
                 static_cast<double>(k.w(o, i, ky, 2)) * row[2];
          }
          acc[static_cast<std::size_t>(y) * w + x] += s;
        }
      }
    }
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        out.at(o, y, x) = static_cast<float>(acc[static_cast<std::size_t>(y) * w + x]);
      }
    }
  }
  return out;
}

Tensor3 conv3x3_input_grad(const Tensor3& grad_out, const Conv2dWeights& k, PadMode pad) {
  if (grad_out.channels() != k.out_channels) {
    raise(ErrorCategory::ShapeMismatch,
          "conv gradient expects " + std::to_string(k.out_channels) + " channels, got " +
              grad_out.shape_string());
  }
  const int h = grad_out.height();
  const int w = grad_out.width();
  const int pw = w + 2;

  Tensor3 gin(k.in_channels, h, w);
  std::vector<double> gpad(static_cast<std::size_t>(h + 2) * pw);
  std::vector<double> gacc(static_cast<std::size_t>(h) * w);

  for (int i = 0; i < k.in_channels; ++i) {
    std::fill(gpad.begin(), gpad.end(), 0.0);
    // Scatter into the padded gradient with the same index pattern the
    // forward pass gathers from; this is the exact adjoint.
    for (int o = 0; o < k.out_channels; ++o) {
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          const double g = grad_out.at(o, y, x);
          if (g == 0.0) continue;
          for (int ky = 0; ky < 3; ++ky) {
            double* row = gpad.data() + static_cast<std::size_t>(y + ky) * pw + x;
            row[0] += static_cast<double>(k.w(o, i, ky, 0)) * g;
            row[1] += static_cast<double>(k.w(o, i, ky, 1)) * g;
            row[2] += static_cast<double>(k.w(o, i, ky, 2)) * g;
          }
        }
      }
    }
    // Fold padded coordinates back onto their source pixels.
    std::fill(gacc.begin(), gacc.end(), 0.0);
    for (int py = 0; py < h + 2; ++py) {
      for (int px = 0; px < pw; ++px) {
        const double g = gpad[static_cast<std::size_t>(py) * pw + px];
        if (g == 0.0) continue;
        const int sy = py - 1;
        const int sx = px - 1;
        int ty;
        int tx;
        if (pad == PadMode::Reflect) {
          ty = reflect_index(sy, h);
          tx = reflect_index(sx, w);
        } else {
          if (sy < 0 || sy >= h || sx < 0 || sx >= w) continue;
          ty = sy;
          tx = sx;
        }
        gacc[static_cast<std::size_t>(ty) * w + tx] += g;
      }
    }
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        gin.at(i, y, x) = static_cast<float>(gacc[static_cast<std::size_t>(y) * w + x]);
      }
    }
  }
  return gin;
}

const TinyWeights& tiny_weights() {
  static const TinyWeights weights = [] {
    TinyWeights tw;
    tw.conv1.out_channels = 8;
    tw.conv1.in_channels = 3;
    tw.conv1.weights.resize(8 * 3 * 9);
    tw.conv1.bias.resize(8);
    for (int o = 0; o < 8; ++o) {
      tw.conv1.bias[o] = static_cast<float>((o % 7 - 3) / 10.0);
      for (int i = 0; i < 3; ++i) {
        for (int ky = 0; ky < 3; ++ky) {
          for (int kx = 0; kx < 3; ++kx) {
            const int m = (31 * o + 17 * i + 5 * ky + kx) % 11;
            tw.conv1.weights[((o * 3 + i) * 3 + ky) * 3 + kx] =
                static_cast<float>((m - 5) / 20.0);
          }
        }
      }
    }
    tw.conv2.out_channels = 16;
    tw.conv2.in_channels = 8;
    tw.conv2.weights.resize(16 * 8 * 9);
    tw.conv2.bias.resize(16);
    for (int o = 0; o < 16; ++o) {
      tw.conv2.bias[o] = static_cast<float>((o % 5 - 2) / 10.0);
      for (int i = 0; i < 8; ++i) {
        for (int ky = 0; ky < 3; ++ky) {
          for (int kx = 0; kx < 3; ++kx) {
            const int m = (29 * o + 13 * i + 7 * ky + 3 * kx) % 11;
            tw.conv2.weights[((o * 8 + i) * 3 + ky) * 3 + kx] =
                static_cast<float>((m - 5) / 20.0);
          }
        }
      }
    }
    return tw;
  }();
  return weights;
}

namespace {

Tensor3 relu(const Tensor3& t) {
  Tensor3 out(t.channels(), t.height(), t.width());
  for (std::size_t i = 0; i < t.size(); ++i) {
    out.values()[i] = std::max(t.values()[i], 0.0f);
  }
  return out;
}

// g where pre > 0, else 0; the subgradient at exactly 0 is 0.
Tensor3 relu_mask(const Tensor3& g, const Tensor3& pre) {
  Tensor3 out(g.channels(), g.height(), g.width());
  for (std::size_t i = 0; i < g.size(); ++i) {
    out.values()[i] = pre.values()[i] > 0.0f ? g.values()[i] : 0.0f;
  }
  return out;
}

Tensor3 add(const Tensor3& a, const Tensor3& b) {
  Tensor3 out(a.channels(), a.height(), a.width());
  for (std::size_t i = 0; i < a.size(); ++i) {
    out.values()[i] =
        static_cast<float>(static_cast<double>(a.values()[i]) + b.values()[i]);
  }
  return out;
}

class TinyExtractor final : public FeatureExtractor {
 public:
  std::vector<std::string> layer_names() const override { return {"relu1", "relu2"}; }

  FeatureSet extract(const Tensor3& img, std::span<const std::string> layers) const override {
    require_rgb(img);
    bool want1 = false;
    bool want2 = false;
    for (const auto& name : layers) {
      if (name == "relu1") {
        want1 = true;
      } else if (name == "relu2") {
        want2 = true;
      } else {
        raise(ErrorCategory::UnknownLayer, "tiny backend has no layer \"" + name + "\"");
      }
    }
    const TinyWeights& tw = tiny_weights();
    FeatureSet out;
    Tensor3 relu1 = relu(conv3x3(img, tw.conv1, PadMode::Reflect));
    if (want2) {
      out.emplace("relu2", relu(conv3x3(relu1, tw.conv2, PadMode::Reflect)));
    }
    if (want1) {
      out.emplace("relu1", std::move(relu1));
    }
    return out;
  }

  Tensor3 backward(const Tensor3& img, const LayerGradients& grads) const override {
    require_rgb(img);
    const Tensor3* g_relu1 = nullptr;
    const Tensor3* g_relu2 = nullptr;
    for (const auto& [name, g] : grads) {
      if (name == "relu1") {
        g_relu1 = &g;
      } else if (name == "relu2") {
        g_relu2 = &g;
      } else {
        raise(ErrorCategory::UnknownLayer, "tiny backend has no layer \"" + name + "\"");
      }
    }

    const TinyWeights& tw = tiny_weights();
    const Tensor3 pre1 = conv3x3(img, tw.conv1, PadMode::Reflect);
    Tensor3 d_relu1(8, img.height(), img.width());

    if (g_relu2) {
      const Tensor3 relu1 = relu(pre1);
      const Tensor3 pre2 = conv3x3(relu1, tw.conv2, PadMode::Reflect);
      if (!g_relu2->same_shape(pre2)) {
        raise(ErrorCategory::ShapeMismatch,
              "relu2 gradient shape " + g_relu2->shape_string() + " does not match " +
                  pre2.shape_string());
      }
      d_relu1 = conv3x3_input_grad(relu_mask(*g_relu2, pre2), tw.conv2, PadMode::Reflect);
    }
    if (g_relu1) {
      if (!g_relu1->same_shape(pre1)) {
        raise(ErrorCategory::ShapeMismatch,
              "relu1 gradient shape " + g_relu1->shape_string() + " does not match " +
                  pre1.shape_string());
      }
      d_relu1 = add(d_relu1, *g_relu1);
    }
    return conv3x3_input_grad(relu_mask(d_relu1, pre1), tw.conv1, PadMode::Reflect);
  }

 private:
  static void require_rgb(const Tensor3& img) {
    if (img.channels() != 3) {
      raise(ErrorCategory::ShapeMismatch,
            "tiny backend expects a 3-channel input, got " + img.shape_string());
    }
  }
};

}  // namespace

ResolvedLayers resolve_layers(const ExtractorSpec& spec, const FeatureExtractor& extractor) {
  ResolvedLayers r;
  r.style_layers = spec.style_layers;
  r.content_layer = spec.content_layer;
  if (spec.backend_id == "tiny") {
    if (r.style_layers.empty()) r.style_layers = {"relu1", "relu2"};
    if (r.content_layer.empty()) r.content_layer = "relu2";
  } else {
    if (r.style_layers.empty() || r.content_layer.empty()) {
      raise(ErrorCategory::OutOfRange,
            "pretrained backends require explicit style_layers and content_layer");
    }
  }
  std::vector<std::string> names = extractor.layer_names();
  std::set<std::string> known(names.begin(), names.end());
  auto check = [&](const std::string& layer) {
    if (!known.count(layer)) {
      raise(ErrorCategory::UnknownLayer,
            "backend \"" + spec.backend_id + "\" has no layer \"" + layer + "\"");
    }
  };
  for (const auto& layer : r.style_layers) check(layer);
  check(r.content_layer);
  return r;
}

std::unique_ptr<FeatureExtractor> make_extractor(const ExtractorSpec& spec) {
  std::unique_ptr<FeatureExtractor> ex;
  if (spec.backend_id == "tiny") {
    ex = std::make_unique<TinyExtractor>();
  } else if (spec.backend_id.rfind("pretrained:", 0) == 0 && spec.backend_id.size() > 11) {
    ex = make_pretrained_extractor(spec.pretrained_model);
  } else {
    raise(ErrorCategory::OutOfRange,
          "feature_backend must be \"tiny\" or \"pretrained:<name>\", got \"" +
              spec.backend_id + "\"");
  }
  resolve_layers(spec, *ex);  // validates the layer selection
  return ex;
}

}  // namespace depthstyle
