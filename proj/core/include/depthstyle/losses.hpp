#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "depthstyle/depth.hpp"
#include "depthstyle/features.hpp"
#include "depthstyle/tensor.hpp"

namespace depthstyle {

// Channel-by-channel inner products of a flattened feature map:
// G[j][k] = sum_m F[j][m] * F[k][m] over the M = H*W spatial positions,
// unnormalized. Accumulated and stored in double; symmetric and PSD by
// construction.
struct GramMatrix {
  int channels = 0;
  std::vector<double> values;  // row-major channels x channels

  GramMatrix() = default;
  explicit GramMatrix(int c) : channels(c), values(static_cast<std::size_t>(c) * c, 0.0) {}

  double& at(int j, int k) { return values[static_cast<std::size_t>(j) * channels + k]; }
  double at(int j, int k) const { return values[static_cast<std::size_t>(j) * channels + k]; }
};

GramMatrix gram(const Tensor3& f);

using GramTargets = std::map<std::string, GramMatrix>;

struct LossWeights {
  double content = 1.0;
  double style = 1e3;
  double tv = 1e-3;
  double kappa = 0.0;  // depth-mask strength on the content term
};

// Throws OutOfRange unless every component is finite and >= 0.
void validate(const LossWeights& w);

// Raw per-term values plus their weighted combination:
// total = w_content*content + w_style*style + w_tv*tv.
struct LossReport {
  double total = 0.0;
  double content = 0.0;
  double style = 0.0;
  double tv = 0.0;
};

// Mean over the L style layers of
//   E_l = 1/(4 N_l^2 M_l^2) * ||G_x - G_s||^2
// with dE_l/dF = 1/(N_l^2 M_l^2) * (G_x - G_s) F, each scaled by 1/L.
// The layer sets of x_feats and s_grams must match exactly (LayerMismatch)
// and channel counts must agree per layer (ChannelMismatch).
std::pair<double, LayerGradients> style_loss(const FeatureSet& x_feats,
                                             const GramTargets& s_grams);

// L = 1/2 sum_{c,y,x} m[y][x] * (F - P)^2 with m = 1 + kappa*mask (1 when
// mask is null or kappa is 0); gradient dL/dF = m * (F - P). The mask, when
// given, must already be at F's H x W.
std::pair<double, Tensor3> content_loss(const Tensor3& f, const Tensor3& p,
                                        const Tensor3* mask, double kappa);

// Sum of squared horizontal and vertical neighbor differences over every
// channel, with its exact analytic gradient.
std::pair<double, Tensor3> tv_loss(const Tensor3& img);

// Optimization targets, computed once per job from the content and style
// images with the same extractor and layer selection used in the loop.
struct StyleTargets {
  Tensor3 content_features;  // activation at the content layer
  GramTargets style_grams;
};

StyleTargets compute_targets(const FeatureExtractor& extractor, const ResolvedLayers& layers,
                             const Tensor3& content, const Tensor3& style);

// Full objective on pixels x (3xHxW): extracts features once, combines the
// weighted terms, and backpropagates the weighted feature gradients through
// the extractor, adding w_tv * dtv/dx. The mask, when present and kappa > 0,
// is resized here to the content layer's spatial dims.
std::pair<LossReport, Tensor3> total_loss(const Tensor3& x, const StyleTargets& targets,
                                          const LossWeights& weights,
                                          const FeatureExtractor& extractor,
                                          const ResolvedLayers& layers,
                                          const std::optional<NormalizedDepth>& mask);

}  // namespace depthstyle
