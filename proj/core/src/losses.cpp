#include "depthstyle/losses.hpp"

#include <cmath>
#include <string>

#include "depthstyle/error.hpp"
#include "depthstyle/resize.hpp"

namespace depthstyle {

GramMatrix gram(const Tensor3& f) {
  const int c = f.channels();
  const std::size_t m = static_cast<std::size_t>(f.height()) * f.width();
  GramMatrix g(c);
  std::span<const float> v = f.values();
  for (int j = 0; j < c; ++j) {
    const float* row_j = v.data() + static_cast<std::size_t>(j) * m;
    for (int k = j; k < c; ++k) {
      const float* row_k = v.data() + static_cast<std::size_t>(k) * m;
      double acc = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        acc += static_cast<double>(row_j[i]) * row_k[i];
      }
      g.at(j, k) = acc;
      g.at(k, j) = acc;  // exact symmetry by construction
    }
  }
  return g;
}

void validate(const LossWeights& w) {
  const double parts[] = {w.content, w.style, w.tv, w.kappa};
  const char* names[] = {"content_weight", "style_weight", "tv_weight", "kappa"};
  for (int i = 0; i < 4; ++i) {
    if (!std::isfinite(parts[i]) || parts[i] < 0.0) {
      raise(ErrorCategory::OutOfRange,
            std::string(names[i]) + " must be finite and >= 0");
    }
  }
}

std::pair<double, LayerGradients> style_loss(const FeatureSet& x_feats,
                                             const GramTargets& s_grams) {
  if (x_feats.size() != s_grams.size()) {
    raise(ErrorCategory::LayerMismatch,
          "style loss got " + std::to_string(x_feats.size()) + " feature layers but " +
              std::to_string(s_grams.size()) + " target Gram layers");
  }
  for (const auto& [name, g] : s_grams) {
    if (!x_feats.count(name)) {
      raise(ErrorCategory::LayerMismatch, "no features for style layer \"" + name + "\"");
    }
  }

  const double inv_layers = 1.0 / static_cast<double>(s_grams.size());
  double total = 0.0;
  LayerGradients grads;
  for (const auto& [name, target] : s_grams) {
    const Tensor3& f = x_feats.at(name);
    const int c = f.channels();
    const std::size_t m = static_cast<std::size_t>(f.height()) * f.width();
    if (c != target.channels) {
      raise(ErrorCategory::ChannelMismatch,
            "layer \"" + name + "\" has " + std::to_string(c) + " channels but its target Gram has " +
                std::to_string(target.channels));
    }

    GramMatrix gx = gram(f);
    GramMatrix diff(c);
    double sq = 0.0;
    for (std::size_t i = 0; i < diff.values.size(); ++i) {
      const double d = gx.values[i] - target.values[i];
      diff.values[i] = d;
      sq += d * d;
    }
    const double nm = static_cast<double>(c) * static_cast<double>(m);
    const double norm = 1.0 / (nm * nm);
    total += inv_layers * 0.25 * norm * sq;

    // dE/dF = norm * diff * F on the C x M flattening, scaled by 1/L.
    Tensor3 grad(c, f.height(), f.width());
    std::span<const float> fv = f.values();
    std::span<float> gv = grad.values();
    const double scale = inv_layers * norm;
    for (int j = 0; j < c; ++j) {
      for (int k = 0; k < c; ++k) {
        const double w = scale * diff.at(j, k);
        if (w == 0.0) continue;
        const float* src = fv.data() + static_cast<std::size_t>(k) * m;
        float* dst = gv.data() + static_cast<std::size_t>(j) * m;
        for (std::size_t i = 0; i < m; ++i) {
          dst[i] = static_cast<float>(dst[i] + w * src[i]);
        }
      }
    }
    grads.emplace(name, std::move(grad));
  }
  return {total, std::move(grads)};
}

std::pair<double, Tensor3> content_loss(const Tensor3& f, const Tensor3& p,
                                        const Tensor3* mask, double kappa) {
  require_same_shape(f, p, "content loss features");
  const bool masked = mask != nullptr && kappa != 0.0;
  if (masked && (mask->height() != f.height() || mask->width() != f.width())) {
    raise(ErrorCategory::ShapeMismatch,
          "content-loss mask is " + mask->shape_string() + " but features are " + f.shape_string());
  }

  Tensor3 grad(f.channels(), f.height(), f.width());
  double loss = 0.0;
  for (int c = 0; c < f.channels(); ++c) {
    for (int y = 0; y < f.height(); ++y) {
      for (int x = 0; x < f.width(); ++x) {
        const double m = masked ? 1.0 + kappa * mask->at(0, y, x) : 1.0;
        const double d = static_cast<double>(f.at(c, y, x)) - p.at(c, y, x);
        loss += 0.5 * m * d * d;
        grad.at(c, y, x) = static_cast<float>(m * d);
      }
    }
  }
  return {loss, std::move(grad)};
}

std::pair<double, Tensor3> tv_loss(const Tensor3& img) {
  const int h = img.height();
  const int w = img.width();
  Tensor3 grad(img.channels(), h, w);
  std::vector<double> acc(img.size(), 0.0);
  double loss = 0.0;
  for (int c = 0; c < img.channels(); ++c) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if (x + 1 < w) {
          const double d = static_cast<double>(img.at(c, y, x + 1)) - img.at(c, y, x);
          loss += d * d;
          acc[img.index(c, y, x + 1)] += 2.0 * d;
          acc[img.index(c, y, x)] -= 2.0 * d;
        }
        if (y + 1 < h) {
          const double d = static_cast<double>(img.at(c, y + 1, x)) - img.at(c, y, x);
          loss += d * d;
          acc[img.index(c, y + 1, x)] += 2.0 * d;
          acc[img.index(c, y, x)] -= 2.0 * d;
        }
      }
    }
  }
  std::span<float> gv = grad.values();
  for (std::size_t i = 0; i < acc.size(); ++i) {
    gv[i] = static_cast<float>(acc[i]);
  }
  return {loss, std::move(grad)};
}

StyleTargets compute_targets(const FeatureExtractor& extractor, const ResolvedLayers& layers,
                             const Tensor3& content, const Tensor3& style) {
  StyleTargets t;
  const std::string content_layer[] = {layers.content_layer};
  t.content_features = extractor.extract(content, content_layer).at(layers.content_layer);
  FeatureSet style_feats = extractor.extract(style, layers.style_layers);
  for (const auto& [name, f] : style_feats) {
    t.style_grams.emplace(name, gram(f));
  }
  return t;
}

std::pair<LossReport, Tensor3> total_loss(const Tensor3& x, const StyleTargets& targets,
                                          const LossWeights& weights,
                                          const FeatureExtractor& extractor,
                                          const ResolvedLayers& layers,
                                          const std::optional<NormalizedDepth>& mask) {
  validate(weights);

  // One forward pass covering the content layer and every style layer.
  std::vector<std::string> wanted = layers.style_layers;
  bool content_in_style = false;
  for (const auto& name : wanted) {
    if (name == layers.content_layer) content_in_style = true;
  }
  if (!content_in_style) wanted.push_back(layers.content_layer);
  FeatureSet feats = extractor.extract(x, wanted);

  const Tensor3& fc = feats.at(layers.content_layer);
  std::optional<Tensor3> resized_mask;
  const Tensor3* mask_ptr = nullptr;
  if (mask.has_value() && weights.kappa != 0.0) {
    if (mask->height() == fc.height() && mask->width() == fc.width()) {
      mask_ptr = &mask->tensor();
    } else {
      resized_mask = resize_bilinear(mask->tensor(), fc.height(), fc.width());
      mask_ptr = &*resized_mask;
    }
  }
  auto [c_loss, c_grad] = content_loss(fc, targets.content_features, mask_ptr, weights.kappa);

  FeatureSet style_feats;
  for (const auto& name : layers.style_layers) {
    style_feats.emplace(name, feats.at(name));
  }
  auto [s_loss, s_grads] = style_loss(style_feats, targets.style_grams);

  auto [t_loss, t_grad] = tv_loss(x);

  // Weighted feature gradients; the content layer may also be a style layer,
  // in which case the two contributions accumulate.
  LayerGradients weighted;
  for (auto& [name, g] : s_grads) {
    for (float& v : g.values()) {
      v = static_cast<float>(weights.style * v);
    }
    weighted.emplace(name, std::move(g));
  }
  {
    auto it = weighted.find(layers.content_layer);
    if (it == weighted.end()) {
      for (float& v : c_grad.values()) {
        v = static_cast<float>(weights.content * v);
      }
      weighted.emplace(layers.content_layer, std::move(c_grad));
    } else {
      std::span<float> dst = it->second.values();
      std::span<const float> src = c_grad.values();
      for (std::size_t i = 0; i < dst.size(); ++i) {
        dst[i] = static_cast<float>(dst[i] + weights.content * src[i]);
      }
    }
  }

  Tensor3 pixel_grad = extractor.backward(x, weighted);
  {
    std::span<float> dst = pixel_grad.values();
    std::span<const float> src = t_grad.values();
    for (std::size_t i = 0; i < dst.size(); ++i) {
      dst[i] = static_cast<float>(dst[i] + weights.tv * src[i]);
    }
  }

  LossReport report;
  report.content = c_loss;
  report.style = s_loss;
  report.tv = t_loss;
  report.total = weights.content * c_loss + weights.style * s_loss + weights.tv * t_loss;
  return {report, std::move(pixel_grad)};
}

}  // namespace depthstyle
