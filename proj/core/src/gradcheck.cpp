#include "depthstyle/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "depthstyle/features.hpp"
#include "depthstyle/losses.hpp"
#include "depthstyle/rng.hpp"

namespace depthstyle {

namespace {

constexpr double kStep = 1e-3;

Tensor3 random_tensor(Rng& rng, int c, int h, int w, double lo, double hi) {
  Tensor3 t(c, h, w);
  for (float& v : t.values()) {
    v = static_cast<float>(rng.next_range(lo, hi));
  }
  return t;
}

double rel_error(double analytic, double numeric) {
  if (std::abs(analytic) < 1e-6 && std::abs(numeric) < 1e-6) {
    return 0.0;  // both effectively zero; the quotient is noise
  }
  return std::abs(analytic - numeric) / std::max(std::abs(analytic), std::abs(numeric));
}

// Central difference at flat index i. The denominator uses the realized
// float-rounded step so quantization of x +- h does not bias the estimate.
template <typename F>
double central_difference(const F& f, const Tensor3& x, std::size_t i) {
  Tensor3 xp = x;
  Tensor3 xm = x;
  const double base = x.values()[i];
  xp.values()[i] = static_cast<float>(base + kStep);
  xm.values()[i] = static_cast<float>(base - kStep);
  const double span = static_cast<double>(xp.values()[i]) - static_cast<double>(xm.values()[i]);
  return (f(xp) - f(xm)) / span;
}

GradcheckResult check_content(Rng& rng) {
  const Tensor3 f = random_tensor(rng, 4, 6, 6, -1.0, 1.0);
  const Tensor3 p = random_tensor(rng, 4, 6, 6, -1.0, 1.0);
  const Tensor3 mask = random_tensor(rng, 1, 6, 6, 0.0, 1.0);
  const double kappa = 0.7;

  auto [loss, grad] = content_loss(f, p, &mask, kappa);
  auto value = [&](const Tensor3& x) { return content_loss(x, p, &mask, kappa).first; };

  GradcheckResult r{"content", 0.0, static_cast<int>(f.size())};
  for (std::size_t i = 0; i < f.size(); ++i) {
    r.max_rel_error =
        std::max(r.max_rel_error, rel_error(grad.values()[i], central_difference(value, f, i)));
  }
  return r;
}

GradcheckResult check_style(Rng& rng) {
  FeatureSet x_feats;
  x_feats.emplace("a", random_tensor(rng, 2, 3, 3, -1.0, 1.0));
  x_feats.emplace("b", random_tensor(rng, 3, 2, 2, -1.0, 1.0));
  GramTargets targets;
  targets.emplace("a", gram(random_tensor(rng, 2, 3, 3, -1.0, 1.0)));
  targets.emplace("b", gram(random_tensor(rng, 3, 2, 2, -1.0, 1.0)));

  auto [loss, grads] = style_loss(x_feats, targets);

  GradcheckResult r{"style", 0.0, 0};
  for (const auto& [name, f] : x_feats) {
    auto value = [&](const Tensor3& x) {
      FeatureSet probe = x_feats;
      probe.at(name) = x;
      return style_loss(probe, targets).first;
    };
    const Tensor3& g = grads.at(name);
    for (std::size_t i = 0; i < f.size(); ++i) {
      r.max_rel_error =
          std::max(r.max_rel_error, rel_error(g.values()[i], central_difference(value, f, i)));
    }
    r.samples += static_cast<int>(f.size());
  }
  return r;
}

GradcheckResult check_tv(Rng& rng) {
  const Tensor3 img = random_tensor(rng, 3, 5, 5, 0.0, 1.0);
  auto [loss, grad] = tv_loss(img);
  auto value = [](const Tensor3& x) { return tv_loss(x).first; };

  GradcheckResult r{"tv", 0.0, static_cast<int>(img.size())};
  for (std::size_t i = 0; i < img.size(); ++i) {
    r.max_rel_error =
        std::max(r.max_rel_error, rel_error(grad.values()[i], central_difference(value, img, i)));
  }
  return r;
}

// ---- double-precision forward path for the full-objective check ----
//
// The production forward stores activations as float32, which leaves
// ~1e-4 of rounding noise on a loss of O(10) -- enough to swamp a central
// difference at pixels whose gradient is small. The finite differences for
// the "total" term therefore run through this double-precision replica of
// the reference extractor and loss stack (same weights, same formulas).

struct DTensor {
  int c = 0;
  int h = 0;
  int w = 0;
  std::vector<double> v;

  DTensor(int c_, int h_, int w_)
      : c(c_), h(h_), w(w_), v(static_cast<std::size_t>(c_) * h_ * w_, 0.0) {}

  double& at(int ci, int y, int x) {
    return v[(static_cast<std::size_t>(ci) * h + y) * w + x];
  }
  double at(int ci, int y, int x) const {
    return v[(static_cast<std::size_t>(ci) * h + y) * w + x];
  }
};

DTensor lift(const Tensor3& t) {
  DTensor d(t.channels(), t.height(), t.width());
  for (std::size_t i = 0; i < t.size(); ++i) {
    d.v[i] = t.values()[i];
  }
  return d;
}

DTensor dconv3x3_reflect(const DTensor& in, const Conv2dWeights& k) {
  DTensor out(k.out_channels, in.h, in.w);
  for (int o = 0; o < k.out_channels; ++o) {
    for (int y = 0; y < in.h; ++y) {
      for (int x = 0; x < in.w; ++x) {
        double acc = k.bias[o];
        for (int i = 0; i < k.in_channels; ++i) {
          for (int ky = 0; ky < 3; ++ky) {
            for (int kx = 0; kx < 3; ++kx) {
              acc += static_cast<double>(k.w(o, i, ky, kx)) *
                     in.at(i, reflect_index(y + ky - 1, in.h), reflect_index(x + kx - 1, in.w));
            }
          }
        }
        out.at(o, y, x) = acc;
      }
    }
  }
  return out;
}

struct DForward {
  DTensor relu1;
  DTensor relu2;
};

DForward dforward(const DTensor& x) {
  const TinyWeights& tw = tiny_weights();
  DForward f{dconv3x3_reflect(x, tw.conv1), DTensor(1, 1, 1)};
  for (double& v : f.relu1.v) {
    v = std::max(v, 0.0);
  }
  f.relu2 = dconv3x3_reflect(f.relu1, tw.conv2);
  for (double& v : f.relu2.v) {
    v = std::max(v, 0.0);
  }
  return f;
}

// Activation sign pattern. The pre-activations are linear in any single
// pixel, so equal patterns at both finite-difference endpoints prove the
// objective is smooth on the whole interval.
std::vector<bool> dpattern(const DForward& f) {
  std::vector<bool> p;
  p.reserve(f.relu1.v.size() + f.relu2.v.size());
  for (double v : f.relu1.v) p.push_back(v > 0.0);
  for (double v : f.relu2.v) p.push_back(v > 0.0);
  return p;
}

double dstyle_term(const DTensor& f, const GramMatrix& target) {
  const std::size_t m = static_cast<std::size_t>(f.h) * f.w;
  double sq = 0.0;
  for (int j = 0; j < f.c; ++j) {
    for (int k = 0; k < f.c; ++k) {
      double g = 0.0;
      const double* row_j = f.v.data() + static_cast<std::size_t>(j) * m;
      const double* row_k = f.v.data() + static_cast<std::size_t>(k) * m;
      for (std::size_t i = 0; i < m; ++i) {
        g += row_j[i] * row_k[i];
      }
      const double d = g - target.at(j, k);
      sq += d * d;
    }
  }
  const double nm = static_cast<double>(f.c) * static_cast<double>(m);
  return 0.25 / (nm * nm) * sq;
}

double dtotal(const DTensor& x, const DForward& f, const StyleTargets& targets,
              const LossWeights& weights) {
  double content = 0.0;
  for (std::size_t i = 0; i < f.relu2.v.size(); ++i) {
    const double d = f.relu2.v[i] - targets.content_features.values()[i];
    content += 0.5 * d * d;
  }

  const double style = 0.5 * (dstyle_term(f.relu1, targets.style_grams.at("relu1")) +
                              dstyle_term(f.relu2, targets.style_grams.at("relu2")));

  double tv = 0.0;
  for (int c = 0; c < x.c; ++c) {
    for (int y = 0; y < x.h; ++y) {
      for (int xx = 0; xx < x.w; ++xx) {
        if (xx + 1 < x.w) {
          const double d = x.at(c, y, xx + 1) - x.at(c, y, xx);
          tv += d * d;
        }
        if (y + 1 < x.h) {
          const double d = x.at(c, y + 1, xx) - x.at(c, y, xx);
          tv += d * d;
        }
      }
    }
  }
  return weights.content * content + weights.style * style + weights.tv * tv;
}

GradcheckResult check_total(Rng& rng) {
  const Tensor3 content = random_tensor(rng, 3, 8, 8, 0.0, 1.0);
  const Tensor3 style = random_tensor(rng, 3, 8, 8, 0.0, 1.0);
  const Tensor3 init = random_tensor(rng, 3, 8, 8, 0.0, 1.0);

  ExtractorSpec spec;
  auto extractor = make_extractor(spec);
  ResolvedLayers layers = resolve_layers(spec, *extractor);
  StyleTargets targets = compute_targets(*extractor, layers, content, style);
  LossWeights weights;
  weights.content = 1.0;
  weights.style = 1e3;
  weights.tv = 1e-3;

  const std::optional<NormalizedDepth> no_mask;
  auto [report, grad] = total_loss(init, targets, weights, *extractor, layers, no_mask);

  const DTensor base = lift(init);
  GradcheckResult r{"total", 0.0, 0};
  int attempts = 0;
  while (r.samples < 50 && attempts < 2000) {
    ++attempts;
    const std::size_t i = static_cast<std::size_t>(rng.next_u64() % init.size());
    DTensor xp = base;
    DTensor xm = base;
    xp.v[i] += kStep;
    xm.v[i] -= kStep;
    const DForward fp = dforward(xp);
    const DForward fm = dforward(xm);
    if (dpattern(fp) != dpattern(fm)) {
      // A ReLU changed state inside the interval; the central difference
      // measures the average of two different slopes there, so resample.
      continue;
    }
    const double numeric =
        (dtotal(xp, fp, targets, weights) - dtotal(xm, fm, targets, weights)) / (2.0 * kStep);
    r.max_rel_error = std::max(r.max_rel_error, rel_error(grad.values()[i], numeric));
    r.samples += 1;
  }
  return r;
}

}  // namespace

std::vector<GradcheckResult> run_gradcheck(std::uint64_t seed) {
  Rng rng(seed);
  std::vector<GradcheckResult> results;
  results.push_back(check_content(rng));
  results.push_back(check_style(rng));
  results.push_back(check_tv(rng));
  results.push_back(check_total(rng));
  return results;
}

}  // namespace depthstyle
