#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include "gpst/errors.hpp"
#include "gpst/gaussian.hpp"
#include "gpst/image.hpp"
#include "gpst/render.hpp"

namespace gpst {

struct FitConfig {
  int iters = 500;
  double lr = 2e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  int geom_freeze_iters = 50;  // features-only warmup
  uint64_t seed = 0;           // reserved; the fit itself is deterministic
  enum class Loss { mse } loss = Loss::mse;
};

struct FitReport {
  std::vector<double> loss_curve;  // one entry per completed iteration
  double final_psnr = 0.0;  // dB on [0,255] scale, 8-bit quantized reconstruction
  int iterations_run = 0;
  double wall_time = 0.0;  // seconds
};

// Mean squared error in [0,1] scale plus its gradient wrt the prediction.
// The target is rescaled from [0,255] internally.
inline std::pair<double, FeatureMap> loss_mse(const FeatureMap& pred,
                                              const RasterImage& target) {
  if (pred.width != target.width || pred.height != target.height ||
      pred.channels != target.channels)
    throw ShapeMismatch("prediction and target shapes differ");

  FeatureMap grad;
  grad.width = pred.width;
  grad.height = pred.height;
  grad.channels = pred.channels;
  grad.data.resize(pred.data.size());

  const double n = static_cast<double>(pred.data.size());
  double acc = 0.0;
  for (size_t i = 0; i < pred.data.size(); ++i) {
    const double d = pred.data[i] - target.data[i] / 255.0;
    acc += d * d;
    grad.data[i] = static_cast<float>(2.0 * d / n);
  }
  return {acc / n, std::move(grad)};
}

namespace detail {

struct Adam {
  double lr, b1, b2, eps;
  int t = 0;
  std::vector<double> m, v;

  Adam(size_t n, const FitConfig& cfg)
      : lr(cfg.lr), b1(cfg.beta1), b2(cfg.beta2), eps(cfg.eps), m(n, 0.0), v(n, 0.0) {}

  void step(std::vector<double>& params, const std::vector<double>& grads) {
    ++t;
    const double bc1 = 1.0 - std::pow(b1, t);
    const double bc2 = 1.0 - std::pow(b2, t);
    for (size_t i = 0; i < params.size(); ++i) {
      m[i] = b1 * m[i] + (1.0 - b1) * grads[i];
      v[i] = b2 * v[i] + (1.0 - b2) * grads[i] * grads[i];
      params[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps);
    }
  }
};

}  // namespace detail

// Direct gradient-based fit of token parameters against a pixel MSE loss.
// Optimizes reparameterized variables (sigma = exp(u), rho scaled through
// tanh, mu clamped each step, features in [0,1] scale) with Adam; geometry is
// frozen for the first geom_freeze_iters iterations.
inline std::pair<TokenSet, FitReport> fit(const RasterImage& img, const TokenSet& init,
                                          const FitConfig& cfg) {
  validate_image(img);
  if (init.tokens.empty()) throw InvalidInput("initial token set is empty");
  if (init.width != img.width || init.height != img.height)
    throw InvalidInput("initial token set does not cover the image dimensions");
  if (init.channels() != img.channels)
    throw InvalidInput("c_f must equal the image channel count");
  if (cfg.iters < 1 || cfg.lr <= 0.0) throw InvalidInput("invalid fit configuration");
  if (cfg.geom_freeze_iters > cfg.iters)
    throw InvalidInput("geom_freeze_iters must not exceed iters");

  const auto t_start = std::chrono::steady_clock::now();
  const int l = static_cast<int>(init.tokens.size());
  const int c = init.channels();
  const double rho_scale = 1.0 - kRhoEps;
  const double u_min = std::log(static_cast<double>(kSigmaEps));
  const double u_max = std::log(static_cast<double>(std::max(img.width, img.height)));

  // raw variables: per token 5 geometry slots (u_x, u_y, v, mu_x, mu_y)
  std::vector<double> geom(static_cast<size_t>(l) * 5);
  std::vector<double> feat(static_cast<size_t>(l) * c);
  for (int i = 0; i < l; ++i) {
    const GaussianGeom& g = init.tokens[i].geom;
    double* raw = &geom[static_cast<size_t>(i) * 5];
    raw[0] = std::clamp(std::log(static_cast<double>(g.sigma_x)), u_min, u_max);
    raw[1] = std::clamp(std::log(static_cast<double>(g.sigma_y)), u_min, u_max);
    raw[2] = std::atanh(std::clamp(g.rho / rho_scale, -1.0 + 1e-9, 1.0 - 1e-9));
    raw[3] = g.mu_x;
    raw[4] = g.mu_y;
    for (int k = 0; k < c; ++k) feat[static_cast<size_t>(i) * c + k] = init.tokens[i].f[k];
  }

  auto materialize = [&]() {
    TokenSet ts;
    ts.width = img.width;
    ts.height = img.height;
    ts.s = init.s;
    ts.tokens.resize(l);
    for (int i = 0; i < l; ++i) {
      const double* raw = &geom[static_cast<size_t>(i) * 5];
      GaussianGeom g;
      g.sigma_x = static_cast<float>(std::exp(raw[0]));
      g.sigma_y = static_cast<float>(std::exp(raw[1]));
      g.rho = static_cast<float>(rho_scale * std::tanh(raw[2]));
      g.mu_x = static_cast<float>(raw[3]);
      g.mu_y = static_cast<float>(raw[4]);
      ts.tokens[i].geom = clamp_geom(g, img.width, img.height, ts.s);
      ts.tokens[i].f.resize(c);
      for (int k = 0; k < c; ++k)
        ts.tokens[i].f[k] = static_cast<float>(feat[static_cast<size_t>(i) * c + k]);
    }
    return ts;
  };

  detail::Adam feat_adam(feat.size(), cfg);
  detail::Adam geom_adam(geom.size(), cfg);
  std::vector<double> geom_grad(geom.size());
  std::vector<double> feat_grad(feat.size());

  FitReport report;
  TokenSet current = materialize();
  TokenSet last_finite = current;

  for (int it = 0; it < cfg.iters; ++it) {
    FeatureMap pred = render(current);
    auto [loss, upstream] = loss_mse(pred, img);
    if (!std::isfinite(loss)) {
      if (report.loss_curve.empty())
        throw NonFiniteLoss("loss is not finite at the initial parameters");
      current = last_finite;  // abort with the last finite state
      break;
    }
    report.loss_curve.push_back(loss);
    last_finite = current;

    TokenGradients grads = backward(current, upstream);
    for (int i = 0; i < l; ++i) {
      const TokenGradient& tg = grads[i];
      const GaussianGeom& g = current.tokens[i].geom;
      double* raw = &geom[static_cast<size_t>(i) * 5];
      double* gg = &geom_grad[static_cast<size_t>(i) * 5];
      // chain through sigma = exp(u) and rho = rho_scale * tanh(v)
      gg[0] = tg.d_sigma_x * g.sigma_x;
      gg[1] = tg.d_sigma_y * g.sigma_y;
      const double th = std::tanh(raw[2]);
      gg[2] = tg.d_rho * rho_scale * (1.0 - th * th);
      gg[3] = tg.d_mu_x;
      gg[4] = tg.d_mu_y;
      for (int k = 0; k < c; ++k) feat_grad[static_cast<size_t>(i) * c + k] = tg.d_f[k];
    }

    feat_adam.step(feat, feat_grad);
    if (it >= cfg.geom_freeze_iters) {
      geom_adam.step(geom, geom_grad);
      for (int i = 0; i < l; ++i) {
        double* raw = &geom[static_cast<size_t>(i) * 5];
        raw[0] = std::clamp(raw[0], u_min, u_max);
        raw[1] = std::clamp(raw[1], u_min, u_max);
        const double margin =
            static_cast<double>(init.s) * std::max(std::exp(raw[0]), std::exp(raw[1]));
        raw[3] = std::clamp(raw[3], -margin, img.width + margin);
        raw[4] = std::clamp(raw[4], -margin, img.height + margin);
      }
    }
    current = materialize();
  }

  report.iterations_run = static_cast<int>(report.loss_curve.size());

  // Final quality is measured on the 8-bit quantized reconstruction, the
  // exact bytes a decode-to-image emits.
  FeatureMap pred = render(current);
  double mse = 0.0;
  for (size_t i = 0; i < pred.data.size(); ++i) {
    const float v = std::clamp(pred.data[i] * 255.0f, 0.0f, 255.0f);
    const double d = static_cast<double>(detail::quantize_u8(v)) - img.data[i];
    mse += d * d;
  }
  mse /= static_cast<double>(pred.data.size());
  report.final_psnr = mse > 0.0 ? 10.0 * std::log10(255.0 * 255.0 / mse)
                                : std::numeric_limits<double>::infinity();
  report.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return {std::move(current), std::move(report)};
}

}  // namespace gpst
