#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "gpst/complexity.hpp"
#include "gpst/errors.hpp"
#include "gpst/image.hpp"

namespace gpst {

inline constexpr float kSigmaEps = 1e-4f;
inline constexpr float kRhoEps = 1e-4f;

// The five geometric parameters of one token, in the continuous image frame
// [0,W]x[0,H]; pixel (i,j) is sampled at its center (i+0.5, j+0.5).
struct GaussianGeom {
  float sigma_x = 1.0f;  // > 0, pixels
  float sigma_y = 1.0f;  // > 0, pixels
  float rho = 0.0f;      // in (-1, 1)
  float mu_x = 0.0f;     // pixels
  float mu_y = 0.0f;     // pixels
  bool operator==(const GaussianGeom&) const = default;
};

struct Token {
  GaussianGeom geom;
  std::vector<float> f;  // texture feature vector, c_f channels
  bool operator==(const Token&) const = default;
};

struct TokenSet {
  std::vector<Token> tokens;
  int width = 0;
  int height = 0;
  float s = 5.0f;  // truncation support factor

  int channels() const { return tokens.empty() ? 0 : static_cast<int>(tokens[0].f.size()); }
  bool operator==(const TokenSet&) const = default;
};

// Unnormalized correlated 2D Gaussian, zeroed outside the truncation box
// |x-mu_x| <= s*sigma_x, |y-mu_y| <= s*sigma_y. Result lies in [0, 1].
inline double eval_gaussian(const GaussianGeom& g, double x, double y, double s) {
  const double dx = x - g.mu_x;
  const double dy = y - g.mu_y;
  const double sx = g.sigma_x;
  const double sy = g.sigma_y;
  if (std::abs(dx) > s * sx || std::abs(dy) > s * sy) return 0.0;
  const double rho = g.rho;
  const double a = 1.0 / (1.0 - rho * rho);
  const double q = a * (dx * dx / (sx * sx) - 2.0 * rho * dx * dy / (sx * sy) +
                        dy * dy / (sy * sy));
  return std::exp(-0.5 * q);
}

// Clamps a candidate geometry into the valid parameter box. The mean may hang
// off-image by up to s*max(sigma_x, sigma_y) per axis.
inline GaussianGeom clamp_geom(const GaussianGeom& g, int width, int height, float s) {
  if (!std::isfinite(g.sigma_x) || !std::isfinite(g.sigma_y) || !std::isfinite(g.rho) ||
      !std::isfinite(g.mu_x) || !std::isfinite(g.mu_y))
    throw NonFiniteParameter("gaussian parameter is not finite");
  GaussianGeom out = g;
  const float sigma_cap = static_cast<float>(std::max(width, height));
  out.sigma_x = std::clamp(out.sigma_x, kSigmaEps, sigma_cap);
  out.sigma_y = std::clamp(out.sigma_y, kSigmaEps, sigma_cap);
  out.rho = std::clamp(out.rho, -1.0f + kRhoEps, 1.0f - kRhoEps);
  const float margin = s * std::max(out.sigma_x, out.sigma_y);
  out.mu_x = std::clamp(out.mu_x, -margin, static_cast<float>(width) + margin);
  out.mu_y = std::clamp(out.mu_y, -margin, static_cast<float>(height) + margin);
  return out;
}

// Per-region initialization {w/6, h/6, 0, center_x, center_y}. Features are
// the region mean color (in [0,1] scale) when an image is supplied, else 0.
inline TokenSet init_from_regions(const std::vector<Region>& regions, int c_f, float s,
                                  const RasterImage* img = nullptr) {
  if (regions.empty()) throw InvalidInput("region list is empty");
  if (c_f < 1) throw InvalidInput("c_f must be >= 1");

  TokenSet ts;
  ts.s = s;
  for (const Region& r : regions) {
    ts.width = std::max(ts.width, r.x2);
    ts.height = std::max(ts.height, r.y2);
  }
  if (img && (img->width != ts.width || img->height != ts.height))
    throw InvalidInput("image size does not match the region tiling");
  if (img && img->channels != c_f)
    throw InvalidInput("c_f must equal the image channel count for mean-color init");

  ts.tokens.reserve(regions.size());
  for (const Region& r : regions) {
    Token t;
    t.geom.sigma_x = std::max(static_cast<float>(r.width()) / 6.0f, kSigmaEps);
    t.geom.sigma_y = std::max(static_cast<float>(r.height()) / 6.0f, kSigmaEps);
    t.geom.rho = 0.0f;
    t.geom.mu_x = static_cast<float>(r.x1 + r.x2) / 2.0f;
    t.geom.mu_y = static_cast<float>(r.y1 + r.y2) / 2.0f;
    t.f.assign(c_f, 0.0f);
    if (img) {
      for (int c = 0; c < c_f; ++c) {
        double acc = 0.0;
        for (int y = r.y1; y < r.y2; ++y)
          for (int x = r.x1; x < r.x2; ++x) acc += img->at(x, y, c);
        t.f[c] = static_cast<float>(acc / (255.0 * r.area()));
      }
    }
    ts.tokens.push_back(std::move(t));
  }
  return ts;
}

}  // namespace gpst
