#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "gpst/gaussian.hpp"
#include "gpst/parallel.hpp"

namespace gpst {

struct FeatureMap {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<float> data;  // row-major H x W x k

  float at(int x, int y, int k = 0) const {
    return data[(static_cast<size_t>(y) * width + x) * channels + k];
  }
  float& at(int x, int y, int k = 0) {
    return data[(static_cast<size_t>(y) * width + x) * channels + k];
  }
};

struct TokenGradient {
  double d_sigma_x = 0.0;
  double d_sigma_y = 0.0;
  double d_rho = 0.0;
  double d_mu_x = 0.0;
  double d_mu_y = 0.0;
  std::vector<double> d_f;
};

using TokenGradients = std::vector<TokenGradient>;

namespace detail {

// Pixel index range [lo, hi] whose centers may fall inside the truncation box
// along one axis, widened by one pixel so eval_gaussian stays the sole
// authority on membership.
inline std::pair<int, int> support_range(double mu, double radius, int extent) {
  int lo = static_cast<int>(std::ceil(mu - radius - 0.5)) - 1;
  int hi = static_cast<int>(std::floor(mu + radius - 0.5)) + 1;
  return {std::max(lo, 0), std::min(hi, extent - 1)};
}

}  // namespace detail

// Reference splatting renderer: per pixel, tokens are accumulated in
// ascending index order into a 64-bit sum, stored as 32-bit. The fast path
// must match this bitwise.
inline FeatureMap render_naive(const TokenSet& ts) {
  const int w = ts.width, h = ts.height, c = ts.channels();
  FeatureMap out;
  out.width = w;
  out.height = h;
  out.channels = std::max(c, 1);
  out.data.assign(static_cast<size_t>(w) * h * out.channels, 0.0f);
  if (c == 0) return out;

  std::vector<double> acc(c);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      std::fill(acc.begin(), acc.end(), 0.0);
      const double px = x + 0.5, py = y + 0.5;
      for (const Token& t : ts.tokens) {
        const double g = eval_gaussian(t.geom, px, py, ts.s);
        for (int k = 0; k < c; ++k) acc[k] += g * t.f[k];
      }
      for (int k = 0; k < c; ++k)
        out.at(x, y, k) = static_cast<float>(acc[k]);
    }
  }
  return out;
}

// Tiled splatting renderer. Parallelism is over disjoint output tiles; within
// a tile, tokens whose truncation box intersects it are accumulated in
// ascending index order, so the output is bit-identical to render_naive and
// independent of the thread count.
inline FeatureMap render(const TokenSet& ts) {
  const int w = ts.width, h = ts.height, c = ts.channels();
  FeatureMap out;
  out.width = w;
  out.height = h;
  out.channels = std::max(c, 1);
  out.data.assign(static_cast<size_t>(w) * h * out.channels, 0.0f);
  if (c == 0 || ts.tokens.empty()) return out;

  struct Box {
    int x_lo, x_hi, y_lo, y_hi;  // inclusive pixel range; empty if lo > hi
  };
  std::vector<Box> boxes(ts.tokens.size());
  for (size_t i = 0; i < ts.tokens.size(); ++i) {
    const GaussianGeom& g = ts.tokens[i].geom;
    auto [xl, xh] = detail::support_range(g.mu_x, static_cast<double>(ts.s) * g.sigma_x, w);
    auto [yl, yh] = detail::support_range(g.mu_y, static_cast<double>(ts.s) * g.sigma_y, h);
    boxes[i] = Box{xl, xh, yl, yh};
  }

  constexpr int kTile = 64;
  const int tiles_x = (w + kTile - 1) / kTile;
  const int tiles_y = (h + kTile - 1) / kTile;

  parallel_for(static_cast<size_t>(tiles_x) * tiles_y, [&](size_t tile) {
    const int tx = static_cast<int>(tile % tiles_x);
    const int ty = static_cast<int>(tile / tiles_x);
    const int x0 = tx * kTile, x1 = std::min(x0 + kTile, w);
    const int y0 = ty * kTile, y1 = std::min(y0 + kTile, h);
    const int tw = x1 - x0, th = y1 - y0;

    std::vector<double> acc(static_cast<size_t>(tw) * th * c, 0.0);
    for (size_t i = 0; i < ts.tokens.size(); ++i) {
      const Box& b = boxes[i];
      const int rx0 = std::max(b.x_lo, x0), rx1 = std::min(b.x_hi + 1, x1);
      const int ry0 = std::max(b.y_lo, y0), ry1 = std::min(b.y_hi + 1, y1);
      if (rx0 >= rx1 || ry0 >= ry1) continue;
      const Token& t = ts.tokens[i];
      for (int y = ry0; y < ry1; ++y) {
        for (int x = rx0; x < rx1; ++x) {
          const double g = eval_gaussian(t.geom, x + 0.5, y + 0.5, ts.s);
          double* a = &acc[(static_cast<size_t>(y - y0) * tw + (x - x0)) * c];
          for (int k = 0; k < c; ++k) a[k] += g * t.f[k];
        }
      }
    }
    for (int y = y0; y < y1; ++y)
      for (int x = x0; x < x1; ++x) {
        const double* a = &acc[(static_cast<size_t>(y - y0) * tw + (x - x0)) * c];
        for (int k = 0; k < c; ++k) out.at(x, y, k) = static_cast<float>(a[k]);
      }
  });
  return out;
}

// Exact gradients of L = sum_{x,y,k} upstream(x,y,k) * R(x,y,k) with respect
// to every token parameter. The truncation box boundary is treated as
// constant: no gradient flows through box membership.
inline TokenGradients backward(const TokenSet& ts, const FeatureMap& upstream) {
  const int w = ts.width, h = ts.height, c = ts.channels();
  if (upstream.width != w || upstream.height != h || upstream.channels != c)
    throw ShapeMismatch("upstream gradient shape does not match the render output");

  TokenGradients grads(ts.tokens.size());
  parallel_for(ts.tokens.size(), [&](size_t i) {
    const Token& t = ts.tokens[i];
    const GaussianGeom& g = t.geom;
    TokenGradient& out = grads[i];
    out.d_f.assign(c, 0.0);

    auto [xl, xh] = detail::support_range(g.mu_x, static_cast<double>(ts.s) * g.sigma_x, w);
    auto [yl, yh] = detail::support_range(g.mu_y, static_cast<double>(ts.s) * g.sigma_y, h);

    const double sx = g.sigma_x, sy = g.sigma_y, rho = g.rho;
    const double a = 1.0 / (1.0 - rho * rho);
    for (int y = yl; y <= yh; ++y) {
      for (int x = xl; x <= xh; ++x) {
        const double gv = eval_gaussian(g, x + 0.5, y + 0.5, ts.s);
        if (gv == 0.0) continue;
        const double dx = (x + 0.5) - g.mu_x;
        const double dy = (y + 0.5) - g.mu_y;

        double common = 0.0;  // sum_k upstream * f[k]
        for (int k = 0; k < c; ++k) {
          const double up = upstream.at(x, y, k);
          out.d_f[k] += up * gv;
          common += up * t.f[k];
        }
        if (common == 0.0) continue;

        const double q = a * (dx * dx / (sx * sx) - 2.0 * rho * dx * dy / (sx * sy) +
                              dy * dy / (sy * sy));
        const double dq_dmux = a * (-2.0 * dx / (sx * sx) + 2.0 * rho * dy / (sx * sy));
        const double dq_dmuy = a * (-2.0 * dy / (sy * sy) + 2.0 * rho * dx / (sx * sy));
        const double dq_dsx =
            a * (-2.0 * dx * dx / (sx * sx * sx) + 2.0 * rho * dx * dy / (sx * sx * sy));
        const double dq_dsy =
            a * (-2.0 * dy * dy / (sy * sy * sy) + 2.0 * rho * dx * dy / (sx * sy * sy));
        const double dq_drho = 2.0 * rho * a * q - 2.0 * a * dx * dy / (sx * sy);

        const double scale = common * gv * -0.5;
        out.d_mu_x += scale * dq_dmux;
        out.d_mu_y += scale * dq_dmuy;
        out.d_sigma_x += scale * dq_dsx;
        out.d_sigma_y += scale * dq_dsy;
        out.d_rho += scale * dq_drho;
      }
    }
  });
  return grads;
}

// Renders with every feature replaced by [1.0]; reproduces the Gaussian-map
// visualizations.
inline FeatureMap gaussian_density_map(const TokenSet& ts) {
  TokenSet unit = ts;
  for (Token& t : unit.tokens) t.f.assign(1, 1.0f);
  return render(unit);
}

}  // namespace gpst
