#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "gpst/errors.hpp"
#include "gpst/image.hpp"

namespace gpst {

struct MetricReport {
  double psnr = 0.0;  // dB; +infinity when MSE is 0
  double ssim = 0.0;
};

// 10*log10(255^2 / MSE) over all channels on [0,255] scale.
inline double psnr(const RasterImage& a, const RasterImage& b) {
  if (a.width != b.width || a.height != b.height || a.channels != b.channels)
    throw ShapeMismatch("psnr inputs differ in shape");
  double mse = 0.0;
  for (size_t i = 0; i < a.data.size(); ++i) {
    const double d = static_cast<double>(a.data[i]) - b.data[i];
    mse += d * d;
  }
  mse /= static_cast<double>(a.data.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(255.0 * 255.0 / mse);
}

// Single-scale SSIM: 11x11 Gaussian window sigma=1.5, K1=0.01, K2=0.03,
// L=255, per channel then averaged, mean over valid window positions.
inline double ssim(const RasterImage& a, const RasterImage& b) {
  if (a.width != b.width || a.height != b.height || a.channels != b.channels)
    throw ShapeMismatch("ssim inputs differ in shape");
  if (a.width < 11 || a.height < 11)
    throw ImageTooSmall("ssim needs images at least 11x11");

  constexpr int kRadius = 5;
  constexpr double kC1 = (0.01 * 255.0) * (0.01 * 255.0);
  constexpr double kC2 = (0.03 * 255.0) * (0.03 * 255.0);

  double window[11][11];
  double wsum = 0.0;
  for (int dy = -kRadius; dy <= kRadius; ++dy)
    for (int dx = -kRadius; dx <= kRadius; ++dx) {
      const double v = std::exp(-(dx * dx + dy * dy) / (2.0 * 1.5 * 1.5));
      window[dy + kRadius][dx + kRadius] = v;
      wsum += v;
    }
  for (auto& row : window)
    for (double& v : row) v /= wsum;

  double total = 0.0;
  long long count = 0;
  for (int c = 0; c < a.channels; ++c) {
    for (int y = kRadius; y < a.height - kRadius; ++y) {
      for (int x = kRadius; x < a.width - kRadius; ++x) {
        double mu_a = 0.0, mu_b = 0.0;
        for (int dy = -kRadius; dy <= kRadius; ++dy)
          for (int dx = -kRadius; dx <= kRadius; ++dx) {
            const double w = window[dy + kRadius][dx + kRadius];
            mu_a += w * a.at(x + dx, y + dy, c);
            mu_b += w * b.at(x + dx, y + dy, c);
          }
        double var_a = 0.0, var_b = 0.0, cov = 0.0;
        for (int dy = -kRadius; dy <= kRadius; ++dy)
          for (int dx = -kRadius; dx <= kRadius; ++dx) {
            const double w = window[dy + kRadius][dx + kRadius];
            const double da = a.at(x + dx, y + dy, c) - mu_a;
            const double db = b.at(x + dx, y + dy, c) - mu_b;
            var_a += w * da * da;
            var_b += w * db * db;
            cov += w * da * db;
          }
        total += (2.0 * mu_a * mu_b + kC1) * (2.0 * cov + kC2) /
                 ((mu_a * mu_a + mu_b * mu_b + kC1) * (var_a + var_b + kC2));
        ++count;
      }
    }
  }
  return total / static_cast<double>(count);
}

}  // namespace gpst
