#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "gpst/errors.hpp"
#include "gpst/image.hpp"

namespace gpst {

struct ComplexityConfig {
  double lambda = 2.5;       // entropy exponent
  int bins = 512;            // histogram bin count
  double g_max = kGradMax;   // histogram upper bound
};

// Axis-aligned pixel rectangle: [x1, x2) x [y1, y2).
struct Region {
  int x1 = 0, y1 = 0, x2 = 0, y2 = 0;

  int width() const { return x2 - x1; }
  int height() const { return y2 - y1; }
  long long area() const { return static_cast<long long>(width()) * height(); }
  bool operator==(const Region&) const = default;
};

inline void check_region(const Region& r, int w, int h) {
  if (!(0 <= r.x1 && r.x1 < r.x2 && r.x2 <= w &&
        0 <= r.y1 && r.y1 < r.y2 && r.y2 <= h))
    throw RegionOutOfBounds("region does not lie within the map");
}

// Equal-width histogram over [0, g_max], normalized to sum 1.
// Value v maps to bin min(floor(v/g_max * bins), bins-1).
inline std::vector<double> gradient_histogram(const GradientMap& E, const Region& r,
                                              const ComplexityConfig& cfg) {
  check_region(r, E.width, E.height);
  std::vector<double> q(cfg.bins, 0.0);
  for (int y = r.y1; y < r.y2; ++y)
    for (int x = r.x1; x < r.x2; ++x) {
      double v = E.at(x, y);
      int bin = static_cast<int>(std::floor(v / cfg.g_max * cfg.bins));
      if (bin >= cfg.bins) bin = cfg.bins - 1;
      if (bin < 0) bin = 0;
      q[bin] += 1.0;
    }
  double n = static_cast<double>(r.area());
  for (double& v : q) v /= n;
  return q;
}

// Shannon entropy, natural log, with 0*ln(0) = 0.
inline double entropy(const std::vector<double>& q) {
  double sum = 0.0;
  for (double v : q) {
    if (v < 0.0) throw InvalidDistribution("negative probability");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw InvalidDistribution("probabilities do not sum to 1");
  double h = 0.0;
  for (double v : q)
    if (v > 0.0) h -= v * std::log(v);
  return h;
}

// m = h*w * H^lambda, optionally scaled by the mean importance over r.
inline double region_complexity(const GradientMap& E, const Region& r,
                                const ComplexityConfig& cfg,
                                const GradientMap* importance = nullptr) {
  double h = entropy(gradient_histogram(E, r, cfg));
  double m = static_cast<double>(r.area()) * std::pow(h, cfg.lambda);
  if (importance) {
    if (importance->width != E.width || importance->height != E.height)
      throw InvalidInput("importance map size must match the gradient map");
    double acc = 0.0;
    for (int y = r.y1; y < r.y2; ++y)
      for (int x = r.x1; x < r.x2; ++x) acc += importance->at(x, y);
    m *= acc / static_cast<double>(r.area());
  }
  return m;
}

// Grayscale image as an importance map; zeros are remapped to 1e-3 to keep
// the multiplier positive.
inline GradientMap importance_from_image(const RasterImage& img) {
  RasterImage gray = to_grayscale(img);
  GradientMap map;
  map.width = gray.width;
  map.height = gray.height;
  map.data.resize(gray.data.size());
  for (size_t i = 0; i < gray.data.size(); ++i)
    map.data[i] = gray.data[i] > 0.0f ? gray.data[i] : 1e-3f;
  return map;
}

}  // namespace gpst
