#pragma once

#include <string>
#include <utility>
#include <vector>

#include "gpst/complexity.hpp"
#include "gpst/errors.hpp"
#include "gpst/image.hpp"

namespace gpst {

struct PartitionConfig {
  int l = 1;        // target region count
  int s_min = 4;    // minimal region side
  ComplexityConfig complexity;
};

enum class SplitAxis { width, height };

inline const char* to_string(SplitAxis a) {
  return a == SplitAxis::width ? "width" : "height";
}

struct SplitRecord {
  int step;          // 0-based iteration number
  int region_index;  // index of the split region in L at split time
  SplitAxis axis;
  bool operator==(const SplitRecord&) const = default;
};

struct PartitionResult {
  std::vector<Region> regions;
  std::vector<SplitRecord> trace;
};

// Equal split with the floor convention on odd sides: the first child takes
// [x1, x1+w/2), the second [x1+w/2, x2); height split symmetric.
inline std::pair<Region, Region> split_region(const Region& r, SplitAxis axis) {
  if (axis == SplitAxis::width) {
    if (r.width() < 2) throw SideTooSmall("cannot split width " + std::to_string(r.width()));
    int mid = r.x1 + r.width() / 2;
    return {Region{r.x1, r.y1, mid, r.y2}, Region{mid, r.y1, r.x2, r.y2}};
  }
  if (r.height() < 2) throw SideTooSmall("cannot split height " + std::to_string(r.height()));
  int mid = r.y1 + r.height() / 2;
  return {Region{r.x1, r.y1, r.x2, mid}, Region{r.x1, mid, r.x2, r.y2}};
}

// Recursive complexity-driven partition into exactly cfg.l regions.
// Each iteration splits the eligible region with the highest m; complexities
// are cached and recomputed only for the two new children.
inline PartitionResult partition_image(const RasterImage& img, const PartitionConfig& cfg,
                                       const GradientMap* importance = nullptr) {
  validate_image(img);
  if (cfg.l < 1) throw InvalidInput("target region count must be >= 1");
  if (cfg.s_min < 1) throw InvalidInput("s_min must be >= 1");

  GradientMap E = sobel_magnitude(to_grayscale(img));

  std::vector<Region> L = {Region{0, 0, img.width, img.height}};
  std::vector<double> m = {region_complexity(E, L[0], cfg.complexity, importance)};
  std::vector<SplitRecord> trace;

  auto complexity = [&](const Region& r) {
    return region_complexity(E, r, cfg.complexity, importance);
  };

  int step = 0;
  while (static_cast<int>(L.size()) < cfg.l) {
    int best = -1;
    for (size_t i = 0; i < L.size(); ++i) {
      if (std::max(L[i].width(), L[i].height()) <= cfg.s_min) continue;
      if (best < 0 || m[i] > m[best]) best = static_cast<int>(i);
    }
    if (best < 0)
      throw InfeasiblePartition("no region splittable before reaching " +
                                std::to_string(cfg.l) + " regions");

    const Region r = L[best];
    SplitAxis axis;
    Region c1, c2;
    if (r.width() != r.height()) {
      axis = r.width() > r.height() ? SplitAxis::width : SplitAxis::height;
      std::tie(c1, c2) = split_region(r, axis);
    } else {
      auto [w1, w2] = split_region(r, SplitAxis::width);
      auto [h1, h2] = split_region(r, SplitAxis::height);
      double mw = std::min(complexity(w1), complexity(w2));
      double mh = std::min(complexity(h1), complexity(h2));
      if (mw <= mh) {
        axis = SplitAxis::width;
        c1 = w1; c2 = w2;
      } else {
        axis = SplitAxis::height;
        c1 = h1; c2 = h2;
      }
    }

    L[best] = c1;
    L.insert(L.begin() + best + 1, c2);
    m[best] = complexity(c1);
    m.insert(m.begin() + best + 1, complexity(c2));
    trace.push_back(SplitRecord{step, best, axis});
    ++step;
  }
  return PartitionResult{std::move(L), std::move(trace)};
}

}  // namespace gpst
