#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "gpst/complexity.hpp"
#include "gpst/errors.hpp"
#include "gpst/gaussian.hpp"
#include "gpst/partition.hpp"

namespace gpst {

struct CalibConfig {
  int s_min = 4;  // grid spacing and minimal region side
  int width = 0;
  int height = 0;
};

inline void check_calib_config(const CalibConfig& cfg) {
  if (cfg.width < 1 || cfg.height < 1) throw InvalidInput("invalid calibration image size");
  if (cfg.s_min < 1 || cfg.s_min > std::min(cfg.width, cfg.height))
    throw InvalidInput("s_min must lie in [1, min(width, height)]");
}

// Snaps each mean per axis to the nearest point of the grid
// { a*s_min : a >= 0, a*s_min <= extent-1 }, ties toward the smaller
// coordinate.
inline std::vector<std::pair<int, int>> snap_means(const std::vector<GaussianGeom>& geoms,
                                                   const CalibConfig& cfg) {
  check_calib_config(cfg);
  if (geoms.empty()) throw InvalidInput("empty geometry list");

  auto snap_axis = [&](double mu, int extent) {
    const int g_last = cfg.s_min * ((extent - 1) / cfg.s_min);
    const double k = mu / cfg.s_min;
    int lo = static_cast<int>(std::floor(k)) * cfg.s_min;
    int hi = lo + cfg.s_min;
    lo = std::clamp(lo, 0, g_last);
    hi = std::clamp(hi, 0, g_last);
    // tie toward the smaller coordinate
    return std::abs(mu - lo) <= std::abs(mu - hi) ? lo : hi;
  };

  std::vector<std::pair<int, int>> out;
  out.reserve(geoms.size());
  for (const GaussianGeom& g : geoms)
    out.emplace_back(snap_axis(g.mu_x, cfg.width), snap_axis(g.mu_y, cfg.height));
  return out;
}

// Splits the image into l regions, always subdividing the eligible region
// holding the most snapped means. Membership is half-open, so every mean
// belongs to exactly one region.
inline std::vector<Region> count_partition(const std::vector<std::pair<int, int>>& snapped,
                                           const CalibConfig& cfg, int l) {
  check_calib_config(cfg);
  if (l < 1 || static_cast<size_t>(l) != snapped.size())
    throw InvalidInput("l must equal the number of snapped means");

  std::vector<Region> L = {Region{0, 0, cfg.width, cfg.height}};
  auto count_in = [&](const Region& r) {
    int n = 0;
    for (const auto& [x, y] : snapped)
      if (r.x1 <= x && x < r.x2 && r.y1 <= y && y < r.y2) ++n;
    return n;
  };

  while (static_cast<int>(L.size()) < l) {
    int best = -1, best_count = -1;
    for (size_t i = 0; i < L.size(); ++i) {
      if (std::max(L[i].width(), L[i].height()) <= cfg.s_min) continue;
      const int n = count_in(L[i]);
      if (n > best_count) {
        best = static_cast<int>(i);
        best_count = n;
      }
    }
    if (best < 0)
      throw InfeasiblePartition("no region splittable before reaching the target count");

    const Region r = L[best];
    SplitAxis axis;
    if (r.width() > r.height()) {
      axis = SplitAxis::width;
    } else if (r.width() < r.height()) {
      axis = SplitAxis::height;
    } else {
      // square: split vertically unless a mean in this region falls exactly
      // on the split line x = (x1+x2)/2
      const int mid = (r.x1 + r.x2) / 2;
      bool on_line = false;
      for (const auto& [x, y] : snapped)
        if (x == mid && r.x1 <= x && x < r.x2 && r.y1 <= y && y < r.y2) on_line = true;
      axis = on_line ? SplitAxis::height : SplitAxis::width;
    }
    auto [c1, c2] = split_region(r, axis);
    L[best] = c1;
    L.insert(L.begin() + best + 1, c2);
  }
  return L;
}

struct CalibrationResult {
  std::vector<GaussianGeom> geoms;  // one per region, in region-list order
  std::vector<Region> regions;
  // input token index -> region index: each input claims the region holding
  // its snapped mean (first claimant wins); leftovers pair up by ascending
  // index.
  std::vector<int> assignment;
};

// Full calibration: snap means to the grid, re-partition by mean counts, and
// re-initialize per-region Gaussians {w/6, h/6, 0, center}.
inline CalibrationResult calibrate(const std::vector<GaussianGeom>& geoms,
                                   const CalibConfig& cfg) {
  auto snapped = snap_means(geoms, cfg);
  const int l = static_cast<int>(geoms.size());

  CalibrationResult result;
  result.regions = count_partition(snapped, cfg, l);
  result.geoms.reserve(l);
  for (const Region& r : result.regions) {
    GaussianGeom g;
    g.sigma_x = std::max(static_cast<float>(r.width()) / 6.0f, kSigmaEps);
    g.sigma_y = std::max(static_cast<float>(r.height()) / 6.0f, kSigmaEps);
    g.rho = 0.0f;
    g.mu_x = static_cast<float>(r.x1 + r.x2) / 2.0f;
    g.mu_y = static_cast<float>(r.y1 + r.y2) / 2.0f;
    result.geoms.push_back(g);
  }

  result.assignment.assign(l, -1);
  std::vector<bool> claimed(l, false);
  for (int i = 0; i < l; ++i) {
    const auto& [x, y] = snapped[i];
    for (int r = 0; r < l; ++r) {
      const Region& reg = result.regions[r];
      if (!claimed[r] && reg.x1 <= x && x < reg.x2 && reg.y1 <= y && y < reg.y2) {
        result.assignment[i] = r;
        claimed[r] = true;
        break;
      }
    }
  }
  int next_free = 0;
  for (int i = 0; i < l; ++i) {
    if (result.assignment[i] >= 0) continue;
    while (claimed[next_free]) ++next_free;
    result.assignment[i] = next_free;
    claimed[next_free] = true;
  }
  return result;
}

}  // namespace gpst
