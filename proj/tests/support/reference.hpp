#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "gpst/gpst.hpp"

// Straight-line re-implementations of the partition and calibration
// procedures, used only as oracles. They recompute everything from scratch
// each iteration and share no code with the library.
namespace testsupport {

// Luma conversion followed by the 3x3 Sobel magnitude, replicate padding.
inline std::vector<float> ref_edge_map(const gpst::RasterImage& img) {
  const int w = img.width, h = img.height;
  std::vector<float> gray(static_cast<size_t>(w) * h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (img.channels == 1) {
        gray[static_cast<size_t>(y) * w + x] = img.at(x, y, 0);
      } else {
        gray[static_cast<size_t>(y) * w + x] = static_cast<float>(
            0.299 * img.at(x, y, 0) + 0.587 * img.at(x, y, 1) + 0.114 * img.at(x, y, 2));
      }
    }

  auto px = [&](int x, int y) -> double {
    return gray[static_cast<size_t>(std::clamp(y, 0, h - 1)) * w + std::clamp(x, 0, w - 1)];
  };
  std::vector<float> edge(static_cast<size_t>(w) * h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double gx = (px(x + 1, y - 1) + 2.0 * px(x + 1, y) + px(x + 1, y + 1)) -
                        (px(x - 1, y - 1) + 2.0 * px(x - 1, y) + px(x - 1, y + 1));
      const double gy = (px(x - 1, y + 1) + 2.0 * px(x, y + 1) + px(x + 1, y + 1)) -
                        (px(x - 1, y - 1) + 2.0 * px(x, y - 1) + px(x + 1, y - 1));
      edge[static_cast<size_t>(y) * w + x] = static_cast<float>(std::sqrt(gx * gx + gy * gy));
    }
  return edge;
}

inline double ref_region_complexity(const std::vector<float>& edge, int W,
                                    const gpst::Region& r, double lambda, int bins,
                                    double g_max, const std::vector<float>* importance) {
  std::vector<long long> count(bins, 0);
  for (int y = r.y1; y < r.y2; ++y)
    for (int x = r.x1; x < r.x2; ++x) {
      const double v = edge[static_cast<size_t>(y) * W + x];
      int b = static_cast<int>(std::floor(v / g_max * bins));
      if (b >= bins) b = bins - 1;
      if (b < 0) b = 0;
      ++count[b];
    }
  const double n = static_cast<double>(r.area());
  double entropy = 0.0;
  for (int b = 0; b < bins; ++b) {
    const double q = static_cast<double>(count[b]) / n;
    if (q > 0.0) entropy -= q * std::log(q);
  }
  double m = static_cast<double>(r.area()) * std::pow(entropy, lambda);
  if (importance) {
    double acc = 0.0;
    for (int y = r.y1; y < r.y2; ++y)
      for (int x = r.x1; x < r.x2; ++x) acc += (*importance)[static_cast<size_t>(y) * W + x];
    m *= acc / static_cast<double>(r.area());
  }
  return m;
}

struct RefPartition {
  std::vector<gpst::Region> regions;
  std::vector<gpst::SplitRecord> trace;
};

inline RefPartition ref_partition(const gpst::RasterImage& img, int l, double lambda,
                                  int s_min, const std::vector<float>* importance = nullptr,
                                  int bins = 512, double g_max = gpst::kGradMax) {
  const int W = img.width, H = img.height;
  const std::vector<float> edge = ref_edge_map(img);
  auto mc = [&](const gpst::Region& r) {
    return ref_region_complexity(edge, W, r, lambda, bins, g_max, importance);
  };
  auto halves = [](const gpst::Region& r, bool width_axis) {
    if (width_axis) {
      const int mid = r.x1 + (r.x2 - r.x1) / 2;
      return std::pair{gpst::Region{r.x1, r.y1, mid, r.y2},
                       gpst::Region{mid, r.y1, r.x2, r.y2}};
    }
    const int mid = r.y1 + (r.y2 - r.y1) / 2;
    return std::pair{gpst::Region{r.x1, r.y1, r.x2, mid},
                     gpst::Region{r.x1, mid, r.x2, r.y2}};
  };

  std::vector<gpst::Region> L{gpst::Region{0, 0, W, H}};
  std::vector<gpst::SplitRecord> trace;
  int step = 0;
  while (static_cast<int>(L.size()) < l) {
    std::vector<double> m(L.size());
    for (size_t i = 0; i < L.size(); ++i) m[i] = mc(L[i]);
    int best = -1;
    for (size_t i = 0; i < L.size(); ++i) {
      if (std::max(L[i].width(), L[i].height()) <= s_min) continue;
      if (best < 0 || m[i] > m[best]) best = static_cast<int>(i);
    }
    if (best < 0) throw std::runtime_error("reference partition infeasible");

    const gpst::Region r = L[best];
    bool width_axis;
    if (r.width() != r.height()) {
      width_axis = r.width() > r.height();
    } else {
      auto [w1, w2] = halves(r, true);
      auto [h1, h2] = halves(r, false);
      width_axis = std::min(mc(w1), mc(w2)) <= std::min(mc(h1), mc(h2));
    }
    auto [c1, c2] = halves(r, width_axis);
    L[best] = c1;
    L.insert(L.begin() + best + 1, c2);
    trace.push_back(gpst::SplitRecord{
        step, best, width_axis ? gpst::SplitAxis::width : gpst::SplitAxis::height});
    ++step;
  }
  return RefPartition{std::move(L), std::move(trace)};
}

// Per-axis snap to the s_min grid by explicit argmin over all grid points,
// keeping the smaller coordinate on ties.
inline std::vector<std::pair<int, int>> ref_snap(const std::vector<gpst::GaussianGeom>& geoms,
                                                 int s_min, int W, int H) {
  auto snap_axis = [&](double mu, int extent) {
    int best = 0;
    double best_d = std::abs(mu);
    for (int a = s_min; a <= extent - 1; a += s_min) {
      const double d = std::abs(mu - a);
      if (d < best_d) {
        best_d = d;
        best = a;
      }
    }
    return best;
  };
  std::vector<std::pair<int, int>> out;
  out.reserve(geoms.size());
  for (const gpst::GaussianGeom& g : geoms)
    out.emplace_back(snap_axis(g.mu_x, W), snap_axis(g.mu_y, H));
  return out;
}

inline std::vector<gpst::Region> ref_count_partition(
    const std::vector<std::pair<int, int>>& snapped, int s_min, int W, int H, int l) {
  auto halves = [](const gpst::Region& r, bool width_axis) {
    if (width_axis) {
      const int mid = r.x1 + (r.x2 - r.x1) / 2;
      return std::pair{gpst::Region{r.x1, r.y1, mid, r.y2},
                       gpst::Region{mid, r.y1, r.x2, r.y2}};
    }
    const int mid = r.y1 + (r.y2 - r.y1) / 2;
    return std::pair{gpst::Region{r.x1, r.y1, r.x2, mid},
                     gpst::Region{r.x1, mid, r.x2, r.y2}};
  };
  auto inside = [](const gpst::Region& r, int x, int y) {
    return r.x1 <= x && x < r.x2 && r.y1 <= y && y < r.y2;
  };

  std::vector<gpst::Region> L{gpst::Region{0, 0, W, H}};
  while (static_cast<int>(L.size()) < l) {
    int best = -1, best_count = -1;
    for (size_t i = 0; i < L.size(); ++i) {
      if (std::max(L[i].width(), L[i].height()) <= s_min) continue;
      int n = 0;
      for (const auto& [x, y] : snapped)
        if (inside(L[i], x, y)) ++n;
      if (n > best_count) {
        best = static_cast<int>(i);
        best_count = n;
      }
    }
    if (best < 0) throw std::runtime_error("reference count partition infeasible");

    const gpst::Region r = L[best];
    bool width_axis;
    if (r.width() != r.height()) {
      width_axis = r.width() > r.height();
    } else {
      const int mid = (r.x1 + r.x2) / 2;
      bool on_line = false;
      for (const auto& [x, y] : snapped)
        if (x == mid && inside(r, x, y)) on_line = true;
      width_axis = !on_line;
    }
    auto [c1, c2] = halves(r, width_axis);
    L[best] = c1;
    L.insert(L.begin() + best + 1, c2);
  }
  return L;
}

struct RefCalibration {
  std::vector<gpst::GaussianGeom> geoms;
  std::vector<gpst::Region> regions;
  std::vector<int> assignment;
};

inline RefCalibration ref_calibrate(const std::vector<gpst::GaussianGeom>& geoms, int s_min,
                                    int W, int H) {
  const int l = static_cast<int>(geoms.size());
  const auto snapped = ref_snap(geoms, s_min, W, H);

  RefCalibration out;
  out.regions = ref_count_partition(snapped, s_min, W, H, l);
  for (const gpst::Region& r : out.regions) {
    gpst::GaussianGeom g;
    g.sigma_x = std::max(static_cast<float>(r.width()) / 6.0f, gpst::kSigmaEps);
    g.sigma_y = std::max(static_cast<float>(r.height()) / 6.0f, gpst::kSigmaEps);
    g.rho = 0.0f;
    g.mu_x = static_cast<float>(r.x1 + r.x2) / 2.0f;
    g.mu_y = static_cast<float>(r.y1 + r.y2) / 2.0f;
    out.geoms.push_back(g);
  }

  out.assignment.assign(l, -1);
  std::vector<bool> claimed(l, false);
  for (int i = 0; i < l; ++i) {
    for (int r = 0; r < l; ++r) {
      const gpst::Region& reg = out.regions[r];
      if (claimed[r]) continue;
      if (reg.x1 <= snapped[i].first && snapped[i].first < reg.x2 &&
          reg.y1 <= snapped[i].second && snapped[i].second < reg.y2) {
        out.assignment[i] = r;
        claimed[r] = true;
        break;
      }
    }
  }
  int next_free = 0;
  for (int i = 0; i < l; ++i) {
    if (out.assignment[i] >= 0) continue;
    while (claimed[next_free]) ++next_free;
    out.assignment[i] = next_free;
    claimed[next_free] = true;
  }
  return out;
}

}  // namespace testsupport
