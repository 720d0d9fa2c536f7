#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "gpst/gpst.hpp"
#include "support/synthetic.hpp"

using gpst::ComplexityConfig;
using gpst::GradientMap;
using gpst::Region;

namespace {

GradientMap map_from(std::initializer_list<float> values, int w, int h) {
  GradientMap m;
  m.width = w;
  m.height = h;
  m.data = values;
  return m;
}

}  // namespace

TEST(Histogram, ConstantZeroRegionFillsBinZero) {
  GradientMap E = map_from({0, 0, 0, 0, 0, 0}, 3, 2);
  ComplexityConfig cfg;
  auto q = gpst::gradient_histogram(E, Region{0, 0, 3, 2}, cfg);
  ASSERT_EQ(static_cast<int>(q.size()), cfg.bins);
  EXPECT_EQ(q[0], 1.0);
  for (size_t i = 1; i < q.size(); ++i) EXPECT_EQ(q[i], 0.0);
}

TEST(Histogram, TwoValueSplit) {
  ComplexityConfig cfg;
  // Center of the middle bin; a bin-edge value would be rounding-sensitive.
  const float mid = static_cast<float>(cfg.g_max * ((cfg.bins / 2 + 0.5) / cfg.bins));
  GradientMap E = map_from({0, 0, 0, 0, mid, mid, mid, mid}, 8, 1);
  auto q = gpst::gradient_histogram(E, Region{0, 0, 8, 1}, cfg);
  EXPECT_EQ(q[0], 0.5);
  EXPECT_EQ(q[cfg.bins / 2], 0.5);
  double sum = 0.0;
  for (double v : q) sum += v;
  EXPECT_DOUBLE_EQ(sum, 1.0);
}

TEST(Histogram, TopValueLandsInLastBin) {
  ComplexityConfig cfg;
  GradientMap E = map_from({static_cast<float>(cfg.g_max)}, 1, 1);
  auto q = gpst::gradient_histogram(E, Region{0, 0, 1, 1}, cfg);
  EXPECT_EQ(q[cfg.bins - 1], 1.0);
}

TEST(Histogram, MatchesCountingOracle) {
  gpst::RasterImage img = testsupport::noise_image(16, 16, 1, 91);
  GradientMap E = gpst::sobel_magnitude(img);
  ComplexityConfig cfg;
  const Region r{3, 2, 13, 11};
  auto q = gpst::gradient_histogram(E, r, cfg);

  std::vector<long long> count(cfg.bins, 0);
  for (int y = r.y1; y < r.y2; ++y)
    for (int x = r.x1; x < r.x2; ++x) {
      int b = static_cast<int>(std::floor(E.at(x, y) / cfg.g_max * cfg.bins));
      b = std::min(b, cfg.bins - 1);
      ++count[b];
    }
  for (int b = 0; b < cfg.bins; ++b)
    EXPECT_EQ(q[b], count[b] / static_cast<double>(r.area()));
}

TEST(Histogram, RegionMustBeInside) {
  GradientMap E = map_from({0, 0, 0, 0}, 2, 2);
  ComplexityConfig cfg;
  EXPECT_THROW(gpst::gradient_histogram(E, Region{0, 0, 3, 2}, cfg), gpst::RegionOutOfBounds);
  EXPECT_THROW(gpst::gradient_histogram(E, Region{1, 1, 1, 2}, cfg), gpst::RegionOutOfBounds);
}

TEST(Entropy, OneHotIsZero) {
  std::vector<double> q(512, 0.0);
  q[17] = 1.0;
  EXPECT_EQ(gpst::entropy(q), 0.0);
}

TEST(Entropy, TwoEqualBinsIsLn2) {
  std::vector<double> q(512, 0.0);
  q[0] = 0.5;
  q[256] = 0.5;
  EXPECT_NEAR(gpst::entropy(q), 0.693147, 1e-6);
  EXPECT_NEAR(gpst::entropy(q), std::log(2.0), 1e-12);
}

TEST(Entropy, UniformIsLnBinCount) {
  std::vector<double> q(512, 1.0 / 512.0);
  EXPECT_NEAR(gpst::entropy(q), 6.238325, 1e-6);
  EXPECT_NEAR(gpst::entropy(q), std::log(512.0), 1e-12);
}

TEST(Entropy, RejectsBadDistributions) {
  std::vector<double> q(8, 0.1);  // sums to 0.8
  EXPECT_THROW(gpst::entropy(q), gpst::InvalidDistribution);
  std::vector<double> neg(4, 0.5);
  neg[0] = -0.5;
  EXPECT_THROW(gpst::entropy(neg), gpst::InvalidDistribution);
}

TEST(Complexity, ConstantRegionScoresZero) {
  gpst::RasterImage img = testsupport::constant_image(24, 24, 1, 66.0f);
  GradientMap E = gpst::sobel_magnitude(img);
  for (double lambda : {0.5, 1.0, 2.5}) {
    ComplexityConfig cfg;
    cfg.lambda = lambda;
    EXPECT_EQ(gpst::region_complexity(E, Region{0, 0, 24, 24}, cfg), 0.0);
    EXPECT_EQ(gpst::region_complexity(E, Region{5, 7, 11, 20}, cfg), 0.0);
  }
}

TEST(Complexity, LambdaZeroReducesToArea) {
  gpst::RasterImage img = testsupport::noise_image(16, 16, 1, 7);
  GradientMap E = gpst::sobel_magnitude(img);
  ComplexityConfig cfg;
  cfg.lambda = 0.0;
  EXPECT_EQ(gpst::region_complexity(E, Region{2, 3, 7, 10}, cfg), 35.0);
  EXPECT_EQ(gpst::region_complexity(E, Region{0, 0, 16, 16}, cfg), 256.0);
}

TEST(Complexity, MatchesComposedPipeline) {
  gpst::RasterImage img = testsupport::noise_image(16, 16, 1, 123);
  GradientMap E = gpst::sobel_magnitude(img);
  ComplexityConfig cfg;  // lambda 2.5
  const Region r{1, 2, 14, 15};
  const double expected =
      static_cast<double>(r.area()) *
      std::pow(gpst::entropy(gpst::gradient_histogram(E, r, cfg)), cfg.lambda);
  EXPECT_EQ(gpst::region_complexity(E, r, cfg), expected);
}

// Stacking two copies of the same rows doubles every histogram count while
// the area doubles, so the distribution and entropy are unchanged and m
// scales by exactly 2 (power-of-two areas keep the normalization exact).
TEST(Complexity, ScalesLinearlyWithArea) {
  std::mt19937 rng(55);
  std::uniform_real_distribution<float> dist(0.0f, static_cast<float>(gpst::kGradMax));
  GradientMap stacked;
  stacked.width = 8;
  stacked.height = 8;
  stacked.data.resize(64);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 8; ++x) {
      const float v = dist(rng);
      stacked.at(x, y) = v;
      stacked.at(x, y + 4) = v;
    }

  ComplexityConfig cfg;
  const double m_half = gpst::region_complexity(stacked, Region{0, 0, 8, 4}, cfg);
  const double m_full = gpst::region_complexity(stacked, Region{0, 0, 8, 8}, cfg);
  EXPECT_GT(m_half, 0.0);
  EXPECT_EQ(m_full, 2.0 * m_half);
}

TEST(Complexity, ImportanceOfOnesIsIdentity) {
  gpst::RasterImage img = testsupport::noise_image(12, 12, 1, 17);
  GradientMap E = gpst::sobel_magnitude(img);
  GradientMap ones;
  ones.width = 12;
  ones.height = 12;
  ones.data.assign(144, 1.0f);
  ComplexityConfig cfg;
  const Region r{1, 1, 11, 9};
  EXPECT_EQ(gpst::region_complexity(E, r, cfg, &ones),
            gpst::region_complexity(E, r, cfg));
}

TEST(Complexity, ImportanceScalesMultiplicatively) {
  gpst::RasterImage img = testsupport::noise_image(12, 12, 1, 18);
  GradientMap E = gpst::sobel_magnitude(img);
  GradientMap twos;
  twos.width = 12;
  twos.height = 12;
  twos.data.assign(144, 2.0f);
  ComplexityConfig cfg;
  const Region r{0, 0, 12, 12};
  EXPECT_DOUBLE_EQ(gpst::region_complexity(E, r, cfg, &twos),
                   2.0 * gpst::region_complexity(E, r, cfg));
}

TEST(Complexity, ImportanceShapeChecked) {
  GradientMap E = map_from({0, 0, 0, 0}, 2, 2);
  GradientMap imp = map_from({1, 1}, 2, 1);
  ComplexityConfig cfg;
  EXPECT_THROW(gpst::region_complexity(E, Region{0, 0, 2, 2}, cfg, &imp), gpst::InvalidInput);
}

TEST(Complexity, ImportanceFromImageRemapsZeros) {
  gpst::RasterImage img = testsupport::constant_image(4, 4, 1, 0.0f);
  img.at(2, 1) = 50.0f;
  GradientMap imp = gpst::importance_from_image(img);
  EXPECT_EQ(imp.at(2, 1), 50.0f);
  EXPECT_EQ(imp.at(0, 0), 1e-3f);
}

TEST(Complexity, EntropyOfRegionsStaysInRange) {
  gpst::RasterImage img = testsupport::noise_image(20, 20, 1, 200);
  GradientMap E = gpst::sobel_magnitude(img);
  ComplexityConfig cfg;
  for (const Region& r : {Region{0, 0, 20, 20}, Region{3, 3, 9, 17}, Region{10, 0, 20, 4}}) {
    const double h = gpst::entropy(gpst::gradient_histogram(E, r, cfg));
    EXPECT_GE(h, 0.0);
    EXPECT_LE(h, std::log(static_cast<double>(cfg.bins)));
  }
}
