#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>

#include "foa/analysis.hpp"
#include "foa/fixmap.hpp"
#include "foa/metrics.hpp"
#include "support.hpp"

using namespace foa;
using namespace foa::test;

namespace {

FixationMap gaussian_map(int h, int w, double cx, double cy, double var) {
  FixationMap m(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      m.at(y, x) = std::exp(-0.5 * ((x - cx) * (x - cx) + (y - cy) * (y - cy)) / var);
  return normalize_map(m);
}

std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("foa_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace

TEST(Fixmap, SingleFixationPeaksAtGaze) {
  std::vector<GazeRecord> g{{10, 20, 30, true}};
  const auto m = build_fixation_map(g, 10, {}, FixmapConfig{}, 64, 64);
  EXPECT_TRUE(m.is_normalized());
  std::size_t arg = 0;
  for (std::size_t i = 0; i < m.size(); ++i)
    if (m[i] > m[arg]) arg = i;
  EXPECT_EQ(arg, 30u * 64 + 20);
}

TEST(Fixmap, MaxKeepsBothGlancesAtFullHeight) {
  std::vector<GazeRecord> g{{0, 10, 10, true}, {3, 50, 50, true}};
  const auto m = build_fixation_map(g, 0, {}, FixmapConfig{}, 64, 64, false);
  EXPECT_DOUBLE_EQ(m.at(10, 10), m.at(50, 50));
  EXPECT_DOUBLE_EQ(m.at(10, 10), 1.0 / (2 * std::numbers::pi * 200));
}

TEST(Fixmap, MatchesBruteForceWithTranslationHomographies) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0, 64), sh(-5, 5);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<GazeRecord> g;
    HomographyWindow homs;
    for (int i = 0; i < 5; ++i) {
      const int off = i * 5 - 12;
      g.push_back({100 + off, u(rng), u(rng), true});
      homs[off] = Homography::translation(sh(rng), sh(rng));
    }
    FixmapConfig cfg;
    const auto m = build_fixation_map(g, 100, homs, cfg, 64, 64);
    FixationMap want(64, 64);
    for (int y = 0; y < 64; ++y)
      for (int x = 0; x < 64; ++x) {
        double best = 0;
        for (const auto& r : g) {
          const auto& H = homs.at(r.frame_id - 100).matrix();
          const double px = r.x + H(0, 2), py = r.y + H(1, 2);
          const double d2 = (x - px) * (x - px) + (y - py) * (y - py);
          best = std::max(best, std::exp(-d2 / 400) / (400 * std::numbers::pi));
        }
        want.at(y, x) = best;
      }
    want = normalize_map(want);
    for (std::size_t i = 0; i < m.size(); ++i) EXPECT_NEAR(m[i], want[i], 1e-6 * want.max());
  }
}

TEST(Fixmap, WindowHas25OffsetsAndSkipsInvalid) {
  std::vector<GazeRecord> inside{{-12, 5, 5, true}, {12, 40, 40, true}};
  std::vector<GazeRecord> g = inside;
  g.push_back({13, 60, 60, true});
  g.push_back({-13, 60, 10, true});
  g.push_back({0, 30, 30, false});
  const auto m = build_fixation_map(g, 0, {}, FixmapConfig{}, 64, 64, false);
  const auto want = build_fixation_map(inside, 0, {}, FixmapConfig{}, 64, 64, false);
  EXPECT_EQ(m.data()[0], want.data()[0]);
  for (std::size_t i = 0; i < m.size(); ++i) ASSERT_EQ(m[i], want[i]);
  EXPECT_DOUBLE_EQ(m.at(5, 5), m.at(40, 40));
  std::vector<GazeRecord> bad{{0, 30, 30, false}};
  const auto u = build_fixation_map(bad, 0, {}, FixmapConfig{}, 8, 8);
  for (std::size_t i = 0; i < u.size(); ++i) EXPECT_DOUBLE_EQ(u[i], 1.0 / 64);
}

TEST(Fixmap, AddingFixationNeverDecreasesAndTranslates) {
  std::vector<GazeRecord> g{{0, 20, 20, true}};
  const auto a = build_fixation_map(g, 0, {}, FixmapConfig{}, 48, 48, false);
  g.push_back({1, 30, 10, true});
  const auto b = build_fixation_map(g, 0, {}, FixmapConfig{}, 48, 48, false);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_GE(b[i], a[i]);
  std::vector<GazeRecord> shifted{{0, 23, 25, true}};
  const auto c = build_fixation_map(shifted, 0, {}, FixmapConfig{}, 48, 48, false);
  for (int y = 0; y < 40; ++y)
    for (int x = 0; x < 40; ++x) EXPECT_NEAR(c.at(y + 5, x + 3), a.at(y, x), 1e-15);
}

TEST(Fixmap, NormalizeMap) {
  std::mt19937_64 rng(32);
  const auto m = random_map(10, 12, rng);
  const auto n = normalize_map(m);
  const double s = m.sum();
  for (std::size_t i = 0; i < m.size(); ++i) EXPECT_DOUBLE_EQ(n[i], m[i] / s);
  const auto again = normalize_map(n);
  for (std::size_t i = 0; i < n.size(); ++i) EXPECT_NEAR(again[i], n[i], 1e-15);
  const auto c = normalize_map(FixationMap(4, 5, 3.0));
  for (std::size_t i = 0; i < c.size(); ++i) EXPECT_DOUBLE_EQ(c[i], 1.0 / 20);
  EXPECT_THROW(normalize_map(FixationMap(2, 2, 0.0)), std::domain_error);
}

TEST(Fixmap, DriftLabelling) {
  const auto centre = gaussian_map(32, 32, 16, 16, 20);
  const auto corner = gaussian_map(32, 32, 3, 3, 4);
  std::vector<FixationMap> maps(40, centre);
  EXPECT_TRUE(label_drift_subsequences(maps, mean_map(maps)).empty());
  for (int t = 12; t < 32; ++t) maps[t] = corner;
  const auto runs = label_drift_subsequences(maps, mean_map(std::span(maps.data(), 10)));
  ASSERT_EQ(runs.size(), 1u);
  EXPECT_EQ(runs[0], std::make_pair(12, 31));
}

TEST(Fixmap, GazeCsvAndHomographyWindowRoundTrip) {
  const auto dir = temp_dir("fixmap_io");
  std::vector<GazeRecord> g{{0, 1.25, 2.5, true}, {1, -3, 4, false}};
  write_gaze_csv(dir / "gaze.csv", g);
  const auto back = read_gaze_csv(dir / "gaze.csv");
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].x, 1.25);
  EXPECT_FALSE(back[1].valid);
  HomographyWindow w{{-1, Homography::translation(2, 3)}, {0, Homography::identity()}};
  save_homography_window(dir / "h.json", w);
  const auto wb = load_homography_window(dir / "h.json");
  EXPECT_EQ(wb.at(-1).row_major(), w.at(-1).row_major());
  const auto m = gaussian_map(16, 16, 5, 7, 9);
  export_map(dir / "map.png", m);
  const auto exact = load_map_sidecar(dir / "map.foat");
  for (std::size_t i = 0; i < m.size(); ++i) EXPECT_EQ(exact[i], m[i]);
}

TEST(Metrics, PearsonIdentitiesAndOracle) {
  std::mt19937_64 rng(33);
  const auto p = random_map(16, 16, rng), q = random_map(16, 16, rng);
  EXPECT_NEAR(pearson_cc(p, p), 1.0, 1e-12);
  FixationMap neg(16, 16);
  for (std::size_t i = 0; i < p.size(); ++i) neg[i] = 3.0 - p[i];
  EXPECT_NEAR(pearson_cc(p, neg), -1.0, 1e-12);
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < p.size(); ++i) ma += p[i], mb += q[i];
  ma /= p.size();
  mb /= p.size();
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    sab += (p[i] - ma) * (q[i] - mb);
    saa += (p[i] - ma) * (p[i] - ma);
    sbb += (q[i] - mb) * (q[i] - mb);
  }
  EXPECT_NEAR(pearson_cc(p, q), sab / std::sqrt(saa * sbb), 1e-12);
  EXPECT_THROW(pearson_cc(p, FixationMap(16, 16, 1.0)), std::domain_error);
}

TEST(Metrics, InfoGainOracleAndIdentity) {
  std::mt19937_64 rng(34);
  for (int trial = 0; trial < 10; ++trial) {
    const auto p = random_map(8, 8, rng), y = random_map(8, 8, rng), b = random_map(8, 8, rng);
    const double eps = 1e-8, ps = p.sum(), ys = y.sum(), bs = b.sum();
    double want = 0;
    for (std::size_t i = 0; i < p.size(); ++i)
      want += (y[i] / ys) * (std::log2(eps + p[i] / ps) - std::log2(eps + b[i] / bs));
    EXPECT_NEAR(info_gain(p, y, b), want, 1e-12 * std::max(1.0, std::abs(want)));
    EXPECT_EQ(info_gain(b, y, b), 0.0);
  }
  const auto y = gaussian_map(16, 16, 8, 8, 4);
  const auto sharp = gaussian_map(16, 16, 8, 8, 5);
  const auto flat = uniform_map(16, 16);
  EXPECT_GT(info_gain(sharp, y, flat), 0.0);
}

TEST(Metrics, BaselinesAndReport) {
  const auto c = central_gaussian_baseline(30, 30);
  EXPECT_TRUE(c.map.is_normalized());
  const auto s = fit_gaussian_spread(c.map);
  EXPECT_NEAR(s.mean.x(), 14.5, 1e-9);
  std::vector<FixationMap> train{gaussian_map(8, 8, 2, 2, 2), gaussian_map(8, 8, 5, 5, 2)};
  const auto m = training_mean_baseline(train);
  EXPECT_TRUE(m.map.is_normalized());
  EXPECT_NEAR(m.map.at(2, 2), 0.5 * (train[0].at(2, 2) + train[1].at(2, 2)), 1e-15);

  std::vector<MetricRow> rows{{"a", 0, 0.5, 1.0, 0.1}, {"a", 1, 0.7, 2.0, 0.3},
                              {"b", 0, std::nan(""), 3.0, 0.2}};
  SequenceMetadata meta{{"a", {{"weather", "sunny"}}}, {"b", {{"weather", "rainy"}}}};
  const auto r = build_report(rows, meta);
  EXPECT_NEAR(r.overall.kl, 2.0, 1e-15);
  EXPECT_NEAR(r.overall.cc, 0.6, 1e-15);
  EXPECT_EQ(r.overall.cc_count, 2);
  EXPECT_NEAR(r.by_condition.at("weather").at("sunny").kl, 1.5, 1e-15);
  EXPECT_NEAR(r.by_condition.at("weather").at("rainy").ig, 0.2, 1e-15);
}

TEST(Analysis, GaussianSpreadMoments) {
  const auto g = gaussian_map(96, 96, 47.5, 47.5, 200);
  const auto s = fit_gaussian_spread(g);
  EXPECT_NEAR(s.cov(0, 0), 200, 4);
  EXPECT_NEAR(s.cov(1, 1), 200, 4);
  EXPECT_NEAR(s.det, 4e4, 0.04 * 4e4);
  FixationMap point(5, 5);
  point.at(2, 3) = 1;
  const auto d = fit_gaussian_spread(point);
  EXPECT_TRUE(d.degenerate);
  EXPECT_EQ(d.det, 0.0);
  const double wide = fit_gaussian_spread(gaussian_map(200, 200, 99.5, 99.5, 200)).det;
  const double moved = fit_gaussian_spread(gaussian_map(200, 200, 92.5, 106.5, 200)).det;
  EXPECT_NEAR(moved, wide, 1e-6 * wide);
  const auto narrow = gaussian_map(96, 96, 47.5, 47.5, 50);
  EXPECT_LT(fit_gaussian_spread(narrow).det, s.det);
}

TEST(Analysis, SpeedBinsGroupFrames) {
  std::vector<FixationMap> maps{gaussian_map(32, 32, 16, 16, 40), gaussian_map(32, 32, 16, 16, 10),
                                gaussian_map(32, 32, 16, 16, 38)};
  const std::vector<double> speeds{5, 50, 7}, edges{0, 25, 75, 100};
  const auto bins = speed_bin_spread(maps, speeds, edges);
  ASSERT_EQ(bins.size(), 3u);
  EXPECT_EQ(bins[0].frames, 2);
  EXPECT_EQ(bins[1].frames, 1);
  EXPECT_EQ(bins[2].frames, 0);
  EXPECT_GT(bins[0].spread.det, bins[1].spread.det);
}

TEST(Analysis, SemanticHistogramMatchesMaskCount) {
  std::mt19937_64 rng(35);
  std::uniform_int_distribution<int> cls(0, 4);
  std::vector<FixationMap> maps;
  std::vector<LabelMap> labels;
  for (int f = 0; f < 3; ++f) {
    maps.push_back(random_map(12, 10, rng));
    LabelMap l{12, 10, std::vector<int>(120)};
    for (auto& id : l.ids) id = cls(rng);
    labels.push_back(l);
  }
  const auto h = semantic_threshold_histogram(maps, labels, 9, 5);
  for (int k = 0; k < 9; ++k) {
    const double thr = (k + 1) / 10.0;
    EXPECT_DOUBLE_EQ(h.thresholds[k], thr);
    std::vector<double> count(5, 0);
    for (int f = 0; f < 3; ++f) {
      const double mx = maps[f].max();
      for (std::size_t i = 0; i < 120; ++i)
        if (maps[f][i] / mx >= thr) count[labels[f].ids[i]] += 1;
    }
    double total = 0;
    for (int c = 0; c < 5; ++c) {
      EXPECT_EQ(h.counts[c][k], count[c]);
      total += h.proportions[c][k];
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
  LabelMap single{12, 10, std::vector<int>(120, 2)};
  const std::vector<LabelMap> one(3, single);
  const auto hs = semantic_threshold_histogram(maps, one, 9, 5);
  for (int k = 0; k < 9; ++k) EXPECT_EQ(hs.proportions[2][k], 1.0);
  LabelMap bad{12, 10, std::vector<int>(120, 7)};
  EXPECT_THROW(semantic_threshold_histogram(std::span(maps.data(), 1), std::span(&bad, 1), 9, 5),
               std::out_of_range);
}

TEST(Analysis, KendallTau) {
  const std::vector<double> a{1, 2, 3, 4, 5}, r{5, 4, 3, 2, 1};
  EXPECT_DOUBLE_EQ(kendall_tau_b(a, a), 1.0);
  EXPECT_DOUBLE_EQ(kendall_tau_b(a, r), -1.0);
  std::mt19937_64 rng(36);
  std::uniform_int_distribution<int> u(0, 5);
  std::vector<double> x(30), y(30);
  for (int i = 0; i < 30; ++i) x[i] = u(rng), y[i] = u(rng);
  double nc = 0, nd = 0, tx = 0, ty = 0;
  for (int i = 0; i < 30; ++i)
    for (int j = i + 1; j < 30; ++j) {
      const double dx = x[i] - x[j], dy = y[i] - y[j];
      if (dx == 0 && dy == 0) continue;
      if (dx == 0) ++tx;
      else if (dy == 0) ++ty;
      else if (dx * dy > 0) ++nc;
      else ++nd;
    }
  const double want = (nc - nd) / std::sqrt((nc + nd + tx) * (nc + nd + ty));
  EXPECT_NEAR(kendall_tau_b(x, y), want, 1e-12);
  EXPECT_THROW(kendall_tau_b(std::span(a.data(), 1), std::span(a.data(), 1)), std::invalid_argument);
}
