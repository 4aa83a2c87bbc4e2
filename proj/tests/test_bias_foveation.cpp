#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "foa/bias_lab.hpp"
#include "foa/foveation.hpp"
#include "support.hpp"

using namespace foa;
using namespace foa::test;

TEST(BiasLab, MinReceptiveField) {
  EXPECT_EQ(min_receptive_field(128, 32, 4), 112);
  EXPECT_EQ(min_receptive_field(64, 16, 4), 48);
  EXPECT_EQ(min_receptive_field(128, 32, 32), 0);
  EXPECT_THROW(min_receptive_field(100, 32, 4), std::invalid_argument);
}

TEST(BiasLab, ReceptiveFieldRecurrence) {
  ProbeNetSpec single;
  single.layers = {{ProbeLayer::Conv, 1, 1, 3, true}};
  EXPECT_EQ(single.receptive_field(), 3);
  for (int rf : {98, 106, 114}) {
    const auto spec = build_probe_net(rf, 0, 8);
    EXPECT_EQ(spec.receptive_field(), rf);
    EXPECT_EQ(spec.downsampling(), 4);
  }
  EXPECT_THROW(build_probe_net(99, 0, 8), std::invalid_argument);
}

TEST(BiasLab, EqualBudgetWithinOnePercent) {
  const long long budget = default_probe_budget({98, 106, 114}, 8);
  for (int rf : {98, 106, 114}) {
    const auto spec = build_probe_net(rf, budget, 8);
    EXPECT_EQ(spec.receptive_field(), rf);
    EXPECT_LE(std::abs(spec.parameter_count() - budget), 0.01 * budget) << rf;
  }
  EXPECT_THROW(build_probe_net(114, 50, 8), std::invalid_argument);
}

TEST(BiasLab, SimulatedFieldEqualsAnalytic) {
  for (int rf : {18, 26, 50}) {
    const auto spec = build_probe_net(rf, 0, 2);
    EXPECT_EQ(simulate_receptive_field(spec), rf);
  }
}

TEST(BiasLab, ValidInputSizeYieldsOutputSize) {
  auto spec = build_probe_net(26, 0, 2);
  spec.padding = Padding::Valid;
  const int n = valid_input_size(spec, 8);
  const auto net = init_probe_net(spec, 1);
  const auto y = probe_forward(net, Tensor<float>({1, n, n, 1}, 0.5f));
  EXPECT_EQ(y.height(), 8);
  EXPECT_EQ(y.width(), 8);
}

TEST(BiasLab, ProbeMseGradient) {
  for (float slope : {0.0f, 0.1f}) {
    auto spec = build_probe_net(18, 0, 2);
    spec.slope = slope;
    auto net = init_probe_net(spec, 2);
    std::mt19937_64 rng(51);
    const auto x = random_tensor<float>({1, 16, 16, 1}, rng, 0, 1);
    const auto t = bias_target(4, 2).to_tensor<float>();
    std::vector<Conv3dGradients<float>> g;
    probe_mse(net, x, t, &g);
    // float network; leaky units near zero make large steps cross kinks
    for (std::size_t l = 0; l < net.convs.size(); ++l) {
      for (std::size_t i = 0; i < net.convs[l].weights.size(); i += 3) {
        float& w = net.convs[l].weights[i];
        const float keep = w;
        w = keep + 1e-4f;
        const double fp = probe_mse(net, x, t, nullptr);
        w = keep - 1e-4f;
        const double fm = probe_mse(net, x, t, nullptr);
        w = keep;
        EXPECT_NEAR(g[l].weights[i], (fp - fm) / 2e-4, 1e-3) << "slope " << slope;
      }
    }
  }
}

TEST(BiasLab, TopPixelsCentre) {
  auto m = bias_target(32, 4);
  EXPECT_TRUE(top_pixels_are_center(m, 4));
  m.at(0, 0) = 2.0;
  EXPECT_FALSE(top_pixels_are_center(m, 4));
}

TEST(BiasLab, UnpaddedNetCannotBeatConstantPredictor) {
  BiasExperimentConfig cfg;
  cfg.input_size = 64;
  cfg.output_size = 16;
  cfg.bias_size = 2;
  cfg.receptive_fields = {26};
  cfg.iterations = 150;
  cfg.batch = 2;
  cfg.base_width = 4;
  cfg.tail = 20;
  const auto r = run_bias_arm(cfg, 26, BiasCrop::None, Padding::Valid);
  const double p = 4.0 / 256;
  EXPECT_GE(r.final_mse, 0.99 * p * (1 - p));
  // Spatially constant output: every pixel equal.
  for (std::size_t i = 1; i < r.prediction.size(); ++i)
    EXPECT_NEAR(r.prediction[i], r.prediction[0], 1e-5);
}

TEST(BiasLab, ConfigJsonRoundTrip) {
  BiasExperimentConfig c;
  c.iterations = 77;
  c.input = BiasInput::Noise;
  c.crops = {BiasCrop::Random};
  c.hidden_slope = 0.25;
  const auto back = bias_config_from_json(bias_config_to_json(c));
  EXPECT_EQ(back.iterations, 77);
  EXPECT_EQ(back.input, BiasInput::Noise);
  ASSERT_EQ(back.crops.size(), 1u);
  EXPECT_EQ(back.crops[0], BiasCrop::Random);
  EXPECT_EQ(back.hidden_slope, 0.25);
  EXPECT_THROW(bias_config_from_json(R"({"output_size": 30})"), std::invalid_argument);
  EXPECT_THROW(bias_config_from_json(R"({"hidden_slope": 1.0})"), std::invalid_argument);
}

TEST(Foveation, FixationPointsAndTies) {
  FixationMap g(9, 9);
  for (int y = 0; y < 9; ++y)
    for (int x = 0; x < 9; ++x) g.at(y, x) = std::exp(-((x - 6) * (x - 6) + (y - 2) * (y - 2)) / 4.0);
  EXPECT_EQ(extract_fixation_points(g, 1)[0], (PixelPoint{6, 2}));
  const auto u = extract_fixation_points(uniform_map(4, 4), 3);
  EXPECT_EQ(u, (std::vector<PixelPoint>{{0, 0}, {1, 0}, {2, 0}}));
  std::mt19937_64 rng(52);
  const auto r = random_map(10, 10, rng);
  const auto top = extract_fixation_points(r, 25);
  std::vector<std::size_t> idx(100);
  for (std::size_t i = 0; i < 100; ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return r[a] > r[b]; });
  for (int i = 0; i < 25; ++i) EXPECT_EQ(top[i].y * 10 + top[i].x, static_cast<int>(idx[i]));
}

TEST(Foveation, ResolutionMap) {
  const double ppd = 10.0;
  const auto m = build_resolution_map({{5, 5}}, ppd, 20, 60);
  EXPECT_DOUBLE_EQ(m.at(5, 5), 255.0);
  EXPECT_NEAR(m.at(5, 28), 127.5, 1e-9);  // 23 px = 2.3 degrees
  std::mt19937_64 rng(53);
  std::uniform_int_distribution<int> ux(0, 31), uy(0, 23);
  std::vector<PixelPoint> pts;
  for (int i = 0; i < 6; ++i) pts.push_back({ux(rng), uy(rng)});
  const auto r = build_resolution_map(pts, 7.0, 24, 32);
  for (int y = 0; y < 24; ++y)
    for (int x = 0; x < 32; ++x) {
      double best = 1e300;
      for (const auto& p : pts) best = std::min(best, std::hypot(x - p.x, y - p.y));
      EXPECT_NEAR(r.at(y, x), 255 * std::pow(2.0, -best / 7.0 / 2.3), 1e-9);
    }
  pts.push_back({0, 0});
  const auto more = build_resolution_map(pts, 7.0, 24, 32);
  for (std::size_t i = 0; i < r.size(); ++i) EXPECT_GE(more[i], r[i]);
  EXPECT_THROW(build_resolution_map({}, 7.0, 4, 4), std::invalid_argument);
}

TEST(Foveation, PyramidAndBlend) {
  std::mt19937_64 rng(54);
  const auto f = random_tensor<float>({1, 21, 30, 3}, rng, 0, 1);
  const auto pyr = build_pyramid(f, 4);
  EXPECT_EQ(pyr[1].height(), 11);
  EXPECT_EQ(pyr[1].width(), 15);
  EXPECT_EQ(pyr[3].height(), 3);
  EXPECT_EQ(pyr[3].width(), 4);
  const auto full = foveate_frame(f, FixationMap(21, 30, 255.0), 4);
  EXPECT_EQ(full.storage(), f.storage());
  EXPECT_EQ(foveate_frame(full, FixationMap(21, 30, 255.0), 4).storage(), f.storage());
  const auto coarse = foveate_frame(f, FixationMap(21, 30, 0.0), 4);
  EXPECT_EQ(coarse.storage(), upsample_level(pyr[3], 21, 30).storage());

  FixationMap grad(21, 30);
  for (int y = 0; y < 21; ++y)
    for (int x = 0; x < 30; ++x) grad.at(y, x) = 255.0 * x / 29.0;
  const auto out = foveate_frame(f, grad, 4);
  std::vector<Tensor<float>> up;
  for (const auto& l : pyr) up.push_back(upsample_level(l, 21, 30));
  for (int y = 0; y < 21; y += 5)
    for (int x = 0; x < 30; ++x) {
      const double l = 3.0 * (255.0 - grad.at(y, x)) / 255.0;
      const int lo = static_cast<int>(std::floor(l)), hi = std::min(lo + 1, 3);
      const double w = l - lo;
      EXPECT_NEAR(out(0, y, x, 1), (1 - w) * up[lo](0, y, x, 1) + w * up[hi](0, y, x, 1), 1e-6);
    }
  EXPECT_THROW(foveate_frame(f, grad, 1), std::invalid_argument);
}

TEST(Foveation, PyramidSmoothsTotalVariation) {
  std::mt19937_64 rng(55);
  const auto f = random_tensor<float>({1, 32, 32, 1}, rng, 0, 1);
  auto tv = [](const Tensor<float>& t) {
    double s = 0;
    for (int y = 0; y < t.height(); ++y)
      for (int x = 0; x + 1 < t.width(); ++x) s += std::abs(t(0, y, x + 1, 0) - t(0, y, x, 0));
    return s / (t.height() * t.width());
  };
  const auto pyr = build_pyramid(f, 4);
  for (std::size_t k = 1; k < pyr.size(); ++k) EXPECT_LE(tv(pyr[k]), tv(pyr[k - 1]));
}

TEST(Foveation, AverageResolution) {
  std::vector<FixationMap> full(3, FixationMap(4, 5, 255.0));
  auto a = average_resolution(full);
  EXPECT_DOUBLE_EQ(a.frame_sum_mean, 255.0 * 20);
  EXPECT_DOUBLE_EQ(a.pixel_mean, 255.0);
  std::vector<FixationMap> half{FixationMap(4, 5, 255.0), FixationMap(4, 5, 0.0)};
  EXPECT_DOUBLE_EQ(average_resolution(half).pixel_mean, 127.5);
  const auto sparse = build_resolution_map({{2, 2}}, 5, 20, 20);
  const auto dense = build_resolution_map({{2, 2}, {15, 15}, {2, 15}}, 5, 20, 20);
  EXPECT_LT(average_resolution({sparse}).pixel_mean, average_resolution({dense}).pixel_mean);
}
