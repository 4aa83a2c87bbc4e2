#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "foa/homography.hpp"
#include "foa/metric_error.hpp"

using namespace foa;

namespace {

Homography sample_h(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-0.2, 0.2);
  Eigen::Matrix3d m;
  m << 1 + u(rng), u(rng), 20 * u(rng), u(rng), 1 + u(rng), 20 * u(rng), 1e-3 * u(rng),
      1e-3 * u(rng), 1;
  return Homography(m);
}

std::vector<Correspondence> pairs_from(const Homography& h, int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0, 200);
  std::vector<Correspondence> out;
  for (int i = 0; i < n; ++i) {
    Point2 p{u(rng), u(rng)};
    out.push_back({p, project_point(h, p)});
  }
  return out;
}

bool valid(const CameraScene& s) {
  try {
    check_scene(s);
    return true;
  } catch (const std::invalid_argument&) {
    return false;
  }
}

}  // namespace

TEST(Homography, DltRecoversExactMapFromFourPoints) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const auto h = sample_h(rng);
    const auto pairs = pairs_from(h, 4, rng);
    const auto est = estimate_homography_dlt(pairs);
    EXPECT_LT((est.matrix() - h.matrix()).norm(), 1e-8);
  }
}

TEST(Homography, CompositionAndInverse) {
  std::mt19937_64 rng(22);
  const auto a = sample_h(rng), b = sample_h(rng);
  const Point2 p{13, 71};
  const auto ab = project_point(a * b, p);
  const auto seq = project_point(a, project_point(b, p));
  EXPECT_NEAR(ab.x, seq.x, 1e-9);
  EXPECT_NEAR(ab.y, seq.y, 1e-9);
  const auto back = project_point(a.inverse(), project_point(a, p));
  EXPECT_NEAR(back.x, p.x, 1e-9);
  EXPECT_NEAR(back.y, p.y, 1e-9);
}

TEST(Homography, DegenerateInputsThrow) {
  std::vector<Correspondence> collinear{{{0, 0}, {0, 0}}, {{1, 1}, {1, 1}}, {{2, 2}, {2, 2}},
                                        {{0, 5}, {0, 5}}};
  EXPECT_THROW(estimate_homography_dlt(collinear), std::invalid_argument);
  EXPECT_THROW(estimate_homography_dlt(std::span<const Correspondence>(collinear.data(), 3)),
               std::invalid_argument);
  Eigen::Matrix3d singular = Eigen::Matrix3d::Zero();
  singular(0, 0) = 1;
  EXPECT_THROW(Homography{singular}, std::invalid_argument);
}

TEST(Homography, RansacRejectsOutliers) {
  std::mt19937_64 rng(23);
  const auto h = sample_h(rng);
  auto pairs = pairs_from(h, 60, rng);
  std::uniform_real_distribution<double> u(0, 200);
  for (int i = 0; i < 20; ++i) pairs[i].dst = {u(rng), u(rng)};
  RansacOptions opt;
  opt.seed = 5;
  const auto r = ransac_homography(pairs, opt);
  ASSERT_TRUE(r.success) << r.message;
  EXPECT_GE(r.inlier_count, 40);
  EXPECT_LT((r.h.matrix() - h.matrix()).norm(), 1e-6);
  const auto again = ransac_homography(pairs, opt);
  EXPECT_EQ(again.inliers, r.inliers);
}

TEST(Homography, JsonRoundTrip) {
  std::mt19937_64 rng(24);
  const auto h = sample_h(rng);
  EXPECT_EQ(homography_from_json(homography_to_json(h)).row_major(), h.row_major());
}

TEST(MetricError, RayOracleHandExample) {
  CameraScene s;
  s.normal = {0, 0, 1};
  s.x2 = {0, 0, 1};
  s.h = 1;
  s.camera_a = {-1, 0, 2};
  s.baseline = {2, 0, 0};
  const auto e = metric_error_ray_oracle(s);
  EXPECT_NEAR(e.x(), 2, 1e-12);
  EXPECT_NEAR(e.y(), 0, 1e-12);
  EXPECT_NEAR(e.z(), 0, 1e-12);
}

TEST(MetricError, ZeroHeightOrZeroBaselineGivesNoError) {
  std::mt19937_64 rng(25);
  for (int i = 0; i < 50; ++i) {
    auto s = sample_scene(rng());
    if (!valid(s)) continue;
    auto flat = s;
    flat.h = 0;
    flat.x2 = s.x2 - s.h * s.normal;
    EXPECT_LT(metric_error_ray_oracle(flat).norm(), 1e-9);
    auto same = s;
    same.baseline.setZero();
    EXPECT_LT(metric_error_ray_oracle(same).norm(), 1e-12);
  }
}

TEST(MetricError, ClosedFormsAgreeWithRayOracle) {
  for (std::uint64_t seed = 0; seed < 2000; ++seed) {
    const auto s = sample_scene(seed);
    if (!valid(s)) continue;
    const auto ray = metric_error_ray_oracle(s);
    const double scale = s.h + (s.x2 - s.camera_a).norm() + s.baseline.norm();
    EXPECT_LT(relative_disagreement(metric_error_plane_frame(s).e_w, ray, scale), 1e-9);
    EXPECT_LT(relative_disagreement(metric_error_camera_frame(s).e_w, ray, scale), 1e-9);
  }
}

TEST(MetricError, LiteralFormulaOnlyHoldsForInPlaneBaselines) {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto s = sample_scene(seed, true);
    if (!valid(s)) continue;
    const double scale = s.h + s.x2.norm() + s.baseline.norm();
    EXPECT_LT(relative_disagreement(metric_error_camera_frame_literal(s),
                                    metric_error_ray_oracle(s), scale),
              1e-9);
  }
  CameraScene s;
  s.normal = {0, 0, 1};
  s.h = 1;
  s.camera_a = {0, 0, 5};
  s.x2 = {3, 0, 1};
  s.baseline = {0.5, 0, 1};
  EXPECT_GT(relative_disagreement(metric_error_camera_frame_literal(s), metric_error_ray_oracle(s), 1),
            1e-3);
}

TEST(MetricError, BoundCounterexampleWithVerticalBaseline) {
  // Preconditions hold yet the error exceeds 2h when the baseline is
  // perpendicular to the plane.
  CameraScene s;
  s.normal = {0, 0, 1};
  s.h = 1;
  s.camera_a = {0, 0, 3};
  s.x2 = {std::sqrt(396.0), 0, 1};
  s.baseline = {0, 0, -1};
  const auto c = check_bound_observation1(s);
  EXPECT_TRUE(c.preconditions_hold);
  EXPECT_TRUE(c.violated);
  EXPECT_NEAR(c.error_norm, metric_error_ray_oracle(s).norm(), 1e-12);
  EXPECT_GT(c.error_norm, 9.0);
}

TEST(MetricError, BoundHoldsForInPlaneBaselines) {
  MonteCarloOptions opt;
  opt.trials = 20000;
  opt.seed = 3;
  opt.parallel_baseline = true;
  opt.keep_rows = false;
  const auto r = monte_carlo_bound_suite(opt);
  EXPECT_GT(r.precondition_hits, 0);
  EXPECT_EQ(r.violations, 0);
}

TEST(MetricError, ProjectionBoundExample) {
  CameraScene s;
  s.normal = {0, 0, 1};
  s.h = 1;
  s.camera_a = {0, 0, 0};
  // Camera A looks down -n; x2 at distance 3h, 60 degrees off the normal.
  s.x2 = {3 * std::sin(M_PI / 3), 0, -3 * std::cos(M_PI / 3)};
  s.focal_px = 350;
  s.baseline = {0.1, 0, 0};
  EXPECT_NEAR(projection_error_bound(s), 2 * 350 * 1 / (1 + 3 * 0.5), 1e-9);
  EXPECT_LE(projection_error_bound(s), 2 * s.focal_px);
}

TEST(MetricError, InvalidScenesThrow) {
  CameraScene s;
  s.normal = {0, 0, 2};
  EXPECT_THROW(check_scene(s), std::invalid_argument);
  s.normal = {0, 0, 1};
  s.x2 = {0, 0, 1};
  s.h = 1;
  s.camera_a = {0, 0, 0.5};  // below x2's height over the plane
  EXPECT_THROW(metric_error_ray_oracle(s), std::invalid_argument);
}
