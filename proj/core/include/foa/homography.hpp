#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace foa {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

struct Correspondence {
  Point2 src;
  Point2 dst;
};

/// Nonsingular 3x3 projective map, scaled so H(2,2) = 1 whenever that entry
/// is not (numerically) zero, otherwise to unit Frobenius norm.
class Homography {
 public:
  Homography() : m_(Eigen::Matrix3d::Identity()) {}
  /// Throws std::invalid_argument for singular or non-finite matrices.
  explicit Homography(const Eigen::Matrix3d& m);

  static Homography identity() { return Homography(); }
  static Homography translation(double tx, double ty);
  static Homography from_row_major(const std::array<double, 9>& v);

  const Eigen::Matrix3d& matrix() const { return m_; }
  std::array<double, 9> row_major() const;
  Homography inverse() const;
  /// (a * b) maps p to a(b(p)).
  Homography operator*(const Homography& o) const;

 private:
  Eigen::Matrix3d m_;
};

/// Throws std::domain_error when p maps onto the line at infinity.
Point2 project_point(const Homography& h, Point2 p);

/// Normalized DLT. Exact for 4 non-degenerate pairs, algebraic least squares
/// otherwise. Throws std::invalid_argument on fewer than 4 pairs or a
/// degenerate configuration (collinear triples, rank deficiency).
Homography estimate_homography_dlt(std::span<const Correspondence> pairs);

struct RansacOptions {
  double inlier_threshold = 3.0;  // px, forward transfer error
  int iterations = 1000;
  std::uint64_t seed = 0;
  /// Minimum consensus, as a fraction of the correspondences, for success.
  double min_inlier_fraction = 0.25;
  int min_inliers = 8;
};

struct RansacResult {
  bool success = false;
  Homography h;
  std::vector<bool> inliers;
  int inlier_count = 0;
  std::string message;
};

/// Deterministic given the seed. On failure `h`/`inliers` hold the best
/// candidate seen (possibly identity) and `message` explains why.
RansacResult ransac_homography(std::span<const Correspondence> pairs,
                               const RansacOptions& opt = {});

std::string homography_to_json(const Homography& h);
Homography homography_from_json(const std::string& text);

}  // namespace foa
