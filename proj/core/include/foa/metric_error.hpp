#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <iosfwd>
#include <vector>

namespace foa {

/// Two cameras viewing a point x2 that lies at height h above a plane.
///
/// `normal` is the unit plane normal pointing toward the side that holds
/// x2 and both cameras. Camera A sits at `camera_a`, camera B at
/// camera_a + baseline. The plane is {X : (X - x2) . normal = -h}.
struct CameraScene {
  Eigen::Vector3d normal{0, 0, 1};
  Eigen::Vector3d x2{0, 0, 1};
  double h = 1.0;
  Eigen::Vector3d camera_a{0, 0, 0};
  Eigen::Vector3d baseline{0, 0, 0};
  double focal_px = 350.0;

  Eigen::Vector3d camera_b() const { return camera_a + baseline; }
  /// Height of a world point above the plane.
  double height_of(const Eigen::Vector3d& p) const {
    return (p - x2).dot(normal) + h;
  }
};

struct BoundDiagnostics {
  Eigen::Vector3d e_w = Eigen::Vector3d::Zero();
  double e_a = 0.0;  // px, camera A looking along -normal
  double M = 0.0;
  double Q = 0.0;
  double Z = 0.0;
  double cos_theta = 0.0;
  double cos_beta = 0.0;
  double gamma = 0.0;
  Eigen::Vector3d p_a = Eigen::Vector3d::Zero();
  Eigen::Vector3d p_b = Eigen::Vector3d::Zero();
  double L_a = 0.0;
  double L_b = 0.0;
};

/// Validates unit normal, h >= 0 and L_a, L_b > h. Throws
/// std::invalid_argument with the failing condition otherwise.
void check_scene(const CameraScene& s);

/// Reference: intersect rays A->x2 and B->x2 with the plane and subtract.
Eigen::Vector3d metric_error_ray_oracle(const CameraScene& s);

/// e_w = h (p_b/(L_b - h) - p_a/(L_a - h)), with p_a, p_b the in-plane
/// offsets of the camera feet from the foot of x2.
BoundDiagnostics metric_error_plane_frame(const CameraScene& s);

/// Camera-A-centred closed form
///   e_w = h Q (v_hat - (cos_beta / cos_theta) x2_hat),
/// with cos angles measured against the plane-facing normal -n.
BoundDiagnostics metric_error_camera_frame(const CameraScene& s);

/// Camera-frame expression h v/((x2-v).n) (Z n n^T - I) transcribed
/// literally. Kept for comparison; it disagrees with the ray oracle
/// whenever the baseline has a component along the normal.
Eigen::Vector3d metric_error_camera_frame_literal(const CameraScene& s);

struct Observation1Check {
  bool preconditions_hold = false;
  double error_norm = 0.0;
  double bound = 0.0;  // 2h
  bool violated = false;
};

/// Preconditions: ||x2|| >= 2||v|| / |cos_theta| and ||x2|| > h, with x2
/// and v taken relative to camera A.
Observation1Check check_bound_observation1(const CameraScene& s);

/// 2 f h / (h + ||x2|| cos_theta). Requires cos_theta >= 0; at
/// cos_theta = 0 the bound is 2f.
double projection_error_bound(const CameraScene& s);

struct MonteCarloOptions {
  long long trials = 100000;
  std::uint64_t seed = 0;
  int threads = 0;
  bool keep_rows = true;
  /// Restrict baselines to the plane (v . n = 0).
  bool parallel_baseline = false;
};

struct MonteCarloRow {
  long long trial = 0;
  bool skipped = false;
  double h = 0, x2_norm = 0, v_norm = 0, cos_theta = 0, cos_beta = 0;
  double ew_norm = 0;
  double rel_plane = 0, rel_camera = 0, rel_literal = 0;
  bool preconditions = false;
  bool violation = false;
  double e_a = 0, bound_px = 0, focal_px = 0;
};

struct MonteCarloReport {
  long long trials = 0;
  long long skipped = 0;
  long long precondition_hits = 0;
  long long violations = 0;
  double max_rel_plane = 0.0;
  double max_rel_camera = 0.0;
  double max_rel_literal = 0.0;
  long long literal_mismatches = 0;  // rel_literal > 1e-9
  double max_bound_over_2f = 0.0;    // max of bound / (2f)
  long long projection_exceed = 0;   // e_a above its bound, preconditions holding
  double worst_violation_ratio = 0.0;  // max ||e_w|| / 2h among violations
  std::vector<MonteCarloRow> rows;
};

/// Relative disagreement used throughout: ||a - b|| / max(||b||, 1e-12 * scale)
/// where scale = h + ||x2|| + ||v||.
double relative_disagreement(const Eigen::Vector3d& a, const Eigen::Vector3d& b,
                             double scale);

CameraScene sample_scene(std::uint64_t seed, bool parallel_baseline = false);

MonteCarloReport monte_carlo_bound_suite(const MonteCarloOptions& opt);

void write_monte_carlo_csv(std::ostream& out, const MonteCarloReport& r);

}  // namespace foa
