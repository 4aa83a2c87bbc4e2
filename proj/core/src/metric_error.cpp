#include "foa/metric_error.hpp"

#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <mutex>
#include <ostream>
#include <random>
#include <stdexcept>

#include "foa/parallel.hpp"
#include "foa/rng.hpp"

namespace foa {

void check_scene(const CameraScene& s) {
  if (std::abs(s.normal.norm() - 1.0) > 1e-9) {
    throw std::invalid_argument("CameraScene: normal must be a unit vector");
  }
  if (!(s.h >= 0.0) || !std::isfinite(s.h)) {
    throw std::invalid_argument("CameraScene: h must be finite and >= 0");
  }
  const double la = s.height_of(s.camera_a), lb = s.height_of(s.camera_b());
  if (!(la > s.h) || !(lb > s.h)) {
    throw std::invalid_argument(
        "CameraScene: cameras must be farther from the plane than x2 "
        "(L_a = " + std::to_string(la) + ", L_b = " + std::to_string(lb) +
        ", h = " + std::to_string(s.h) + ")");
  }
}

Eigen::Vector3d metric_error_ray_oracle(const CameraScene& s) {
  check_scene(s);
  auto hit = [&](const Eigen::Vector3d& c) {
    const double lc = s.height_of(c);
    const double t = lc / (lc - s.h);
    return Eigen::Vector3d(c + t * (s.x2 - c));
  };
  return hit(s.camera_a) - hit(s.camera_b());
}

namespace {

void fill_angles(const CameraScene& s, BoundDiagnostics& d) {
  const Eigen::Vector3d x2 = s.x2 - s.camera_a;
  const Eigen::Vector3d& v = s.baseline;
  const Eigen::Vector3d n_down = -s.normal;
  const double x2n = x2.norm(), vn = v.norm();
  d.L_a = s.height_of(s.camera_a);
  d.L_b = s.height_of(s.camera_b());
  d.cos_theta = x2n > 0 ? x2.dot(n_down) / x2n : 1.0;
  d.cos_beta = vn > 0 ? v.dot(n_down) / vn : 0.0;
  d.gamma = s.h + x2n * d.cos_theta;
  d.M = vn > 0 ? x2n * d.cos_theta / vn : std::numeric_limits<double>::infinity();
  d.Z = x2n * d.cos_theta > 0 ? s.h / (x2n * d.cos_theta)
                              : std::numeric_limits<double>::infinity();
  d.Q = vn / (x2 - v).dot(n_down);
}

void fill_projection(const CameraScene& s, BoundDiagnostics& d) {
  d.e_a = s.focal_px * d.e_w.norm() / d.L_a;
}

}  // namespace

BoundDiagnostics metric_error_plane_frame(const CameraScene& s) {
  check_scene(s);
  BoundDiagnostics d;
  fill_angles(s, d);
  const Eigen::Vector3d foot = s.x2 - s.h * s.normal;
  auto in_plane = [&](const Eigen::Vector3d& c, double lc) {
    return Eigen::Vector3d((c - foot) - lc * s.normal);
  };
  d.p_a = in_plane(s.camera_a, d.L_a);
  d.p_b = in_plane(s.camera_b(), d.L_b);
  d.e_w = s.h * (d.p_b / (d.L_b - s.h) - d.p_a / (d.L_a - s.h));
  fill_projection(s, d);
  return d;
}

BoundDiagnostics metric_error_camera_frame(const CameraScene& s) {
  check_scene(s);
  BoundDiagnostics d;
  fill_angles(s, d);
  const Eigen::Vector3d x2 = s.x2 - s.camera_a;
  const double vn = s.baseline.norm();
  if (vn == 0.0 || s.h == 0.0) {
    d.e_w.setZero();
  } else {
    const Eigen::Vector3d v_hat = s.baseline / vn;
    const Eigen::Vector3d x_hat = x2.normalized();
    d.e_w = s.h * d.Q * (v_hat - (d.cos_beta / d.cos_theta) * x_hat);
  }
  fill_projection(s, d);
  return d;
}

Eigen::Vector3d metric_error_camera_frame_literal(const CameraScene& s) {
  check_scene(s);
  const Eigen::Vector3d x2 = s.x2 - s.camera_a;
  const Eigen::Vector3d& v = s.baseline;
  const Eigen::Vector3d& n = s.normal;
  const double z = 1.0 - 1.0 / (1.0 - s.h / (s.h - x2.dot(n)));
  const Eigen::Matrix3d m = z * n * n.transpose() - Eigen::Matrix3d::Identity();
  return s.h / (x2 - v).dot(n) * (m.transpose() * v);
}

Observation1Check check_bound_observation1(const CameraScene& s) {
  Observation1Check c;
  c.bound = 2.0 * s.h;
  const BoundDiagnostics d = metric_error_plane_frame(s);
  c.error_norm = d.e_w.norm();
  const double x2n = (s.x2 - s.camera_a).norm();
  const double abs_cos = std::abs(d.cos_theta);
  c.preconditions_hold =
      abs_cos > 0 && x2n >= 2.0 * s.baseline.norm() / abs_cos && x2n > s.h;
  c.violated = c.preconditions_hold && c.error_norm > c.bound * (1.0 + 1e-12);
  return c;
}

double projection_error_bound(const CameraScene& s) {
  const Eigen::Vector3d x2 = s.x2 - s.camera_a;
  const double x2n = x2.norm();
  const double cos_theta = x2n > 0 ? x2.dot(-s.normal) / x2n : 1.0;
  if (cos_theta < 0) {
    throw std::invalid_argument("projection_error_bound: requires cos(theta) >= 0");
  }
  const double denom = s.h + x2n * cos_theta;
  if (denom <= 0) return 2.0 * s.focal_px;
  return 2.0 * s.focal_px * s.h / denom;
}

double relative_disagreement(const Eigen::Vector3d& a, const Eigen::Vector3d& b,
                             double scale) {
  return (a - b).norm() / std::max(b.norm(), 1e-12 * scale);
}

CameraScene sample_scene(std::uint64_t seed, bool parallel_baseline) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  auto unit = [&] {
    Eigen::Vector3d u;
    do {
      u = {gauss(rng), gauss(rng), gauss(rng)};
    } while (u.norm() < 1e-12);
    return Eigen::Vector3d(u.normalized());
  };
  CameraScene s;
  s.normal = unit();
  s.x2 = unit() * std::exp(4.0 * uni(rng));
  s.h = std::exp(-2.0 + 4.0 * uni(rng));
  s.baseline = unit() * std::exp(-3.0 + 5.0 * uni(rng));
  if (s.x2.dot(s.normal) > 0) s.normal = -s.normal;
  if (parallel_baseline) {
    s.baseline -= s.baseline.dot(s.normal) * s.normal;
  }
  s.focal_px = 350.0;
  return s;
}

MonteCarloReport monte_carlo_bound_suite(const MonteCarloOptions& opt) {
  if (opt.trials < 1) throw std::invalid_argument("monte_carlo: trials must be >= 1");
  const auto n = static_cast<std::size_t>(opt.trials);
  std::vector<MonteCarloRow> rows(n);

  parallel_for(
      n,
      [&](std::size_t i) {
        MonteCarloRow& r = rows[i];
        r.trial = static_cast<long long>(i);
        const CameraScene s =
            sample_scene(derive_seed(opt.seed, i), opt.parallel_baseline);
        r.h = s.h;
        r.x2_norm = s.x2.norm();
        r.v_norm = s.baseline.norm();
        try {
          check_scene(s);
        } catch (const std::invalid_argument&) {
          r.skipped = true;
          return;
        }
        const Eigen::Vector3d oracle = metric_error_ray_oracle(s);
        const BoundDiagnostics pf = metric_error_plane_frame(s);
        const BoundDiagnostics cf = metric_error_camera_frame(s);
        const Eigen::Vector3d lit = metric_error_camera_frame_literal(s);
        const double scale = s.h + r.x2_norm + r.v_norm;
        r.cos_theta = cf.cos_theta;
        r.cos_beta = cf.cos_beta;
        r.ew_norm = oracle.norm();
        r.rel_plane = relative_disagreement(pf.e_w, oracle, scale);
        r.rel_camera = relative_disagreement(cf.e_w, oracle, scale);
        r.rel_literal = relative_disagreement(lit, oracle, scale);
        const Observation1Check ob = check_bound_observation1(s);
        r.preconditions = ob.preconditions_hold;
        r.violation = ob.violated;
        r.e_a = pf.e_a;
        r.bound_px = projection_error_bound(s);
        r.focal_px = s.focal_px;
      },
      opt.threads);

  MonteCarloReport rep;
  rep.trials = opt.trials;
  for (const auto& r : rows) {
    if (r.skipped) {
      ++rep.skipped;
      continue;
    }
    rep.max_rel_plane = std::max(rep.max_rel_plane, r.rel_plane);
    rep.max_rel_camera = std::max(rep.max_rel_camera, r.rel_camera);
    rep.max_rel_literal = std::max(rep.max_rel_literal, r.rel_literal);
    rep.literal_mismatches += r.rel_literal > 1e-9;
    rep.precondition_hits += r.preconditions;
    if (r.violation) {
      ++rep.violations;
      rep.worst_violation_ratio =
          std::max(rep.worst_violation_ratio, r.ew_norm / (2.0 * r.h));
    }
    rep.max_bound_over_2f = std::max(rep.max_bound_over_2f, r.bound_px / (2.0 * r.focal_px));
    rep.projection_exceed += r.preconditions && r.e_a > r.bound_px * (1.0 + 1e-12);
  }
  if (opt.keep_rows) rep.rows = std::move(rows);
  return rep;
}

void write_monte_carlo_csv(std::ostream& out, const MonteCarloReport& r) {
  out << "trial,skipped,h,x2_norm,v_norm,cos_theta,cos_beta,ew_norm,rel_plane,"
         "rel_camera,rel_literal,preconditions,violation,bound_slack,e_a_px,"
         "bound_px\n";
  out.precision(17);
  for (const auto& row : r.rows) {
    out << row.trial << ',' << row.skipped << ',' << row.h << ',' << row.x2_norm
        << ',' << row.v_norm << ',' << row.cos_theta << ',' << row.cos_beta << ','
        << row.ew_norm << ',' << row.rel_plane << ',' << row.rel_camera << ','
        << row.rel_literal << ',' << row.preconditions << ',' << row.violation
        << ',' << (2.0 * row.h - row.ew_norm) << ',' << row.e_a << ','
        << row.bound_px << '\n';
  }
}

}  // namespace foa
