#include "foa/homography.hpp"

#include <Eigen/LU>
#include <Eigen/Geometry>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <random>
#include <stdexcept>

namespace foa {

namespace {

Eigen::Matrix3d scale_normalize(const Eigen::Matrix3d& m) {
  if (!m.allFinite()) throw std::invalid_argument("Homography: non-finite entries");
  const double fro = m.norm();
  if (fro == 0.0) throw std::invalid_argument("Homography: zero matrix");
  if (std::abs(m(2, 2)) > 1e-12 * fro) return m / m(2, 2);
  return m / fro;
}

// Hartley conditioning: centroid to origin, mean distance sqrt(2).
Eigen::Matrix3d conditioning(const std::vector<Eigen::Vector2d>& pts) {
  Eigen::Vector2d c = Eigen::Vector2d::Zero();
  for (const auto& p : pts) c += p;
  c /= static_cast<double>(pts.size());
  double mean = 0.0;
  for (const auto& p : pts) mean += (p - c).norm();
  mean /= static_cast<double>(pts.size());
  if (!(mean > 0.0)) throw std::invalid_argument("DLT: all points coincide");
  const double s = std::sqrt(2.0) / mean;
  Eigen::Matrix3d t;
  t << s, 0, -s * c.x(), 0, s, -s * c.y(), 0, 0, 1;
  return t;
}

bool has_collinear_triple(const std::vector<Eigen::Vector2d>& p) {
  // Called on conditioned coordinates, so a fixed tolerance is meaningful.
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = i + 1; j < p.size(); ++j)
      for (std::size_t k = j + 1; k < p.size(); ++k) {
        const Eigen::Vector2d a = p[j] - p[i], b = p[k] - p[i];
        if (std::abs(a.x() * b.y() - a.y() * b.x()) < 1e-9) return true;
      }
  return false;
}

double transfer_error(const Homography& h, const Correspondence& c) {
  const Eigen::Vector3d q = h.matrix() * Eigen::Vector3d(c.src.x, c.src.y, 1.0);
  if (std::abs(q.z()) < 1e-15) return std::numeric_limits<double>::infinity();
  return std::hypot(q.x() / q.z() - c.dst.x, q.y() / q.z() - c.dst.y);
}

}  // namespace

Homography::Homography(const Eigen::Matrix3d& m) : m_(scale_normalize(m)) {
  if (std::abs(m_.determinant()) < 1e-14) {
    throw std::invalid_argument("Homography: singular matrix");
  }
}

Homography Homography::translation(double tx, double ty) {
  Eigen::Matrix3d m = Eigen::Matrix3d::Identity();
  m(0, 2) = tx;
  m(1, 2) = ty;
  return Homography(m);
}

Homography Homography::from_row_major(const std::array<double, 9>& v) {
  Eigen::Matrix3d m;
  m << v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8];
  return Homography(m);
}

std::array<double, 9> Homography::row_major() const {
  std::array<double, 9> v{};
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) v[r * 3 + c] = m_(r, c);
  return v;
}

Homography Homography::inverse() const { return Homography(m_.inverse()); }

Homography Homography::operator*(const Homography& o) const {
  return Homography(m_ * o.m_);
}

Point2 project_point(const Homography& h, Point2 p) {
  const Eigen::Vector3d q = h.matrix() * Eigen::Vector3d(p.x, p.y, 1.0);
  const double scale = std::abs(q.x()) + std::abs(q.y()) + 1.0;
  if (!(std::abs(q.z()) > 1e-14 * scale)) {
    throw std::domain_error("project_point: point maps to infinity");
  }
  return {q.x() / q.z(), q.y() / q.z()};
}

Homography estimate_homography_dlt(std::span<const Correspondence> pairs) {
  const std::size_t n = pairs.size();
  if (n < 4) throw std::invalid_argument("DLT: need at least 4 correspondences");
  std::vector<Eigen::Vector2d> src(n), dst(n);
  for (std::size_t i = 0; i < n; ++i) {
    src[i] = {pairs[i].src.x, pairs[i].src.y};
    dst[i] = {pairs[i].dst.x, pairs[i].dst.y};
    if (!src[i].allFinite() || !dst[i].allFinite()) {
      throw std::invalid_argument("DLT: non-finite coordinates");
    }
  }
  const Eigen::Matrix3d ts = conditioning(src), td = conditioning(dst);
  for (std::size_t i = 0; i < n; ++i) {
    src[i] = (ts * src[i].homogeneous()).hnormalized();
    dst[i] = (td * dst[i].homogeneous()).hnormalized();
  }
  if (n == 4 && (has_collinear_triple(src) || has_collinear_triple(dst))) {
    throw std::invalid_argument("DLT: degenerate configuration (collinear points)");
  }

  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2 * static_cast<Eigen::Index>(n), 9);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = src[i].x(), y = src[i].y(), u = dst[i].x(), v = dst[i].y();
    const auto r = 2 * static_cast<Eigen::Index>(i);
    a.row(r) << -x, -y, -1, 0, 0, 0, u * x, u * y, u;
    a.row(r + 1) << 0, 0, 0, -x, -y, -1, v * x, v * y, v;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  // A has rank 8 for any non-degenerate configuration.
  if (sv.size() < 8 || sv(7) < 1e-10 * sv(0)) {
    throw std::invalid_argument("DLT: degenerate configuration (rank deficient)");
  }
  const Eigen::VectorXd h = svd.matrixV().col(8);
  Eigen::Matrix3d hn;
  hn << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);
  const Eigen::Matrix3d m = td.inverse() * hn * ts;
  if (std::abs((m / m.norm()).determinant()) < 1e-12) {
    throw std::invalid_argument("DLT: degenerate configuration (singular result)");
  }
  return Homography(m);
}

RansacResult ransac_homography(std::span<const Correspondence> pairs,
                               const RansacOptions& opt) {
  const int n = static_cast<int>(pairs.size());
  if (n < 4) throw std::invalid_argument("RANSAC: need at least 4 correspondences");
  if (opt.iterations < 1 || !(opt.inlier_threshold > 0.0)) {
    throw std::invalid_argument("RANSAC: bad options");
  }
  const int needed = std::max(
      {opt.min_inliers, 4,
       static_cast<int>(std::ceil(opt.min_inlier_fraction * n))});

  std::mt19937_64 rng(opt.seed);
  RansacResult best;
  best.inliers.assign(n, false);
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;

  for (int it = 0; it < opt.iterations; ++it) {
    // Partial Fisher-Yates for a 4-subset.
    for (int k = 0; k < 4; ++k) {
      std::uniform_int_distribution<int> pick(k, n - 1);
      std::swap(idx[k], idx[pick(rng)]);
    }
    const std::array<Correspondence, 4> sample{pairs[idx[0]], pairs[idx[1]],
                                               pairs[idx[2]], pairs[idx[3]]};
    Homography cand;
    try {
      cand = estimate_homography_dlt(sample);
    } catch (const std::invalid_argument&) {
      continue;
    }
    int count = 0;
    for (int i = 0; i < n; ++i) {
      if (transfer_error(cand, pairs[i]) <= opt.inlier_threshold) ++count;
    }
    if (count > best.inlier_count) {
      best.inlier_count = count;
      best.h = cand;
      for (int i = 0; i < n; ++i) {
        best.inliers[i] = transfer_error(cand, pairs[i]) <= opt.inlier_threshold;
      }
    }
  }

  if (best.inlier_count < needed) {
    best.success = false;
    best.message = "best consensus " + std::to_string(best.inlier_count) + " of " +
                   std::to_string(n) + " below required " + std::to_string(needed);
    return best;
  }

  std::vector<Correspondence> in;
  for (int i = 0; i < n; ++i)
    if (best.inliers[i]) in.push_back(pairs[i]);
  try {
    Homography refit = estimate_homography_dlt(in);
    int count = 0;
    std::vector<bool> mask(n, false);
    for (int i = 0; i < n; ++i) {
      mask[i] = transfer_error(refit, pairs[i]) <= opt.inlier_threshold;
      count += mask[i];
    }
    if (count >= best.inlier_count) {
      best.h = refit;
      best.inliers = std::move(mask);
      best.inlier_count = count;
    }
  } catch (const std::invalid_argument& e) {
    best.message = std::string("refit skipped: ") + e.what();
  }
  best.success = true;
  return best;
}

std::string homography_to_json(const Homography& h) {
  return nlohmann::json(h.row_major()).dump();
}

Homography homography_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  if (!j.is_array() || j.size() != 9) {
    throw std::invalid_argument("homography JSON must be an array of 9 numbers");
  }
  return Homography::from_row_major(j.get<std::array<double, 9>>());
}

}  // namespace foa
