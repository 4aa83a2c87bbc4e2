#include "foa/foveation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace foa {

std::vector<PixelPoint> extract_fixation_points(const FixationMap& map, int n) {
  if (map.empty()) throw std::invalid_argument("extract_fixation_points: empty map");
  const std::size_t k = std::min<std::size_t>(std::max(n, 0), map.size());
  std::vector<std::size_t> idx(map.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::partial_sort(idx.begin(), idx.begin() + k, idx.end(), [&](std::size_t a, std::size_t b) {
    return map[a] > map[b] || (map[a] == map[b] && a < b);
  });
  std::vector<PixelPoint> out;
  for (std::size_t i = 0; i < k; ++i) {
    out.push_back({static_cast<int>(idx[i] % map.width()), static_cast<int>(idx[i] / map.width())});
  }
  return out;
}

FixationMap build_resolution_map(const std::vector<PixelPoint>& points, double px_per_degree,
                                 int height, int width, double half_deg) {
  if (points.empty()) throw std::invalid_argument("build_resolution_map: no fixation points");
  if (!(px_per_degree > 0) || !(half_deg > 0)) {
    throw std::invalid_argument("build_resolution_map: scale and half distance must be positive");
  }
  FixationMap r(height, width);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& p : points) best = std::min(best, std::hypot(x - p.x, y - p.y));
      const double deg = best / px_per_degree;
      r.at(y, x) = std::clamp(255.0 * std::exp2(-deg / half_deg), 0.0, 255.0);
    }
  return r;
}

namespace {

constexpr float kTaps[5] = {1.0f / 16, 4.0f / 16, 6.0f / 16, 4.0f / 16, 1.0f / 16};

Tensor<float> reduce(const Tensor<float>& in) {
  const Shape4 s = in.shape();
  Tensor<float> tmp(s);
  for (int y = 0; y < s.h; ++y)
    for (int x = 0; x < s.w; ++x)
      for (int c = 0; c < s.c; ++c) {
        float acc = 0.0f;
        for (int k = -2; k <= 2; ++k) acc += kTaps[k + 2] * in(0, y, std::clamp(x + k, 0, s.w - 1), c);
        tmp(0, y, x, c) = acc;
      }
  const int h2 = (s.h + 1) / 2, w2 = (s.w + 1) / 2;
  Tensor<float> out({1, h2, w2, s.c});
  for (int y = 0; y < h2; ++y)
    for (int x = 0; x < w2; ++x)
      for (int c = 0; c < s.c; ++c) {
        float acc = 0.0f;
        for (int k = -2; k <= 2; ++k) acc += kTaps[k + 2] * tmp(0, std::clamp(2 * y + k, 0, s.h - 1), 2 * x, c);
        out(0, y, x, c) = acc;
      }
  return out;
}

}  // namespace

std::vector<Tensor<float>> build_pyramid(const Tensor<float>& frame, int levels) {
  if (levels < 1) throw std::invalid_argument("build_pyramid: levels must be >= 1");
  if (frame.frames() != 1) throw std::invalid_argument("build_pyramid: expects a single frame");
  std::vector<Tensor<float>> pyr{frame};
  for (int k = 1; k < levels; ++k) pyr.push_back(reduce(pyr.back()));
  return pyr;
}

Tensor<float> upsample_level(const Tensor<float>& level, int height, int width) {
  const Shape4 s = level.shape();
  if (s.h == height && s.w == width) return level;
  Tensor<float> out({1, height, width, s.c});
  const double sy = static_cast<double>(s.h) / height, sx = static_cast<double>(s.w) / width;
  for (int y = 0; y < height; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, s.h - 1.0);
    const int y0 = static_cast<int>(fy), y1 = std::min(y0 + 1, s.h - 1);
    const double wy = fy - y0;
    for (int x = 0; x < width; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, s.w - 1.0);
      const int x0 = static_cast<int>(fx), x1 = std::min(x0 + 1, s.w - 1);
      const double wx = fx - x0;
      for (int c = 0; c < s.c; ++c) {
        const double top = (1 - wx) * level(0, y0, x0, c) + wx * level(0, y0, x1, c);
        const double bot = (1 - wx) * level(0, y1, x0, c) + wx * level(0, y1, x1, c);
        out(0, y, x, c) = static_cast<float>((1 - wy) * top + wy * bot);
      }
    }
  }
  return out;
}

double blend_level(double resolution, int levels) {
  return (levels - 1) * (255.0 - std::clamp(resolution, 0.0, 255.0)) / 255.0;
}

Tensor<float> foveate_frame(const Tensor<float>& frame, const FixationMap& resolution, int levels) {
  if (levels < 2) throw std::invalid_argument("foveate_frame: need at least 2 pyramid levels");
  if (frame.frames() != 1 || frame.height() != resolution.height() ||
      frame.width() != resolution.width()) {
    throw std::invalid_argument("foveate_frame: resolution map must match the frame");
  }
  const auto pyr = build_pyramid(frame, levels);
  std::vector<Tensor<float>> up;
  for (const auto& l : pyr) up.push_back(upsample_level(l, frame.height(), frame.width()));
  Tensor<float> out(frame.shape());
  for (int y = 0; y < frame.height(); ++y)
    for (int x = 0; x < frame.width(); ++x) {
      const double l = blend_level(resolution.at(y, x), levels);
      const int lo = static_cast<int>(std::floor(l));
      const int hi = std::min(lo + 1, levels - 1);
      const double w = l - lo;
      for (int c = 0; c < frame.channels(); ++c) {
        if (w == 0.0) {
          out(0, y, x, c) = up[lo](0, y, x, c);
        } else {
          out(0, y, x, c) =
              static_cast<float>((1 - w) * up[lo](0, y, x, c) + w * up[hi](0, y, x, c));
        }
      }
    }
  return out;
}

AverageResolution average_resolution(const std::vector<FixationMap>& maps) {
  if (maps.empty()) throw std::invalid_argument("average_resolution: no frames");
  AverageResolution r;
  double pixels = 0.0;
  for (const auto& m : maps) {
    r.frame_sum_mean += m.sum();
    pixels += static_cast<double>(m.size());
  }
  r.frame_sum_mean /= static_cast<double>(maps.size());
  r.pixel_mean = r.frame_sum_mean * static_cast<double>(maps.size()) / pixels;
  return r;
}

}  // namespace foa
