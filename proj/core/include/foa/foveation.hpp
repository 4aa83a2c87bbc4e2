#pragma once

#include <vector>

#include "foa/fixation_map.hpp"
#include "foa/tensor.hpp"

namespace foa {

struct PixelPoint {
  int x = 0;
  int y = 0;
  bool operator==(const PixelPoint&) const = default;
};

/// The n highest pixels, ties resolved in row-major order. n is clipped to
/// the map size.
std::vector<PixelPoint> extract_fixation_points(const FixationMap& map, int n = 25);

inline constexpr double kHalfResolutionDeg = 2.3;

/// 255 * 2^(-d / half_deg), d = distance in degrees to the nearest point.
/// Throws std::invalid_argument without points or with px_per_degree <= 0.
FixationMap build_resolution_map(const std::vector<PixelPoint>& points, double px_per_degree,
                                 int height, int width,
                                 double half_deg = kHalfResolutionDeg);

/// Level k has ceil(H/2^k) x ceil(W/2^k) pixels; level 0 is the input frame.
/// Each step blurs with the separable (1,4,6,4,1)/16 kernel (edges
/// replicated) and keeps every second sample.
std::vector<Tensor<float>> build_pyramid(const Tensor<float>& frame, int levels);

/// Level resampled to (height, width) by bilinear interpolation on pixel
/// centres with edge clamping.
Tensor<float> upsample_level(const Tensor<float>& level, int height, int width);

/// Blend position for resolution r: (levels - 1) * (255 - r) / 255.
double blend_level(double resolution, int levels);

/// Per pixel, linear blend between the two pyramid levels around
/// blend_level(r). Pixels at r = 255 keep the input value exactly.
/// Throws std::invalid_argument for levels < 2 or a shape mismatch.
Tensor<float> foveate_frame(const Tensor<float>& frame, const FixationMap& resolution,
                            int levels = 5);

struct AverageResolution {
  double frame_sum_mean = 0.0;  // (1/N) sum_f sum_i R(i, f)
  double pixel_mean = 0.0;      // the same divided by the pixel count
};

AverageResolution average_resolution(const std::vector<FixationMap>& maps);

}  // namespace foa
