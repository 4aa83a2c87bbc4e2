#include "foa/flow_encoding.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace foa {

std::array<float, 3> encode_flow_pixel(double dx, double dy, double max_magnitude) {
  if (!(max_magnitude > 0)) throw std::invalid_argument("encode_flow: max_magnitude must be > 0");
  const double mag = std::hypot(dx, dy);
  const double s = std::min(mag / max_magnitude, 1.0);
  double hue = std::atan2(dy, dx) * 180.0 / std::numbers::pi;
  if (hue < 0) hue += 360.0;
  const double h6 = hue / 60.0;
  const int sector = static_cast<int>(std::floor(h6)) % 6;
  const double f = h6 - std::floor(h6);
  const double p = 1.0 - s, q = 1.0 - s * f, t = 1.0 - s * (1.0 - f);
  double r = 1, g = 1, b = 1;
  switch (sector) {
    case 0: r = 1; g = t; b = p; break;
    case 1: r = q; g = 1; b = p; break;
    case 2: r = p; g = 1; b = t; break;
    case 3: r = p; g = q; b = 1; break;
    case 4: r = t; g = p; b = 1; break;
    default: r = 1; g = p; b = q; break;
  }
  return {static_cast<float>(r), static_cast<float>(g), static_cast<float>(b)};
}

std::array<double, 2> decode_flow_pixel(const std::array<float, 3>& rgb,
                                        double max_magnitude) {
  const double r = rgb[0], g = rgb[1], b = rgb[2];
  const double mx = std::max({r, g, b}), mn = std::min({r, g, b});
  const double s = mx > 0 ? (mx - mn) / mx : 0.0;
  if (s == 0.0) return {0.0, 0.0};
  const double d = mx - mn;
  double h;
  if (mx == r) {
    h = std::fmod((g - b) / d, 6.0);
  } else if (mx == g) {
    h = (b - r) / d + 2.0;
  } else {
    h = (r - g) / d + 4.0;
  }
  const double ang = h * std::numbers::pi / 3.0;
  const double mag = s * max_magnitude;
  return {mag * std::cos(ang), mag * std::sin(ang)};
}

Tensor<float> encode_flow(const Tensor<float>& flow, double max_magnitude) {
  const Shape4& s = flow.shape();
  if (s.c != 2) throw std::invalid_argument("encode_flow: expected 2 channels, got " + s.str());
  Tensor<float> out({s.t, s.h, s.w, 3});
  for (int t = 0; t < s.t; ++t)
    for (int y = 0; y < s.h; ++y)
      for (int x = 0; x < s.w; ++x) {
        const auto rgb = encode_flow_pixel(flow(t, y, x, 0), flow(t, y, x, 1), max_magnitude);
        for (int c = 0; c < 3; ++c) out(t, y, x, c) = rgb[c];
      }
  return out;
}

}  // namespace foa
