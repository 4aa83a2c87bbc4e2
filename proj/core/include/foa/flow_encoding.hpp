#pragma once

#include <array>

#include "foa/tensor.hpp"

namespace foa {

/// Colour-wheel flow encoding: hue = direction atan2(dy, dx) mapped to
/// [0, 360), saturation = min(|d| / max_magnitude, 1), value = 1, converted
/// to RGB in [0, 1]. Injective for |d| < max_magnitude away from zero flow
/// (all zero-flow pixels encode to white).
std::array<float, 3> encode_flow_pixel(double dx, double dy, double max_magnitude);

/// Inverse of encode_flow_pixel below saturation.
std::array<double, 2> decode_flow_pixel(const std::array<float, 3>& rgb,
                                        double max_magnitude);

/// (T,H,W,2) displacement field -> (T,H,W,3) encoded clip.
Tensor<float> encode_flow(const Tensor<float>& flow, double max_magnitude);

}  // namespace foa
