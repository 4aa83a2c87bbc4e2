#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "foa/fixation_map.hpp"
#include "foa/tensor.hpp"

namespace foa {

/// 8-bit image, row-major, interleaved channels (1 or 3).
struct Image8 {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<std::uint8_t> pixels;

  std::uint8_t& at(int y, int x, int c) {
    return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  std::uint8_t at(int y, int x, int c) const {
    return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
};

void write_png(const std::filesystem::path& path, const Image8& img);
/// Reads gray or RGB(A); alpha is dropped, gray stays single-channel unless
/// `force_rgb`.
Image8 read_png(const std::filesystem::path& path, bool force_rgb = false);

/// Single frame (1,H,W,C) in [0,1] <-> Image8.
Image8 to_image(const Tensor<float>& frame);
Tensor<float> from_image(const Image8& img);

/// 16-bit grayscale, scaled so the maximum maps to 65535.
void write_map_png16(const std::filesystem::path& path, const FixationMap& map);
/// Returns the stored 16-bit levels divided by 65535.
FixationMap read_map_png16(const std::filesystem::path& path);

/// Max-scaled map rendered through a blue-to-red colour ramp.
Image8 heatmap_image(const FixationMap& map);

}  // namespace foa
