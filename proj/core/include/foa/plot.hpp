#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "foa/image_io.hpp"

namespace foa {

struct PlotSeries {
  std::vector<double> x;
  std::vector<double> y;
  std::array<std::uint8_t, 3> color{31, 119, 180};
  /// Optional +/- band drawn as thin vertical bars.
  std::vector<double> spread;
};

/// Line chart raster on a white canvas with a frame and zero gridlines.
/// Axis ranges cover all series. No text is rendered.
Image8 line_plot(const std::vector<PlotSeries>& series, int width = 640,
                 int height = 400);

void write_line_plot(const std::filesystem::path& path,
                     const std::vector<PlotSeries>& series, int width = 640,
                     int height = 400);

}  // namespace foa
