#include "foa/plot.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace foa {

namespace {

void put(Image8& img, int x, int y, const std::array<std::uint8_t, 3>& c) {
  if (x < 0 || y < 0 || x >= img.width || y >= img.height) return;
  for (int k = 0; k < 3; ++k) img.at(y, x, k) = c[k];
}

void line(Image8& img, int x0, int y0, int x1, int y1,
          const std::array<std::uint8_t, 3>& c) {
  const int dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
  const int dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
  int err = dx + dy;
  while (true) {
    put(img, x0, y0, c);
    put(img, x0, y0 + 1, c);
    if (x0 == x1 && y0 == y1) break;
    const int e2 = 2 * err;
    if (e2 >= dy) { err += dy; x0 += sx; }
    if (e2 <= dx) { err += dx; y0 += sy; }
  }
}

}  // namespace

Image8 line_plot(const std::vector<PlotSeries>& series, int width, int height) {
  if (width < 32 || height < 32) throw std::invalid_argument("line_plot: canvas too small");
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const auto& s : series) {
    if (s.x.size() != s.y.size()) throw std::invalid_argument("line_plot: x/y length mismatch");
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      const double sp = i < s.spread.size() ? s.spread[i] : 0.0;
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      ymin = std::min(ymin, s.y[i] - sp);
      ymax = std::max(ymax, s.y[i] + sp);
    }
  }
  if (!std::isfinite(xmin)) { xmin = 0; xmax = 1; ymin = 0; ymax = 1; }
  if (xmax == xmin) { xmin -= 1; xmax += 1; }
  if (ymax == ymin) { ymin -= 1; ymax += 1; }

  Image8 img{height, width, 3,
             std::vector<std::uint8_t>(static_cast<std::size_t>(width) * height * 3, 255)};
  const int m = 24;
  auto px = [&](double x) {
    return m + static_cast<int>(std::lround((x - xmin) / (xmax - xmin) * (width - 2 * m)));
  };
  auto py = [&](double y) {
    return height - m -
           static_cast<int>(std::lround((y - ymin) / (ymax - ymin) * (height - 2 * m)));
  };
  const std::array<std::uint8_t, 3> black{0, 0, 0}, grey{200, 200, 200};
  if (xmin < 0 && xmax > 0) line(img, px(0), m, px(0), height - m, grey);
  if (ymin < 0 && ymax > 0) line(img, m, py(0), width - m, py(0), grey);
  line(img, m, m, width - m, m, black);
  line(img, m, height - m, width - m, height - m, black);
  line(img, m, m, m, height - m, black);
  line(img, width - m, m, width - m, height - m, black);

  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (i < s.spread.size() && s.spread[i] > 0) {
        line(img, px(s.x[i]), py(s.y[i] - s.spread[i]), px(s.x[i]),
             py(s.y[i] + s.spread[i]), s.color);
      }
      if (i + 1 < s.x.size()) {
        line(img, px(s.x[i]), py(s.y[i]), px(s.x[i + 1]), py(s.y[i + 1]), s.color);
      }
    }
  }
  return img;
}

void write_line_plot(const std::filesystem::path& path,
                     const std::vector<PlotSeries>& series, int width, int height) {
  write_png(path, line_plot(series, width, height));
}

}  // namespace foa
