#include "foa/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

namespace foa {

namespace {

void check_image(const Image8& img) {
  if (img.height < 1 || img.width < 1 || (img.channels != 1 && img.channels != 3) ||
      img.pixels.size() != static_cast<std::size_t>(img.height) * img.width * img.channels) {
    throw std::invalid_argument("Image8: inconsistent dimensions");
  }
}

}  // namespace

void write_png(const std::filesystem::path& path, const Image8& img) {
  check_image(img);
  png_image im;
  std::memset(&im, 0, sizeof(im));
  im.version = PNG_IMAGE_VERSION;
  im.width = static_cast<png_uint_32>(img.width);
  im.height = static_cast<png_uint_32>(img.height);
  im.format = img.channels == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&im, path.string().c_str(), 0, img.pixels.data(), 0,
                               nullptr)) {
    throw std::runtime_error("write_png " + path.string() + ": " + im.message);
  }
}

Image8 read_png(const std::filesystem::path& path, bool force_rgb) {
  png_image im;
  std::memset(&im, 0, sizeof(im));
  im.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&im, path.string().c_str())) {
    throw std::runtime_error("read_png " + path.string() + ": " + im.message);
  }
  const bool gray = (im.format & PNG_FORMAT_FLAG_COLOR) == 0 && !force_rgb;
  im.format = gray ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  Image8 img;
  img.height = static_cast<int>(im.height);
  img.width = static_cast<int>(im.width);
  img.channels = gray ? 1 : 3;
  img.pixels.resize(PNG_IMAGE_SIZE(im));
  if (!png_image_finish_read(&im, nullptr, img.pixels.data(), 0, nullptr)) {
    throw std::runtime_error("read_png " + path.string() + ": " + im.message);
  }
  return img;
}

Image8 to_image(const Tensor<float>& frame) {
  const Shape4& s = frame.shape();
  if (s.t != 1 || (s.c != 1 && s.c != 3)) {
    throw std::invalid_argument("to_image: expected one frame with 1 or 3 channels");
  }
  Image8 img{s.h, s.w, s.c, std::vector<std::uint8_t>(frame.size())};
  for (std::size_t i = 0; i < frame.size(); ++i) {
    const float v = std::clamp(frame.data()[i], 0.0f, 1.0f);
    img.pixels[i] = static_cast<std::uint8_t>(std::lround(v * 255.0f));
  }
  return img;
}

Tensor<float> from_image(const Image8& img) {
  check_image(img);
  Tensor<float> t({1, img.height, img.width, img.channels});
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    t.data()[i] = static_cast<float>(img.pixels[i]) / 255.0f;
  }
  return t;
}

void write_map_png16(const std::filesystem::path& path, const FixationMap& map) {
  const double mx = map.max();
  std::vector<png_uint_16> buf(map.size());
  for (std::size_t i = 0; i < map.size(); ++i) {
    const double v = mx > 0 ? map[i] / mx : 0.0;
    buf[i] = static_cast<png_uint_16>(std::lround(std::clamp(v, 0.0, 1.0) * 65535.0));
  }
  png_image im;
  std::memset(&im, 0, sizeof(im));
  im.version = PNG_IMAGE_VERSION;
  im.width = static_cast<png_uint_32>(map.width());
  im.height = static_cast<png_uint_32>(map.height());
  im.format = PNG_FORMAT_LINEAR_Y;
  if (!png_image_write_to_file(&im, path.string().c_str(), 0, buf.data(), 0, nullptr)) {
    throw std::runtime_error("write_map_png16 " + path.string() + ": " + im.message);
  }
}

FixationMap read_map_png16(const std::filesystem::path& path) {
  png_image im;
  std::memset(&im, 0, sizeof(im));
  im.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&im, path.string().c_str())) {
    throw std::runtime_error("read_map_png16 " + path.string() + ": " + im.message);
  }
  im.format = PNG_FORMAT_LINEAR_Y;
  std::vector<png_uint_16> buf(PNG_IMAGE_SIZE(im) / sizeof(png_uint_16));
  if (!png_image_finish_read(&im, nullptr, buf.data(), 0, nullptr)) {
    throw std::runtime_error("read_map_png16 " + path.string() + ": " + im.message);
  }
  FixationMap m(static_cast<int>(im.height), static_cast<int>(im.width));
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = buf[i] / 65535.0;
  return m;
}

Image8 heatmap_image(const FixationMap& map) {
  const double mx = map.max();
  Image8 img{map.height(), map.width(), 3,
             std::vector<std::uint8_t>(map.size() * 3)};
  for (std::size_t i = 0; i < map.size(); ++i) {
    const double v = mx > 0 ? std::clamp(map[i] / mx, 0.0, 1.0) : 0.0;
    const double r = std::clamp(1.5 - std::abs(4.0 * v - 3.0), 0.0, 1.0);
    const double g = std::clamp(1.5 - std::abs(4.0 * v - 2.0), 0.0, 1.0);
    const double b = std::clamp(1.5 - std::abs(4.0 * v - 1.0), 0.0, 1.0);
    img.pixels[3 * i] = static_cast<std::uint8_t>(std::lround(r * 255));
    img.pixels[3 * i + 1] = static_cast<std::uint8_t>(std::lround(g * 255));
    img.pixels[3 * i + 2] = static_cast<std::uint8_t>(std::lround(b * 255));
  }
  return img;
}

}  // namespace foa
