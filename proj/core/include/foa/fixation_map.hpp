#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "foa/tensor.hpp"

namespace foa {

/// Non-negative H x W map, row-major, double precision. Used for ground
/// truth fixation maps, predictions, baselines and resolution maps alike.
class FixationMap {
 public:
  FixationMap() = default;
  FixationMap(int height, int width, double fill = 0.0)
      : height_(height), width_(width) {
    if (height < 1 || width < 1) {
      throw std::invalid_argument("FixationMap: dimensions must be >= 1");
    }
    data_.assign(static_cast<std::size_t>(height) * width, fill);
  }
  FixationMap(int height, int width, std::vector<double> data)
      : height_(height), width_(width), data_(std::move(data)) {
    if (height < 1 || width < 1 ||
        data_.size() != static_cast<std::size_t>(height) * width) {
      throw std::invalid_argument("FixationMap: data does not match " +
                                  std::to_string(height) + "x" +
                                  std::to_string(width));
    }
  }

  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& at(int y, int x) {
    return data_[static_cast<std::size_t>(y) * width_ + x];
  }
  double at(int y, int x) const {
    return data_[static_cast<std::size_t>(y) * width_ + x];
  }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  double sum() const;
  double max() const;
  bool same_shape(const FixationMap& o) const {
    return height_ == o.height_ && width_ == o.width_;
  }

  /// True when values are non-negative and sum to 1 within `tol`.
  bool is_normalized(double tol = 1e-9) const;

  /// Single-channel, single-frame tensor view of the map.
  template <typename Scalar>
  Tensor<Scalar> to_tensor() const {
    Tensor<Scalar> t({1, height_, width_, 1});
    for (std::size_t i = 0; i < data_.size(); ++i) {
      t.data()[i] = static_cast<Scalar>(data_[i]);
    }
    return t;
  }

  /// Reads channel `c` of frame `t`.
  template <typename Scalar>
  static FixationMap from_tensor(const Tensor<Scalar>& tensor, int t = 0,
                                 int c = 0) {
    FixationMap m(tensor.height(), tensor.width());
    for (int y = 0; y < tensor.height(); ++y) {
      for (int x = 0; x < tensor.width(); ++x) {
        m.at(y, x) = static_cast<double>(tensor(t, y, x, c));
      }
    }
    return m;
  }

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<double> data_;
};

/// Divides by the total mass. Throws std::domain_error on an all-zero map
/// and std::invalid_argument on negative or non-finite values.
FixationMap normalize_map(const FixationMap& map);

/// Uniform distribution over an H x W grid.
FixationMap uniform_map(int height, int width);

}  // namespace foa
