#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace foa {

/// Dimensions of a clip tensor: frames x height x width x channels.
struct Shape4 {
  int t = 0;
  int h = 0;
  int w = 0;
  int c = 0;

  std::size_t size() const {
    return static_cast<std::size_t>(t) * h * w * c;
  }
  bool valid() const { return t >= 1 && h >= 1 && w >= 1 && c >= 1; }
  bool operator==(const Shape4&) const = default;

  std::string str() const {
    return "(" + std::to_string(t) + "," + std::to_string(h) + "," +
           std::to_string(w) + "," + std::to_string(c) + ")";
  }
};

/// Dense 4-D array stored row-major by (t, h, w, c).
///
/// A default-constructed tensor is empty and only useful as a placeholder;
/// every constructed tensor has all dimensions >= 1.
template <typename Scalar>
class Tensor {
 public:
  using value_type = Scalar;

  Tensor() = default;

  explicit Tensor(Shape4 shape, Scalar fill = Scalar(0)) : shape_(shape) {
    if (!shape.valid()) {
      throw std::invalid_argument("Tensor: all dimensions must be >= 1, got " +
                                  shape.str());
    }
    data_.assign(shape.size(), fill);
  }

  Tensor(Shape4 shape, std::vector<Scalar> data)
      : shape_(shape), data_(std::move(data)) {
    if (!shape.valid()) {
      throw std::invalid_argument("Tensor: all dimensions must be >= 1, got " +
                                  shape.str());
    }
    if (data_.size() != shape.size()) {
      throw std::invalid_argument("Tensor: data length " +
                                  std::to_string(data_.size()) +
                                  " does not match shape " + shape.str());
    }
  }

  const Shape4& shape() const { return shape_; }
  int frames() const { return shape_.t; }
  int height() const { return shape_.h; }
  int width() const { return shape_.w; }
  int channels() const { return shape_.c; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::size_t index(int t, int y, int x, int c) const {
    return ((static_cast<std::size_t>(t) * shape_.h + y) * shape_.w + x) *
               shape_.c +
           c;
  }

  Scalar& operator()(int t, int y, int x, int c) {
    return data_[index(t, y, x, c)];
  }
  Scalar operator()(int t, int y, int x, int c) const {
    return data_[index(t, y, x, c)];
  }

  std::span<Scalar> data() { return data_; }
  std::span<const Scalar> data() const { return data_; }
  std::vector<Scalar>& storage() { return data_; }
  const std::vector<Scalar>& storage() const { return data_; }

  Scalar* frame_ptr(int t) { return data_.data() + index(t, 0, 0, 0); }
  const Scalar* frame_ptr(int t) const {
    return data_.data() + index(t, 0, 0, 0);
  }

  bool all_finite() const {
    for (Scalar v : data_) {
      if (!std::isfinite(static_cast<double>(v))) return false;
    }
    return true;
  }

  template <typename Other>
  Tensor<Other> cast() const {
    std::vector<Other> out(data_.size());
    for (std::size_t i = 0; i < data_.size(); ++i) {
      out[i] = static_cast<Other>(data_[i]);
    }
    return Tensor<Other>(shape_, std::move(out));
  }

 private:
  Shape4 shape_{};
  std::vector<Scalar> data_;
};

using ClipTensor = Tensor<float>;
using ClipTensorD = Tensor<double>;

/// Branch input domains of the multi-branch model.
enum class Domain { Rgb = 0, Flow = 1, Seg = 2 };
inline constexpr int kNumDomains = 3;

inline const char* domain_name(Domain d) {
  switch (d) {
    case Domain::Rgb: return "rgb";
    case Domain::Flow: return "flow";
    case Domain::Seg: return "seg";
  }
  return "?";
}

Domain parse_domain(const std::string& name);

}  // namespace foa
