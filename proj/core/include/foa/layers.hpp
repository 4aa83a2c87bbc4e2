#pragma once

// Forward and backward passes for the layer set used by the attention model:
// 3-D convolution, 3-D max pooling, bilinear upsampling, (leaky) ReLU and
// channel concatenation. Every function is pure; backward passes take the
// forward inputs plus the upstream gradient and return fresh arrays.
//
// Explicitly instantiated for float and double.

#include <array>
#include <cstddef>
#include <utility>
#include <vector>

#include "foa/tensor.hpp"

namespace foa {

enum class Padding {
  Same,   ///< zero padding so T, H and W are preserved
  Valid,  ///< no padding; output shrinks by kernel extent - 1
};

/// 3-D convolution kernel bank.
///
/// `weights` is laid out as [out][in][p][q][r] where p runs over kernel
/// height, q over kernel width and r over kernel depth (time).
template <typename Scalar>
struct Conv3dKernel {
  int out_channels = 0;
  int in_channels = 0;
  int height = 1;  // P
  int width = 1;   // Q
  int depth = 1;   // R
  Padding padding = Padding::Same;
  std::vector<Scalar> weights;
  std::vector<Scalar> bias;

  static Conv3dKernel zeros(int out_ch, int in_ch, int p, int q, int r,
                            Padding pad = Padding::Same);

  std::size_t weight_index(int j, int m, int p, int q, int r) const {
    return ((((static_cast<std::size_t>(j) * in_channels + m) * height + p) *
                 width +
             q) *
                depth +
            r);
  }
  Scalar& w(int j, int m, int p, int q, int r) {
    return weights[weight_index(j, m, p, q, r)];
  }
  Scalar w(int j, int m, int p, int q, int r) const {
    return weights[weight_index(j, m, p, q, r)];
  }
  std::size_t parameter_count() const { return weights.size() + bias.size(); }

  /// Throws std::invalid_argument when sizes are inconsistent or non-finite.
  void validate() const;

  template <typename Other>
  Conv3dKernel<Other> cast() const {
    Conv3dKernel<Other> k;
    k.out_channels = out_channels;
    k.in_channels = in_channels;
    k.height = height;
    k.width = width;
    k.depth = depth;
    k.padding = padding;
    k.weights.assign(weights.begin(), weights.end());
    k.bias.assign(bias.begin(), bias.end());
    return k;
  }
};

/// Parameter gradients, congruent with a Conv3dKernel.
template <typename Scalar>
struct Conv3dGradients {
  std::vector<Scalar> weights;
  std::vector<Scalar> bias;

  void resize_like(const Conv3dKernel<Scalar>& k) {
    weights.assign(k.weights.size(), Scalar(0));
    bias.assign(k.bias.size(), Scalar(0));
  }
  void accumulate(const Conv3dGradients& o);
};

/// Output shape of conv3d_forward for a given input shape.
template <typename Scalar>
Shape4 conv3d_output_shape(const Shape4& input, const Conv3dKernel<Scalar>& k);

template <typename Scalar>
Tensor<Scalar> conv3d_forward(const Tensor<Scalar>& input,
                              const Conv3dKernel<Scalar>& kernel);

template <typename Scalar>
struct Conv3dBackward {
  Conv3dGradients<Scalar> params;
  Tensor<Scalar> input_grad;
};

/// Gradients of the scalar <upstream, conv3d_forward(input, kernel)>.
template <typename Scalar>
Conv3dBackward<Scalar> conv3d_backward(const Tensor<Scalar>& input,
                                       const Conv3dKernel<Scalar>& kernel,
                                       const Tensor<Scalar>& upstream);

/// Pool window, equal to its stride: (time, height, width).
struct PoolWindow {
  int t = 1;
  int h = 1;
  int w = 1;
};

template <typename Scalar>
struct PoolResult {
  Tensor<Scalar> output;
  /// Flat input index of the winning element for every output element.
  std::vector<std::size_t> argmax;
};

/// Non-overlapping max pooling. Dimensions must be divisible by the window.
/// Ties go to the first element in (t, h, w) scan order.
template <typename Scalar>
PoolResult<Scalar> maxpool3d(const Tensor<Scalar>& input, PoolWindow window);

template <typename Scalar>
Tensor<Scalar> maxpool3d_backward(const Shape4& input_shape,
                                  const std::vector<std::size_t>& argmax,
                                  const Tensor<Scalar>& upstream);

/// Bilinear interpolation of a single-frame tensor to (height, width) with
/// corner alignment: source index = target index * (H-1)/(H'-1).
/// Downscaling is rejected.
template <typename Scalar>
Tensor<Scalar> bilinear_upsample(const Tensor<Scalar>& input, int height,
                                 int width);

template <typename Scalar>
Tensor<Scalar> bilinear_upsample_backward(const Shape4& input_shape,
                                          const Tensor<Scalar>& upstream);

template <typename Scalar>
Tensor<Scalar> relu(const Tensor<Scalar>& x);

/// `output` is the forward result; its sign selects the active units.
template <typename Scalar>
Tensor<Scalar> relu_backward(const Tensor<Scalar>& output,
                             const Tensor<Scalar>& upstream);

template <typename Scalar>
Tensor<Scalar> leaky_relu(const Tensor<Scalar>& x, Scalar slope);

template <typename Scalar>
Tensor<Scalar> leaky_relu_backward(const Tensor<Scalar>& output,
                                   const Tensor<Scalar>& upstream,
                                   Scalar slope);

/// Stacks b's channels after a's. T, H and W must agree.
template <typename Scalar>
Tensor<Scalar> concat_channels(const Tensor<Scalar>& a,
                               const Tensor<Scalar>& b);

/// Inverse of concat_channels for gradients: splits after `first_channels`.
template <typename Scalar>
std::pair<Tensor<Scalar>, Tensor<Scalar>> split_channels(
    const Tensor<Scalar>& x, int first_channels);

/// Copies frame `t` as a single-frame tensor.
template <typename Scalar>
Tensor<Scalar> take_frame(const Tensor<Scalar>& x, int t);

}  // namespace foa
