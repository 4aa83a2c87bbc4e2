#include "foa/layers.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace foa {

namespace {

template <typename Scalar>
using RowMat =
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct ConvGeometry {
  int pad_t = 0, pad_h = 0, pad_w = 0;
  Shape4 in{}, out{};
  int k_cols = 0;  // R * P * Q * Cin
};

template <typename Scalar>
ConvGeometry conv_geometry(const Shape4& in, const Conv3dKernel<Scalar>& k) {
  if (!in.valid()) {
    throw std::invalid_argument("conv3d: empty input tensor");
  }
  if (in.c != k.in_channels) {
    throw std::invalid_argument("conv3d: input has " + std::to_string(in.c) +
                                " channels but kernel expects " +
                                std::to_string(k.in_channels));
  }
  ConvGeometry g;
  g.in = in;
  if (k.padding == Padding::Same) {
    g.pad_t = (k.depth - 1) / 2;
    g.pad_h = (k.height - 1) / 2;
    g.pad_w = (k.width - 1) / 2;
    g.out = {in.t, in.h, in.w, k.out_channels};
  } else {
    g.out = {in.t - k.depth + 1, in.h - k.height + 1, in.w - k.width + 1,
             k.out_channels};
    if (!g.out.valid()) {
      throw std::invalid_argument("conv3d: kernel (" + std::to_string(k.depth) +
                                  "," + std::to_string(k.height) + "," +
                                  std::to_string(k.width) +
                                  ") larger than unpadded input " + in.str());
    }
  }
  g.k_cols = k.depth * k.height * k.width * k.in_channels;
  return g;
}

// Kernel bank as a (R*P*Q*Cin) x Cout matrix, rows ordered (r, p, q, m).
template <typename Scalar>
RowMat<Scalar> kernel_matrix(const Conv3dKernel<Scalar>& k) {
  RowMat<Scalar> m(k.depth * k.height * k.width * k.in_channels,
                   k.out_channels);
  for (int r = 0; r < k.depth; ++r)
    for (int p = 0; p < k.height; ++p)
      for (int q = 0; q < k.width; ++q)
        for (int c = 0; c < k.in_channels; ++c) {
          const int row = ((r * k.height + p) * k.width + q) * k.in_channels + c;
          for (int j = 0; j < k.out_channels; ++j) {
            m(row, j) = k.w(j, c, p, q, r);
          }
        }
  return m;
}

// Gathers the receptive fields of every output voxel of frame `to`.
template <typename Scalar>
void im2col_frame(const Tensor<Scalar>& input, const Conv3dKernel<Scalar>& k,
                  const ConvGeometry& g, int to, RowMat<Scalar>& col) {
  const int cin = g.in.c;
  col.resize(static_cast<Eigen::Index>(g.out.h) * g.out.w, g.k_cols);
  for (int yo = 0; yo < g.out.h; ++yo) {
    for (int xo = 0; xo < g.out.w; ++xo) {
      Scalar* row = col.data() + (static_cast<std::size_t>(yo) * g.out.w + xo) *
                                     g.k_cols;
      int offset = 0;
      for (int r = 0; r < k.depth; ++r) {
        const int ti = to + r - g.pad_t;
        for (int p = 0; p < k.height; ++p) {
          const int yi = yo + p - g.pad_h;
          for (int q = 0; q < k.width; ++q, offset += cin) {
            const int xi = xo + q - g.pad_w;
            if (ti < 0 || ti >= g.in.t || yi < 0 || yi >= g.in.h || xi < 0 ||
                xi >= g.in.w) {
              std::fill(row + offset, row + offset + cin, Scalar(0));
            } else {
              const Scalar* src = input.data().data() + input.index(ti, yi, xi, 0);
              std::copy(src, src + cin, row + offset);
            }
          }
        }
      }
    }
  }
}

template <typename Scalar>
void col2im_frame_add(const RowMat<Scalar>& gcol, const Conv3dKernel<Scalar>& k,
                      const ConvGeometry& g, int to, Tensor<Scalar>& grad) {
  const int cin = g.in.c;
  for (int yo = 0; yo < g.out.h; ++yo) {
    for (int xo = 0; xo < g.out.w; ++xo) {
      const Scalar* row =
          gcol.data() + (static_cast<std::size_t>(yo) * g.out.w + xo) * g.k_cols;
      int offset = 0;
      for (int r = 0; r < k.depth; ++r) {
        const int ti = to + r - g.pad_t;
        for (int p = 0; p < k.height; ++p) {
          const int yi = yo + p - g.pad_h;
          for (int q = 0; q < k.width; ++q, offset += cin) {
            const int xi = xo + q - g.pad_w;
            if (ti < 0 || ti >= g.in.t || yi < 0 || yi >= g.in.h || xi < 0 ||
                xi >= g.in.w) {
              continue;
            }
            Scalar* dst = grad.data().data() + grad.index(ti, yi, xi, 0);
            for (int c = 0; c < cin; ++c) dst[c] += row[offset + c];
          }
        }
      }
    }
  }
}

void require_same_shape(const Shape4& a, const Shape4& b, const char* what) {
  if (!(a == b)) {
    throw std::invalid_argument(std::string(what) + ": shape mismatch " +
                                a.str() + " vs " + b.str());
  }
}

}  // namespace

Domain parse_domain(const std::string& name) {
  if (name == "rgb") return Domain::Rgb;
  if (name == "flow") return Domain::Flow;
  if (name == "seg") return Domain::Seg;
  throw std::invalid_argument("unknown domain '" + name +
                              "' (expected rgb, flow or seg)");
}

template <typename Scalar>
Conv3dKernel<Scalar> Conv3dKernel<Scalar>::zeros(int out_ch, int in_ch, int p,
                                                 int q, int r, Padding pad) {
  if (out_ch < 1 || in_ch < 1 || p < 1 || q < 1 || r < 1) {
    throw std::invalid_argument("Conv3dKernel: all sizes must be >= 1");
  }
  Conv3dKernel k;
  k.out_channels = out_ch;
  k.in_channels = in_ch;
  k.height = p;
  k.width = q;
  k.depth = r;
  k.padding = pad;
  k.weights.assign(static_cast<std::size_t>(out_ch) * in_ch * p * q * r,
                   Scalar(0));
  k.bias.assign(out_ch, Scalar(0));
  return k;
}

template <typename Scalar>
void Conv3dKernel<Scalar>::validate() const {
  if (out_channels < 1 || in_channels < 1 || height < 1 || width < 1 ||
      depth < 1) {
    throw std::invalid_argument("Conv3dKernel: all sizes must be >= 1");
  }
  const std::size_t expected =
      static_cast<std::size_t>(out_channels) * in_channels * height * width *
      depth;
  if (weights.size() != expected ||
      bias.size() != static_cast<std::size_t>(out_channels)) {
    throw std::invalid_argument("Conv3dKernel: weight/bias length mismatch");
  }
  for (Scalar v : weights)
    if (!std::isfinite(static_cast<double>(v)))
      throw std::invalid_argument("Conv3dKernel: non-finite weight");
  for (Scalar v : bias)
    if (!std::isfinite(static_cast<double>(v)))
      throw std::invalid_argument("Conv3dKernel: non-finite bias");
}

template <typename Scalar>
void Conv3dGradients<Scalar>::accumulate(const Conv3dGradients& o) {
  if (weights.empty() && bias.empty()) {
    weights = o.weights;
    bias = o.bias;
    return;
  }
  if (o.weights.size() != weights.size() || o.bias.size() != bias.size()) {
    throw std::invalid_argument("Conv3dGradients: shape mismatch");
  }
  for (std::size_t i = 0; i < weights.size(); ++i) weights[i] += o.weights[i];
  for (std::size_t i = 0; i < bias.size(); ++i) bias[i] += o.bias[i];
}

template <typename Scalar>
Shape4 conv3d_output_shape(const Shape4& input, const Conv3dKernel<Scalar>& k) {
  return conv_geometry(input, k).out;
}

template <typename Scalar>
Tensor<Scalar> conv3d_forward(const Tensor<Scalar>& input,
                              const Conv3dKernel<Scalar>& kernel) {
  kernel.validate();
  const ConvGeometry g = conv_geometry(input.shape(), kernel);
  const RowMat<Scalar> wm = kernel_matrix(kernel);
  const Eigen::Map<const Eigen::Matrix<Scalar, 1, Eigen::Dynamic>> bias(
      kernel.bias.data(), kernel.out_channels);

  Tensor<Scalar> out(g.out);
  RowMat<Scalar> col;
  const Eigen::Index rows = static_cast<Eigen::Index>(g.out.h) * g.out.w;
  for (int to = 0; to < g.out.t; ++to) {
    im2col_frame(input, kernel, g, to, col);
    Eigen::Map<RowMat<Scalar>> dst(out.frame_ptr(to), rows, g.out.c);
    dst.noalias() = col * wm;
    dst.rowwise() += bias;
  }
  return out;
}

template <typename Scalar>
Conv3dBackward<Scalar> conv3d_backward(const Tensor<Scalar>& input,
                                       const Conv3dKernel<Scalar>& kernel,
                                       const Tensor<Scalar>& upstream) {
  kernel.validate();
  const ConvGeometry g = conv_geometry(input.shape(), kernel);
  require_same_shape(upstream.shape(), g.out, "conv3d_backward upstream");

  const RowMat<Scalar> wm = kernel_matrix(kernel);
  RowMat<Scalar> gw = RowMat<Scalar>::Zero(g.k_cols, g.out.c);
  Eigen::Matrix<Scalar, 1, Eigen::Dynamic> gb =
      Eigen::Matrix<Scalar, 1, Eigen::Dynamic>::Zero(g.out.c);

  Conv3dBackward<Scalar> result;
  result.input_grad = Tensor<Scalar>(input.shape());

  RowMat<Scalar> col;
  RowMat<Scalar> gcol;
  const Eigen::Index rows = static_cast<Eigen::Index>(g.out.h) * g.out.w;
  for (int to = 0; to < g.out.t; ++to) {
    Eigen::Map<const RowMat<Scalar>> gout(upstream.frame_ptr(to), rows,
                                          g.out.c);
    im2col_frame(input, kernel, g, to, col);
    gw.noalias() += col.transpose() * gout;
    gb += gout.colwise().sum();
    gcol.noalias() = gout * wm.transpose();
    col2im_frame_add(gcol, kernel, g, to, result.input_grad);
  }

  result.params.resize_like(kernel);
  for (int r = 0; r < kernel.depth; ++r)
    for (int p = 0; p < kernel.height; ++p)
      for (int q = 0; q < kernel.width; ++q)
        for (int c = 0; c < kernel.in_channels; ++c) {
          const int row =
              ((r * kernel.height + p) * kernel.width + q) * kernel.in_channels +
              c;
          for (int j = 0; j < kernel.out_channels; ++j) {
            result.params.weights[kernel.weight_index(j, c, p, q, r)] =
                gw(row, j);
          }
        }
  for (int j = 0; j < kernel.out_channels; ++j) result.params.bias[j] = gb(j);
  return result;
}

template <typename Scalar>
PoolResult<Scalar> maxpool3d(const Tensor<Scalar>& input, PoolWindow win) {
  if (win.t < 1 || win.h < 1 || win.w < 1) {
    throw std::invalid_argument("maxpool3d: window sizes must be >= 1");
  }
  const Shape4& s = input.shape();
  if (s.t % win.t != 0 || s.h % win.h != 0 || s.w % win.w != 0) {
    throw std::invalid_argument("maxpool3d: input " + s.str() +
                                " not divisible by window (" +
                                std::to_string(win.t) + "," +
                                std::to_string(win.h) + "," +
                                std::to_string(win.w) + ")");
  }
  const Shape4 os{s.t / win.t, s.h / win.h, s.w / win.w, s.c};
  PoolResult<Scalar> res;
  res.output = Tensor<Scalar>(os);
  res.argmax.assign(os.size(), 0);
  for (int t = 0; t < os.t; ++t)
    for (int y = 0; y < os.h; ++y)
      for (int x = 0; x < os.w; ++x)
        for (int c = 0; c < os.c; ++c) {
          std::size_t best = input.index(t * win.t, y * win.h, x * win.w, c);
          Scalar best_v = input.data()[best];
          for (int dt = 0; dt < win.t; ++dt)
            for (int dy = 0; dy < win.h; ++dy)
              for (int dx = 0; dx < win.w; ++dx) {
                const std::size_t i = input.index(t * win.t + dt, y * win.h + dy,
                                                  x * win.w + dx, c);
                if (input.data()[i] > best_v) {
                  best_v = input.data()[i];
                  best = i;
                }
              }
          const std::size_t o = res.output.index(t, y, x, c);
          res.output.data()[o] = best_v;
          res.argmax[o] = best;
        }
  return res;
}

template <typename Scalar>
Tensor<Scalar> maxpool3d_backward(const Shape4& input_shape,
                                  const std::vector<std::size_t>& argmax,
                                  const Tensor<Scalar>& upstream) {
  if (argmax.size() != upstream.size()) {
    throw std::invalid_argument("maxpool3d_backward: argmax/upstream mismatch");
  }
  Tensor<Scalar> grad(input_shape);
  for (std::size_t i = 0; i < argmax.size(); ++i) {
    grad.data()[argmax[i]] += upstream.data()[i];
  }
  return grad;
}

namespace {

struct Lerp {
  int i0 = 0, i1 = 0;
  double f = 0.0;
};

std::vector<Lerp> align_corner_taps(int src, int dst) {
  std::vector<Lerp> taps(dst);
  for (int i = 0; i < dst; ++i) {
    const double s =
        dst > 1 ? static_cast<double>(i) * (src - 1) / (dst - 1) : 0.0;
    Lerp l;
    l.i0 = std::min(static_cast<int>(std::floor(s)), src - 1);
    l.i1 = std::min(l.i0 + 1, src - 1);
    l.f = s - l.i0;
    taps[i] = l;
  }
  return taps;
}

void check_upsample(const Shape4& in, int height, int width) {
  if (in.t != 1) {
    throw std::invalid_argument("bilinear_upsample: expected a single frame, got " +
                                in.str());
  }
  if (height < in.h || width < in.w) {
    throw std::invalid_argument("bilinear_upsample: downscaling " + in.str() +
                                " to " + std::to_string(height) + "x" +
                                std::to_string(width) + " is not supported");
  }
}

}  // namespace

template <typename Scalar>
Tensor<Scalar> bilinear_upsample(const Tensor<Scalar>& input, int height,
                                 int width) {
  const Shape4& s = input.shape();
  check_upsample(s, height, width);
  const auto ty = align_corner_taps(s.h, height);
  const auto tx = align_corner_taps(s.w, width);
  Tensor<Scalar> out({1, height, width, s.c});
  for (int y = 0; y < height; ++y) {
    const Scalar fy = static_cast<Scalar>(ty[y].f);
    for (int x = 0; x < width; ++x) {
      const Scalar fx = static_cast<Scalar>(tx[x].f);
      const Scalar w00 = (1 - fy) * (1 - fx), w01 = (1 - fy) * fx,
                   w10 = fy * (1 - fx), w11 = fy * fx;
      for (int c = 0; c < s.c; ++c) {
        out(0, y, x, c) = w00 * input(0, ty[y].i0, tx[x].i0, c) +
                          w01 * input(0, ty[y].i0, tx[x].i1, c) +
                          w10 * input(0, ty[y].i1, tx[x].i0, c) +
                          w11 * input(0, ty[y].i1, tx[x].i1, c);
      }
    }
  }
  return out;
}

template <typename Scalar>
Tensor<Scalar> bilinear_upsample_backward(const Shape4& input_shape,
                                          const Tensor<Scalar>& upstream) {
  const Shape4& us = upstream.shape();
  check_upsample(input_shape, us.h, us.w);
  if (us.t != 1 || us.c != input_shape.c) {
    throw std::invalid_argument("bilinear_upsample_backward: upstream " +
                                us.str() + " incompatible with input " +
                                input_shape.str());
  }
  const auto ty = align_corner_taps(input_shape.h, us.h);
  const auto tx = align_corner_taps(input_shape.w, us.w);
  Tensor<Scalar> grad(input_shape);
  for (int y = 0; y < us.h; ++y) {
    const Scalar fy = static_cast<Scalar>(ty[y].f);
    for (int x = 0; x < us.w; ++x) {
      const Scalar fx = static_cast<Scalar>(tx[x].f);
      const Scalar w00 = (1 - fy) * (1 - fx), w01 = (1 - fy) * fx,
                   w10 = fy * (1 - fx), w11 = fy * fx;
      for (int c = 0; c < us.c; ++c) {
        const Scalar g = upstream(0, y, x, c);
        grad(0, ty[y].i0, tx[x].i0, c) += w00 * g;
        grad(0, ty[y].i0, tx[x].i1, c) += w01 * g;
        grad(0, ty[y].i1, tx[x].i0, c) += w10 * g;
        grad(0, ty[y].i1, tx[x].i1, c) += w11 * g;
      }
    }
  }
  return grad;
}

template <typename Scalar>
Tensor<Scalar> relu(const Tensor<Scalar>& x) {
  Tensor<Scalar> y = x;
  for (Scalar& v : y.data()) v = v > Scalar(0) ? v : Scalar(0);
  return y;
}

template <typename Scalar>
Tensor<Scalar> relu_backward(const Tensor<Scalar>& output,
                             const Tensor<Scalar>& upstream) {
  require_same_shape(output.shape(), upstream.shape(), "relu_backward");
  Tensor<Scalar> g = upstream;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!(output.data()[i] > Scalar(0))) g.data()[i] = Scalar(0);
  }
  return g;
}

template <typename Scalar>
Tensor<Scalar> leaky_relu(const Tensor<Scalar>& x, Scalar slope) {
  Tensor<Scalar> y = x;
  for (Scalar& v : y.data()) v = v > Scalar(0) ? v : slope * v;
  return y;
}

template <typename Scalar>
Tensor<Scalar> leaky_relu_backward(const Tensor<Scalar>& output,
                                   const Tensor<Scalar>& upstream,
                                   Scalar slope) {
  require_same_shape(output.shape(), upstream.shape(), "leaky_relu_backward");
  Tensor<Scalar> g = upstream;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!(output.data()[i] > Scalar(0))) g.data()[i] *= slope;
  }
  return g;
}

template <typename Scalar>
Tensor<Scalar> concat_channels(const Tensor<Scalar>& a,
                               const Tensor<Scalar>& b) {
  const Shape4 &sa = a.shape(), &sb = b.shape();
  if (sa.t != sb.t || sa.h != sb.h || sa.w != sb.w) {
    throw std::invalid_argument("concat_channels: shape mismatch " + sa.str() +
                                " vs " + sb.str());
  }
  Tensor<Scalar> out({sa.t, sa.h, sa.w, sa.c + sb.c});
  const std::size_t pixels = static_cast<std::size_t>(sa.t) * sa.h * sa.w;
  for (std::size_t i = 0; i < pixels; ++i) {
    Scalar* dst = out.data().data() + i * (sa.c + sb.c);
    std::copy_n(a.data().data() + i * sa.c, sa.c, dst);
    std::copy_n(b.data().data() + i * sb.c, sb.c, dst + sa.c);
  }
  return out;
}

template <typename Scalar>
std::pair<Tensor<Scalar>, Tensor<Scalar>> split_channels(
    const Tensor<Scalar>& x, int first_channels) {
  const Shape4& s = x.shape();
  if (first_channels < 1 || first_channels >= s.c) {
    throw std::invalid_argument("split_channels: invalid split point");
  }
  const int rest = s.c - first_channels;
  Tensor<Scalar> a({s.t, s.h, s.w, first_channels});
  Tensor<Scalar> b({s.t, s.h, s.w, rest});
  const std::size_t pixels = static_cast<std::size_t>(s.t) * s.h * s.w;
  for (std::size_t i = 0; i < pixels; ++i) {
    const Scalar* src = x.data().data() + i * s.c;
    std::copy_n(src, first_channels, a.data().data() + i * first_channels);
    std::copy_n(src + first_channels, rest, b.data().data() + i * rest);
  }
  return {std::move(a), std::move(b)};
}

template <typename Scalar>
Tensor<Scalar> take_frame(const Tensor<Scalar>& x, int t) {
  const Shape4& s = x.shape();
  if (t < 0 || t >= s.t) throw std::out_of_range("take_frame: bad frame index");
  Tensor<Scalar> out({1, s.h, s.w, s.c});
  std::copy_n(x.frame_ptr(t), out.size(), out.data().data());
  return out;
}

#define FOA_INSTANTIATE_LAYERS(S)                                              \
  template struct Conv3dKernel<S>;                                             \
  template struct Conv3dGradients<S>;                                          \
  template Shape4 conv3d_output_shape(const Shape4&, const Conv3dKernel<S>&);  \
  template Tensor<S> conv3d_forward(const Tensor<S>&, const Conv3dKernel<S>&); \
  template Conv3dBackward<S> conv3d_backward(                                  \
      const Tensor<S>&, const Conv3dKernel<S>&, const Tensor<S>&);             \
  template PoolResult<S> maxpool3d(const Tensor<S>&, PoolWindow);              \
  template Tensor<S> maxpool3d_backward(                                       \
      const Shape4&, const std::vector<std::size_t>&, const Tensor<S>&);       \
  template Tensor<S> bilinear_upsample(const Tensor<S>&, int, int);            \
  template Tensor<S> bilinear_upsample_backward(const Shape4&,                 \
                                                const Tensor<S>&);             \
  template Tensor<S> relu(const Tensor<S>&);                                   \
  template Tensor<S> relu_backward(const Tensor<S>&, const Tensor<S>&);        \
  template Tensor<S> leaky_relu(const Tensor<S>&, S);                          \
  template Tensor<S> leaky_relu_backward(const Tensor<S>&, const Tensor<S>&,   \
                                         S);                                   \
  template Tensor<S> concat_channels(const Tensor<S>&, const Tensor<S>&);      \
  template std::pair<Tensor<S>, Tensor<S>> split_channels(const Tensor<S>&,    \
                                                          int);                \
  template Tensor<S> take_frame(const Tensor<S>&, int);

FOA_INSTANTIATE_LAYERS(float)
FOA_INSTANTIATE_LAYERS(double)

#undef FOA_INSTANTIATE_LAYERS

}  // namespace foa
