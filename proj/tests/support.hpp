#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "foa/fixation_map.hpp"
#include "foa/layers.hpp"
#include "foa/tensor.hpp"

namespace foa::test {

template <typename S>
Tensor<S> random_tensor(Shape4 s, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor<S> t(s);
  for (auto& v : t.data()) v = static_cast<S>(u(rng));
  return t;
}

template <typename S>
Conv3dKernel<S> random_kernel(int out, int in, int p, int q, int r, std::mt19937_64& rng,
                              Padding pad = Padding::Same) {
  auto k = Conv3dKernel<S>::zeros(out, in, p, q, r, pad);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (auto& v : k.weights) v = static_cast<S>(u(rng));
  for (auto& v : k.bias) v = static_cast<S>(u(rng));
  return k;
}

inline FixationMap random_map(int h, int w, std::mt19937_64& rng, double lo = 0.0,
                              double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  FixationMap m(h, w);
  for (auto& v : m.data()) v = u(rng);
  return m;
}

template <typename S>
double dot(const Tensor<S>& a, const Tensor<S>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += double(a.data()[i]) * double(b.data()[i]);
  return s;
}

/// Central difference of f with respect to x[i].
inline double central_difference(const std::function<double()>& f, double& x, double step) {
  const double keep = x;
  x = keep + step;
  const double fp = f();
  x = keep - step;
  const double fm = f();
  x = keep;
  return (fp - fm) / (2 * step);
}

/// |a - b| / max(|a|, |b|, floor).
inline double rel_err(double a, double b, double floor = 1e-6) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

/// Brute-force conv3d straight from the triple-sum definition.
template <typename S>
Tensor<double> conv3d_oracle(const Tensor<S>& in, const Conv3dKernel<S>& k) {
  const bool same = k.padding == Padding::Same;
  const int pt = same ? (k.depth - 1) / 2 : 0, ph = same ? (k.height - 1) / 2 : 0,
            pw = same ? (k.width - 1) / 2 : 0;
  const Shape4 s = in.shape();
  Shape4 o = same ? Shape4{s.t, s.h, s.w, k.out_channels}
                  : Shape4{s.t - k.depth + 1, s.h - k.height + 1, s.w - k.width + 1,
                           k.out_channels};
  Tensor<double> out(o);
  for (int t = 0; t < o.t; ++t)
    for (int y = 0; y < o.h; ++y)
      for (int x = 0; x < o.w; ++x)
        for (int j = 0; j < o.c; ++j) {
          double acc = k.bias[j];
          for (int m = 0; m < s.c; ++m)
            for (int p = 0; p < k.height; ++p)
              for (int q = 0; q < k.width; ++q)
                for (int r = 0; r < k.depth; ++r) {
                  const int yi = y + p - ph, xi = x + q - pw, ti = t + r - pt;
                  if (yi < 0 || yi >= s.h || xi < 0 || xi >= s.w || ti < 0 || ti >= s.t) continue;
                  acc += double(k.w(j, m, p, q, r)) * double(in(ti, yi, xi, m));
                }
          out(t, y, x, j) = acc;
        }
  return out;
}

}  // namespace foa::test
