#include <gtest/gtest.h>

#include <random>

#include "foa/layers.hpp"
#include "support.hpp"

using namespace foa;
using namespace foa::test;

TEST(Conv3d, DegenerateSum) {
  Tensor<double> in({1, 1, 1, 1}, 3.0);
  auto k = Conv3dKernel<double>::zeros(1, 1, 1, 1, 1);
  k.w(0, 0, 0, 0, 0) = 2.0;
  k.bias[0] = 1.0;
  EXPECT_EQ(conv3d_forward(in, k)(0, 0, 0, 0), 7.0);
}

TEST(Conv3d, CentredDeltaIsIdentity) {
  std::mt19937_64 rng(1);
  auto in = random_tensor<double>({4, 6, 5, 2}, rng);
  auto k = Conv3dKernel<double>::zeros(2, 2, 3, 3, 3);
  for (int m = 0; m < 2; ++m) k.w(m, m, 1, 1, 1) = 1.0;
  const auto out = conv3d_forward(in, k);
  ASSERT_EQ(out.shape(), in.shape());
  for (std::size_t i = 0; i < in.size(); ++i) EXPECT_EQ(out.data()[i], in.data()[i]);
}

TEST(Conv3d, MatchesOracle) {
  std::mt19937_64 rng(2);
  for (Padding pad : {Padding::Same, Padding::Valid}) {
    for (int trial = 0; trial < 5; ++trial) {
      auto in = random_tensor<double>({5, 9, 7, 3}, rng);
      auto k = random_kernel<double>(4, 3, 3, 3, trial % 2 ? 3 : 1, rng, pad);
      const auto got = conv3d_forward(in, k);
      const auto want = conv3d_oracle(in, k);
      ASSERT_EQ(got.shape(), want.shape());
      for (std::size_t i = 0; i < got.size(); ++i)
        EXPECT_NEAR(got.data()[i], want.data()[i], 1e-12 * std::max(1.0, std::abs(want.data()[i])));
    }
  }
}

TEST(Conv3d, LinearInInput) {
  std::mt19937_64 rng(3);
  auto k = random_kernel<double>(2, 2, 3, 3, 3, rng);
  std::fill(k.bias.begin(), k.bias.end(), 0.0);
  auto x = random_tensor<double>({3, 5, 5, 2}, rng);
  auto y = random_tensor<double>({3, 5, 5, 2}, rng);
  const double a = 1.7, b = -0.4;
  Tensor<double> mix(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) mix.data()[i] = a * x.data()[i] + b * y.data()[i];
  const auto fx = conv3d_forward(x, k), fy = conv3d_forward(y, k), fm = conv3d_forward(mix, k);
  for (std::size_t i = 0; i < fm.size(); ++i)
    EXPECT_NEAR(fm.data()[i], a * fx.data()[i] + b * fy.data()[i], 1e-12);
}

TEST(Conv3d, RejectsChannelMismatchAndOversizedValidKernel) {
  Tensor<double> in({1, 2, 2, 1});
  EXPECT_THROW(conv3d_forward(in, Conv3dKernel<double>::zeros(1, 2, 1, 1, 1)), std::invalid_argument);
  EXPECT_THROW(conv3d_forward(in, Conv3dKernel<double>::zeros(1, 1, 3, 3, 1, Padding::Valid)),
               std::invalid_argument);
}

TEST(Conv3d, BackwardMatchesFiniteDifferences) {
  std::mt19937_64 rng(4);
  for (Padding pad : {Padding::Same, Padding::Valid}) {
    auto in = random_tensor<double>({3, 5, 4, 2}, rng);
    auto k = random_kernel<double>(3, 2, 3, 3, 3, rng, pad);
    const auto up = random_tensor<double>(conv3d_output_shape(in.shape(), k), rng);
    auto f = [&] { return dot(up, conv3d_forward(in, k)); };
    const auto g = conv3d_backward(in, k, up);
    for (std::size_t i = 0; i < in.size(); ++i)
      EXPECT_LT(rel_err(g.input_grad.data()[i], central_difference(f, in.data()[i], 1e-4)), 1e-6);
    for (std::size_t i = 0; i < k.weights.size(); ++i)
      EXPECT_LT(rel_err(g.params.weights[i], central_difference(f, k.weights[i], 1e-4)), 1e-6);
    for (std::size_t i = 0; i < k.bias.size(); ++i)
      EXPECT_LT(rel_err(g.params.bias[i], central_difference(f, k.bias[i], 1e-4)), 1e-6);
  }
}

TEST(MaxPool, MatchesOracleAndTiesGoFirst) {
  std::mt19937_64 rng(5);
  auto in = random_tensor<double>({4, 6, 8, 2}, rng);
  const PoolWindow w{2, 3, 2};
  const auto r = maxpool3d(in, w);
  ASSERT_EQ(r.output.shape(), (Shape4{2, 2, 4, 2}));
  for (int t = 0; t < 2; ++t)
    for (int y = 0; y < 2; ++y)
      for (int x = 0; x < 4; ++x)
        for (int c = 0; c < 2; ++c) {
          double best = -1e300;
          for (int a = 0; a < w.t; ++a)
            for (int b = 0; b < w.h; ++b)
              for (int d = 0; d < w.w; ++d) best = std::max(best, in(t * 2 + a, y * 3 + b, x * 2 + d, c));
          EXPECT_EQ(r.output(t, y, x, c), best);
        }
  Tensor<double> flat({1, 2, 2, 1}, 5.0);
  const auto tie = maxpool3d(flat, PoolWindow{1, 2, 2});
  EXPECT_EQ(tie.argmax[0], 0u);
  EXPECT_THROW(maxpool3d(in, PoolWindow{3, 1, 1}), std::invalid_argument);
}

TEST(MaxPool, BackwardRoutesToArgmax) {
  std::mt19937_64 rng(6);
  auto in = random_tensor<double>({2, 4, 4, 1}, rng);
  const auto r = maxpool3d(in, PoolWindow{2, 2, 2});
  const auto up = random_tensor<double>(r.output.shape(), rng);
  auto f = [&] { return dot(up, maxpool3d(in, PoolWindow{2, 2, 2}).output); };
  const auto g = maxpool3d_backward(in.shape(), r.argmax, up);
  for (std::size_t i = 0; i < in.size(); ++i)
    EXPECT_NEAR(g.data()[i], central_difference(f, in.data()[i], 1e-6), 1e-8);
}

TEST(Bilinear, CornersAlignAndBackwardIsAdjoint) {
  std::mt19937_64 rng(7);
  auto in = random_tensor<double>({1, 3, 4, 2}, rng);
  const auto up = bilinear_upsample(in, 7, 10);
  for (int c = 0; c < 2; ++c) {
    EXPECT_DOUBLE_EQ(up(0, 0, 0, c), in(0, 0, 0, c));
    EXPECT_DOUBLE_EQ(up(0, 6, 9, c), in(0, 2, 3, c));
    EXPECT_DOUBLE_EQ(up(0, 3, 3, c), in(0, 1, 1, c));  // 3*(2/6)=1, 3*(3/9)=1
  }
  const auto u = random_tensor<double>(up.shape(), rng);
  const auto g = bilinear_upsample_backward(in.shape(), u);
  auto x = random_tensor<double>(in.shape(), rng);
  EXPECT_NEAR(dot(u, bilinear_upsample(x, 7, 10)), dot(g, x), 1e-12);
  EXPECT_THROW(bilinear_upsample(in, 2, 4), std::invalid_argument);
}

TEST(Activations, ReluAndLeakyBackward) {
  Tensor<double> x({1, 1, 4, 1}, std::vector<double>{-2, -0.5, 0.5, 3});
  const auto r = relu(x);
  EXPECT_EQ(r.data()[0], 0.0);
  EXPECT_EQ(r.data()[3], 3.0);
  Tensor<double> up({1, 1, 4, 1}, 1.0);
  const auto gr = relu_backward(r, up);
  EXPECT_EQ(gr.data()[1], 0.0);
  EXPECT_EQ(gr.data()[2], 1.0);
  const auto l = leaky_relu(x, 0.1);
  EXPECT_DOUBLE_EQ(l.data()[0], -0.2);
  const auto gl = leaky_relu_backward(l, up, 0.1);
  EXPECT_DOUBLE_EQ(gl.data()[0], 0.1);
  EXPECT_DOUBLE_EQ(gl.data()[3], 1.0);
}

TEST(Channels, ConcatSplitRoundTrip) {
  std::mt19937_64 rng(8);
  auto a = random_tensor<double>({2, 3, 3, 2}, rng);
  auto b = random_tensor<double>({2, 3, 3, 1}, rng);
  const auto c = concat_channels(a, b);
  ASSERT_EQ(c.channels(), 3);
  EXPECT_EQ(c(1, 2, 0, 2), b(1, 2, 0, 0));
  const auto [a2, b2] = split_channels(c, 2);
  EXPECT_EQ(a2.storage(), a.storage());
  EXPECT_EQ(b2.storage(), b.storage());
  const auto f = take_frame(a, 1);
  EXPECT_EQ(f.frames(), 1);
  EXPECT_EQ(f(0, 1, 1, 1), a(1, 1, 1, 1));
}
