#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <random>
#include <sstream>

#include "foa/adam.hpp"
#include "foa/kl_loss.hpp"
#include "foa/parallel.hpp"
#include "foa/tensor_io.hpp"
#include "support.hpp"

using namespace foa;
using namespace foa::test;

TEST(KlLoss, MatchesDirectSum) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const auto y = random_map(9, 7, rng), p = random_map(9, 7, rng);
    const double ys = y.sum(), ps = p.sum(), eps = 1e-8;
    double want = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      const double yi = y[i] / ys, pi = p[i] / ps;
      want += yi * std::log(eps + yi / (eps + pi));
    }
    EXPECT_NEAR(kl_loss(y, p, eps, false).loss, want, 1e-12 * std::abs(want));
  }
}

TEST(KlLoss, SelfDivergenceIsZero) {
  std::mt19937_64 rng(12);
  const auto y = random_map(16, 16, rng);
  EXPECT_EQ(kl_loss(y, y, 0.0, false).loss, 0.0);
}

TEST(KlLoss, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(13);
  auto y = random_map(6, 5, rng);
  y[3] = 0.0;  // zero-target pixels are skipped but still feel normalization
  auto p = random_map(6, 5, rng, 0.1, 1.0);
  const auto r = kl_loss(y, p);
  for (std::size_t i = 0; i < p.size(); ++i) {
    auto f = [&] { return kl_loss(y, p, kDefaultEps, false).loss; };
    EXPECT_LT(rel_err(r.grad[i], central_difference(f, p[i], 1e-6)), 1e-5);
  }
}

TEST(KlLoss, ErrorsAndZeroMassPrediction) {
  FixationMap y(2, 2, 1.0), zero(2, 2, 0.0), neg(2, 2, 1.0);
  neg[1] = -1.0;
  EXPECT_THROW(kl_loss(zero, y), std::invalid_argument);
  EXPECT_THROW(kl_loss(y, neg), std::invalid_argument);
  EXPECT_THROW(kl_loss(y, FixationMap(3, 2, 1.0)), std::invalid_argument);
  const auto r = kl_loss(y, zero);
  for (double g : r.grad) EXPECT_EQ(g, 0.0);
  EXPECT_GT(r.loss, 0.0);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  std::vector<double> w{1.0, -2.0};
  const std::vector<double> g{0.5, -3.0};
  Adam adam(AdamConfig{0.01});
  adam.step<double>({std::span<double>(w)}, {std::span<const double>(g)});
  // Bias-corrected first step: m_hat / sqrt(v_hat) = sign(g).
  EXPECT_NEAR(w[0], 1.0 - 0.01, 1e-9);
  EXPECT_NEAR(w[1], -2.0 + 0.01, 1e-9);
  EXPECT_EQ(adam.steps(), 1);
}

TEST(Adam, MinimizesQuadratic) {
  std::vector<float> w{3.0f, -4.0f};
  Adam adam(AdamConfig{0.05});
  for (int i = 0; i < 2000; ++i) {
    std::vector<float> g{2 * w[0], 2 * w[1]};
    adam.step<float>({std::span<float>(w)}, {std::span<const float>(g)});
  }
  EXPECT_NEAR(w[0], 0.0f, 1e-2);
  EXPECT_NEAR(w[1], 0.0f, 1e-2);
}

TEST(TensorIo, RoundTripBothDtypes) {
  std::mt19937_64 rng(14);
  const auto t = random_tensor<double>({2, 3, 4, 5}, rng);
  std::stringstream ss;
  write_tensor(ss, t);
  const auto back = read_tensor<double>(ss);
  EXPECT_EQ(back.shape(), t.shape());
  EXPECT_EQ(back.storage(), t.storage());

  std::stringstream sf;
  write_tensor(sf, t.cast<float>());
  const auto widened = read_tensor<double>(sf);
  for (std::size_t i = 0; i < t.size(); ++i)
    EXPECT_EQ(widened.data()[i], double(float(t.data()[i])));
}

TEST(TensorIo, RejectsGarbage) {
  std::stringstream ss("NOPE-not-a-tensor");
  EXPECT_THROW(read_tensor<float>(ss), std::runtime_error);
}

TEST(Parallel, CoversEveryIndexOnceAndRethrows) {
  std::vector<std::atomic<int>> hits(97);
  parallel_for(hits.size(), [&](std::size_t i) { hits[i]++; }, 3);
  for (auto& h : hits) EXPECT_EQ(h.load(), 1);
  EXPECT_THROW(parallel_for(10, [](std::size_t i) { if (i == 7) throw std::runtime_error("x"); }, 2),
               std::runtime_error);
}
