#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace foa {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam over a fixed list of parameter groups. Moments are kept in double
/// regardless of the parameter storage type.
class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

  const AdamConfig& config() const { return cfg_; }
  void set_lr(double lr) { cfg_.lr = lr; }
  long long steps() const { return t_; }

  /// One update. `params[g]` and `grads[g]` must keep the same lengths
  /// across calls; the first call fixes the group layout.
  template <typename Scalar>
  void step(const std::vector<std::span<Scalar>>& params,
            const std::vector<std::span<const Scalar>>& grads);

  std::vector<std::vector<double>>& first_moments() { return m_; }
  std::vector<std::vector<double>>& second_moments() { return v_; }
  void restore(long long t, std::vector<std::vector<double>> m,
               std::vector<std::vector<double>> v);

 private:
  AdamConfig cfg_;
  long long t_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

}  // namespace foa
