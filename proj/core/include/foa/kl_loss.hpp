#pragma once

#include <span>
#include <vector>

#include "foa/fixation_map.hpp"

namespace foa {

inline constexpr double kDefaultEps = 1e-8;

struct KlResult {
  double loss = 0.0;
  /// d loss / d pred, taken with respect to the prediction before it is
  /// normalized. Empty when the gradient was not requested.
  std::vector<double> grad;
};

/// sum_i Y(i) * log(eps + Y(i) / (eps + P(i))) with Y and P normalized to
/// sum 1 internally. Pixels with Y(i) = 0 contribute nothing. A prediction
/// with zero total mass is treated as all-zero and receives a zero gradient.
/// Throws std::invalid_argument on NaN, negative values, mismatched lengths
/// or an all-zero target.
KlResult kl_loss(std::span<const double> target, std::span<const double> pred,
                 double eps = kDefaultEps, bool with_grad = true);

KlResult kl_loss(const FixationMap& target, const FixationMap& pred,
                 double eps = kDefaultEps, bool with_grad = true);

}  // namespace foa
