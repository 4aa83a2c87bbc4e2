#include "foa/kl_loss.hpp"

#include <cmath>
#include <stdexcept>

namespace foa {

namespace {

double checked_sum(std::span<const double> v, const char* what) {
  double s = 0.0;
  for (double x : v) {
    if (std::isnan(x)) {
      throw std::invalid_argument(std::string("kl_loss: NaN in ") + what);
    }
    if (x < 0.0) {
      throw std::invalid_argument(std::string("kl_loss: negative value in ") +
                                  what);
    }
    s += x;
  }
  if (!std::isfinite(s)) {
    throw std::invalid_argument(std::string("kl_loss: non-finite mass in ") +
                                what);
  }
  return s;
}

}  // namespace

KlResult kl_loss(std::span<const double> target, std::span<const double> pred,
                 double eps, bool with_grad) {
  if (target.size() != pred.size() || target.empty()) {
    throw std::invalid_argument("kl_loss: target/pred size mismatch");
  }
  if (!(eps >= 0.0)) throw std::invalid_argument("kl_loss: eps must be >= 0");
  const double ys = checked_sum(target, "target");
  const double ps = checked_sum(pred, "prediction");
  if (ys <= 0.0) throw std::invalid_argument("kl_loss: all-zero target");

  const std::size_t n = target.size();
  KlResult r;
  if (with_grad) r.grad.assign(n, 0.0);
  const double inv_ps = ps > 0.0 ? 1.0 / ps : 0.0;

  double weighted = 0.0;  // sum_i g_i p_i
  for (std::size_t i = 0; i < n; ++i) {
    const double y = target[i] / ys;
    if (y == 0.0) continue;
    const double p = ps > 0.0 ? pred[i] / ps : 0.0;
    const double q = eps + p;
    const double inner = eps + y / q;
    r.loss += y * std::log(inner);
    if (with_grad && ps > 0.0) {
      const double g = -y * y / (q * q * inner);
      r.grad[i] = g;
      weighted += g * p;
    }
  }
  if (with_grad && ps > 0.0) {
    for (std::size_t i = 0; i < n; ++i) r.grad[i] = (r.grad[i] - weighted) * inv_ps;
  }
  return r;
}

KlResult kl_loss(const FixationMap& target, const FixationMap& pred, double eps,
                 bool with_grad) {
  if (!target.same_shape(pred)) {
    throw std::invalid_argument("kl_loss: map shapes differ");
  }
  return kl_loss(target.data(), pred.data(), eps, with_grad);
}

}  // namespace foa
