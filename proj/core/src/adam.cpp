#include "foa/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace foa {

template <typename Scalar>
void Adam::step(const std::vector<std::span<Scalar>>& params,
                const std::vector<std::span<const Scalar>>& grads) {
  if (params.size() != grads.size()) {
    throw std::invalid_argument("Adam::step: params/grads group mismatch");
  }
  if (m_.empty()) {
    m_.resize(params.size());
    v_.resize(params.size());
    for (std::size_t g = 0; g < params.size(); ++g) {
      m_[g].assign(params[g].size(), 0.0);
      v_[g].assign(params[g].size(), 0.0);
    }
  }
  if (m_.size() != params.size()) {
    throw std::invalid_argument("Adam::step: group count changed");
  }
  ++t_;
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t g = 0; g < params.size(); ++g) {
    if (params[g].size() != grads[g].size() || m_[g].size() != params[g].size()) {
      throw std::invalid_argument("Adam::step: group size mismatch");
    }
    auto& m = m_[g];
    auto& v = v_[g];
    for (std::size_t i = 0; i < params[g].size(); ++i) {
      const double gr = static_cast<double>(grads[g][i]);
      m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * gr;
      v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * gr * gr;
      const double mh = m[i] / c1;
      const double vh = v[i] / c2;
      params[g][i] = static_cast<Scalar>(static_cast<double>(params[g][i]) -
                                         cfg_.lr * mh / (std::sqrt(vh) + cfg_.eps));
    }
  }
}

void Adam::restore(long long t, std::vector<std::vector<double>> m,
                   std::vector<std::vector<double>> v) {
  if (m.size() != v.size()) throw std::invalid_argument("Adam::restore: mismatch");
  t_ = t;
  m_ = std::move(m);
  v_ = std::move(v);
}

template void Adam::step(const std::vector<std::span<float>>&,
                         const std::vector<std::span<const float>>&);
template void Adam::step(const std::vector<std::span<double>>&,
                         const std::vector<std::span<const double>>&);

}  // namespace foa
