#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pf/autodiff.hpp"

namespace pf {

struct AdamConfig {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam with bias correction. Moments are bound to the parameter list seen on
/// the first step; later calls must pass parameters of the same shapes in the
/// same order.
template <class T>
class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

  /// Applies one update and zeroes the gradients.
  void step(std::span<Parameter<T>* const> params);

  std::uint64_t t() const noexcept { return t_; }
  const AdamConfig& config() const noexcept { return cfg_; }
  const std::vector<Tensor<T>>& first_moments() const noexcept { return m_; }
  const std::vector<Tensor<T>>& second_moments() const noexcept { return v_; }

 private:
  AdamConfig cfg_;
  std::uint64_t t_ = 0;
  std::vector<Tensor<T>> m_, v_;
};

extern template class Adam<float>;
extern template class Adam<double>;

}  // namespace pf
