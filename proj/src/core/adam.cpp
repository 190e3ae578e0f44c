#include "pf/adam.hpp"

#include <cmath>

namespace pf {

template <class T>
void Adam<T>::step(std::span<Parameter<T>* const> params) {
  if (t_ == 0) {
    m_.clear();
    v_.clear();
    for (auto* p : params) {
      m_.emplace_back(p->value().shape());
      v_.emplace_back(p->value().shape());
    }
  }
  require(params.size() == m_.size(), ErrorKind::dimension,
          "adam: parameter count changed from " + std::to_string(m_.size()) + " to " + std::to_string(params.size()));
  for (std::size_t i = 0; i < params.size(); ++i)
    require(params[i]->value().shape() == m_[i].shape() && params[i]->grad().shape() == m_[i].shape(),
            ErrorKind::dimension, "adam: shape drift on parameter '" + params[i]->id() + "'");

  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  const T b1 = static_cast<T>(cfg_.beta1), b2 = static_cast<T>(cfg_.beta2);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& value = params[i]->value();
    auto& grad = params[i]->grad();
    auto& m = m_[i];
    auto& v = v_[i];
    for (std::size_t k = 0; k < value.size(); ++k) {
      const T g = grad[k];
      m[k] = b1 * m[k] + (T(1) - b1) * g;
      v[k] = b2 * v[k] + (T(1) - b2) * g * g;
      const double mhat = static_cast<double>(m[k]) / bc1;
      const double vhat = static_cast<double>(v[k]) / bc2;
      value[k] -= static_cast<T>(cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.epsilon));
    }
    params[i]->zero_grad();
  }
}

template class Adam<float>;
template class Adam<double>;

}  // namespace pf
