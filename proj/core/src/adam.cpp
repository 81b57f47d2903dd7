#include "dualmixer/adam.hpp"

#include <cmath>

#include "dualmixer/error.hpp"

namespace dualmixer::numerics {

void Adam::step(ParameterStore& params) {
  auto all = params.all();
  if (m_.empty()) {
    for (const auto& p : all) {
      m_.emplace_back(p.value.rows(), p.value.cols());
      v_.emplace_back(p.value.rows(), p.value.cols());
    }
  }
  if (m_.size() != all.size()) throw ContractError("Adam state does not match parameter store");

  ++step_;
  const double t = static_cast<double>(step_);
  const double c1 = 1.0 - std::pow(config_.beta1, t);
  const double c2 = 1.0 - std::pow(config_.beta2, t);
  for (std::size_t k = 0; k < all.size(); ++k) {
    Parameter& p = all[k];
    Tensor& m = m_[k];
    Tensor& v = v_[k];
    require_same_shape(p.value, m, "adam moments");
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double g = p.grad[i];
      m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * g;
      v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * g * g;
      const double m_hat = m[i] / c1;
      const double v_hat = v[i] / c2;
      p.value[i] -= config_.lr * m_hat / (std::sqrt(v_hat) + config_.eps);
    }
  }
  params.zero_grad();
}

}  // namespace dualmixer::numerics
