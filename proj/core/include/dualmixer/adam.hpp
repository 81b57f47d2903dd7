#pragma once

#include <cstdint>
#include <vector>

#include "dualmixer/graph.hpp"

namespace dualmixer::numerics {

struct AdamConfig {
  double lr = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam with bias correction. Moments are created lazily to match the store.
class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}

  /// Applies one update from the accumulated gradients, then zeroes them.
  void step(ParameterStore& params);

  std::int64_t steps() const noexcept { return step_; }
  const AdamConfig& config() const noexcept { return config_; }
  const std::vector<Tensor>& first_moments() const noexcept { return m_; }
  const std::vector<Tensor>& second_moments() const noexcept { return v_; }

 private:
  AdamConfig config_;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
  std::int64_t step_ = 0;
};

}  // namespace dualmixer::numerics
