#pragma once
// Gradient probes for single ops: loss = sum(op(inputs...) * R) with a fixed
// random R, so every output entry contributes a distinct weight.

#include <functional>
#include <vector>

#include "dualmixer/ops.hpp"
#include "dualmixer/rng.hpp"
#include "oracles.hpp"

namespace probe {

using dualmixer::numerics::Graph;
using dualmixer::numerics::Tensor;
using dualmixer::numerics::Var;
using Op = std::function<Var(Graph&, const std::vector<Var>&)>;

inline Tensor random_tensor(dualmixer::Rng& rng, std::size_t r, std::size_t c, double lo = -1.0,
                            double hi = 1.0) {
  Tensor t(r, c);
  for (auto& v : t.values()) v = rng.uniform(lo, hi);
  return t;
}

/// Worst relative error between tape gradients and central differences
/// over all entries of all inputs.
inline double worst_error(const Op& op, std::vector<Tensor> inputs, std::uint64_t seed = 7) {
  dualmixer::Rng rng(seed);
  Tensor weights;
  auto evaluate = [&](bool keep_graph, std::vector<Tensor>* grads) {
    Graph g;
    std::vector<Var> vars;
    for (const auto& x : inputs) vars.push_back(g.input(x));
    Var out = op(g, vars);
    if (weights.empty()) weights = random_tensor(rng, out.rows(), out.cols());
    Var loss = dualmixer::numerics::sum(dualmixer::numerics::hadamard(out, g.constant(weights)));
    if (keep_graph) {
      g.backward(loss);
      for (const auto& v : vars) grads->push_back(g.grad(v));
    }
    return loss.value().item();
  };
  std::vector<Tensor> analytic;
  evaluate(true, &analytic);
  oracle::GradCheck check;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    Tensor numeric = oracle::numeric_gradient([&] { return evaluate(false, nullptr); }, inputs[k]);
    oracle::merge(check, analytic[k], numeric);
  }
  return check.worst;
}

}  // namespace probe
