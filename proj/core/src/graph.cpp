#include "dualmixer/graph.hpp"

#include <algorithm>

#include "dualmixer/error.hpp"

namespace dualmixer::numerics {

ParamId ParameterStore::add(std::string name, Tensor value) {
  if (find(name)) throw ContractError("duplicate parameter name '" + name + "'");
  Tensor grad(value.rows(), value.cols());
  params_.push_back(Parameter{std::move(name), std::move(value), std::move(grad)});
  return ParamId{params_.size() - 1};
}

std::optional<ParamId> ParameterStore::find(const std::string& name) const {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (params_[i].name == name) return ParamId{i};
  }
  return std::nullopt;
}

std::size_t ParameterStore::scalar_count() const noexcept {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

void ParameterStore::zero_grad() {
  for (auto& p : params_) p.grad.fill(0.0);
}

const Tensor& Var::value() const { return graph->value(*this); }

Var Graph::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var{this, nodes_.size() - 1};
}

Var Graph::constant(Tensor value) {
  Node n;
  n.value = std::move(value);
  return push(std::move(n));
}

Var Graph::input(Tensor value) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = true;
  return push(std::move(n));
}

Var Graph::param(ParamId id) {
  if (source_ == nullptr) throw ContractError("graph has no parameter store");
  if (id.index >= source_->size()) throw ContractError("parameter id out of range");
  if (param_nodes_.size() < source_->size()) param_nodes_.resize(source_->size());
  if (auto existing = param_nodes_[id.index]) return Var{this, *existing};
  Node n;
  n.value = (*source_)[id].value;
  n.param = id;
  n.requires_grad = true;
  Var v = push(std::move(n));
  param_nodes_[id.index] = v.id;
  return v;
}

Var Graph::record(Tensor value, std::initializer_list<Var> inputs, BackwardRule rule) {
  Node n;
  n.value = std::move(value);
  n.inputs.reserve(inputs.size());
  for (const Var& in : inputs) {
    if (in.graph != this) throw ContractError("operand recorded on a different graph");
    n.inputs.push_back(in.id);
    n.requires_grad = n.requires_grad || nodes_[in.id].requires_grad;
  }
  if (n.requires_grad) n.rule = std::move(rule);
  return push(std::move(n));
}

Tensor Graph::grad(Var v) const {
  const Node& n = nodes_.at(v.id);
  if (n.grad.empty() && !n.value.empty()) return Tensor(n.value.rows(), n.value.cols());
  return n.grad;
}

void Graph::backward(Var loss) {
  if (loss.graph != this) throw ContractError("loss belongs to a different graph");
  const Node& root = nodes_.at(loss.id);
  if (root.value.rows() != 1 || root.value.cols() != 1) {
    throw ContractError("backward requires a scalar (1x1) loss, got " + root.value.shape_string());
  }
  for (auto& n : nodes_) n.grad = Tensor();
  nodes_[loss.id].grad = Tensor::ones(1, 1);

  std::vector<const Tensor*> in_values;
  std::vector<Tensor*> in_grads;
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad || n.grad.empty()) continue;
    if (n.param) {
      if (sink_ == nullptr) throw ContractError("backward through frozen parameters");
      add_inplace((*sink_)[*n.param].grad, n.grad);
      continue;
    }
    if (!n.rule) continue;
    in_values.clear();
    in_grads.clear();
    for (std::size_t in : n.inputs) {
      Node& src = nodes_[in];
      in_values.push_back(&src.value);
      if (src.requires_grad) {
        if (src.grad.empty()) src.grad = Tensor(src.value.rows(), src.value.cols());
        in_grads.push_back(&src.grad);
      } else {
        in_grads.push_back(nullptr);
      }
    }
    n.rule(BackwardContext{n.value, n.grad, in_values, in_grads});
    // Interior gradients are no longer needed once propagated.
    if (!n.param && !n.inputs.empty()) n.grad = Tensor();
  }
}

}  // namespace dualmixer::numerics
