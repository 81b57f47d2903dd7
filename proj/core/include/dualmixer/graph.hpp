#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dualmixer/tensor.hpp"

namespace dualmixer::numerics {

/// Index of a parameter inside a ParameterStore.
struct ParamId {
  std::size_t index = 0;
  friend bool operator==(ParamId, ParamId) = default;
};

/// A named learnable tensor together with its gradient accumulator.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
};

/// Owns the learnable tensors of a model. Ids stay valid for the store's lifetime.
class ParameterStore {
 public:
  ParamId add(std::string name, Tensor value);

  Parameter& operator[](ParamId id) { return params_.at(id.index); }
  const Parameter& operator[](ParamId id) const { return params_.at(id.index); }

  std::optional<ParamId> find(const std::string& name) const;
  std::size_t size() const noexcept { return params_.size(); }
  /// Total number of scalar weights.
  std::size_t scalar_count() const noexcept;

  std::span<Parameter> all() noexcept { return params_; }
  std::span<const Parameter> all() const noexcept { return params_; }

  void zero_grad();

 private:
  std::vector<Parameter> params_;
};

class Graph;

/// Handle to a node recorded on a Graph.
struct Var {
  Graph* graph = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
};

/// What a node's backward rule sees. `input_grads[k]` is null when input k
/// does not need a gradient.
struct BackwardContext {
  const Tensor& output;
  const Tensor& grad;
  std::span<const Tensor* const> inputs;
  std::span<Tensor* const> input_grads;
};

using BackwardRule = std::function<void(const BackwardContext&)>;

/// Reverse-mode tape. Nodes are appended in evaluation order, so the node list
/// is already topologically sorted. Parameter leaves hold a copy of the
/// parameter value taken when they are first referenced.
class Graph {
 public:
  Graph() = default;
  /// Trainable graph: backward accumulates into `params`.
  explicit Graph(ParameterStore* params) : source_(params), sink_(params) {}
  /// Forward-only graph over frozen parameters; backward through them throws.
  explicit Graph(const ParameterStore& params) : source_(&params) {}

  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  /// Leaf without gradient.
  Var constant(Tensor value);
  /// Leaf whose gradient is kept after backward (used to probe d loss / d input).
  Var input(Tensor value);
  /// Leaf bound to a stored parameter; repeated calls return the same node.
  Var param(ParamId id);

  /// Appends an interior node. The rule is skipped when no input needs a gradient.
  Var record(Tensor value, std::initializer_list<Var> inputs, BackwardRule rule);

  const Tensor& value(Var v) const { return nodes_.at(v.id).value; }
  /// Gradient of the last backward() with respect to `v` (zeros if unreachable).
  Tensor grad(Var v) const;
  bool requires_grad(Var v) const { return nodes_.at(v.id).requires_grad; }

  /// Reverse sweep from a 1x1 loss; accumulates into the parameter store.
  void backward(Var loss);

  std::size_t size() const noexcept { return nodes_.size(); }
  const ParameterStore* parameters() const noexcept { return source_; }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    std::vector<std::size_t> inputs;
    BackwardRule rule;
    std::optional<ParamId> param;
    bool requires_grad = false;
  };

  Var push(Node node);

  const ParameterStore* source_ = nullptr;
  ParameterStore* sink_ = nullptr;
  std::vector<Node> nodes_;
  std::vector<std::optional<std::size_t>> param_nodes_;
};

}  // namespace dualmixer::numerics
