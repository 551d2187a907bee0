#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "equalizer/numerics/tensor.hpp"

namespace equalizer::numerics {

/// Ordered collection of named trainable tensors.
class ParameterStore {
 public:
  std::size_t add(std::string name, Tensor value);

  std::size_t size() const noexcept { return values_.size(); }
  const std::string& name(std::size_t i) const { return names_.at(i); }
  Tensor& value(std::size_t i) { return values_.at(i); }
  const Tensor& value(std::size_t i) const { return values_.at(i); }

  std::optional<std::size_t> find(std::string_view name) const;
  /// Throws LookupError for unknown names.
  std::size_t index(std::string_view name) const;
  Tensor& operator[](std::string_view name) { return values_[index(name)]; }
  const Tensor& operator[](std::string_view name) const { return values_[index(name)]; }

  std::size_t parameter_count() const;

  friend bool operator==(const ParameterStore&, const ParameterStore&) = default;

 private:
  std::vector<std::string> names_;
  std::vector<Tensor> values_;
};

/// Gradients aligned with ParameterStore order.
using Gradients = std::vector<Tensor>;

struct NodeId {
  std::uint32_t index = 0;
  friend bool operator==(NodeId, NodeId) = default;
};

class Graph;

/// View handed to an operation's backward rule. Input gradients are null for
/// inputs that do not require a gradient.
class BackwardContext {
 public:
  BackwardContext(Graph& graph, std::uint32_t node) : graph_(graph), node_(node) {}

  const Tensor& out_grad() const;
  const Tensor& out_value() const;
  const Tensor& input(std::size_t k) const;
  Tensor* input_grad(std::size_t k);
  std::size_t input_count() const;

 private:
  Graph& graph_;
  std::uint32_t node_;
};

/// Tape of operation records in construction order. Construction order is a
/// valid topological order, and backward() sweeps it in reverse.
class Graph {
 public:
  using BackwardFn = std::function<void(BackwardContext&)>;

  /// With `record_backward` false, backward rules are not stored and
  /// backward() is unavailable; used for inference.
  explicit Graph(bool record_backward = true) : record_backward_(record_backward) {}

  NodeId constant(Tensor value);
  /// Leaf bound to a stored parameter. Repeated calls for the same index
  /// return the same node.
  NodeId parameter(const ParameterStore& store, std::size_t index);
  NodeId parameter(const ParameterStore& store, std::string_view name);

  /// Records an operation output. Throws NumericError on non-finite values.
  NodeId record(const char* op, Tensor value, std::vector<NodeId> inputs, BackwardFn backward);

  const Tensor& value(NodeId id) const { return nodes_.at(id.index).value; }
  bool requires_grad(NodeId id) const { return nodes_.at(id.index).requires_grad; }
  bool recording() const noexcept { return record_backward_; }
  std::size_t node_count() const noexcept { return nodes_.size(); }
  std::string_view op(NodeId id) const { return nodes_.at(id.index).op; }

  /// Populates node gradients from a scalar loss node and returns the
  /// gradient of every parameter bound into this graph; parameters of
  /// `store` that the loss does not reach receive zeros.
  Gradients backward(NodeId loss, const ParameterStore& store);

  /// Gradient of any node after backward(); zeros if the loss does not
  /// depend on it.
  const Tensor& grad(NodeId id) const;

 private:
  friend class BackwardContext;

  struct Node {
    const char* op = "";
    Tensor value;
    std::vector<NodeId> inputs;
    BackwardFn backward;
    bool requires_grad = false;
    std::optional<std::size_t> parameter;
  };

  bool record_backward_;
  const ParameterStore* store_ = nullptr;
  // deque keeps value references stable while nodes are appended
  std::deque<Node> nodes_;
  std::vector<std::optional<NodeId>> parameter_nodes_;
  std::vector<Tensor> grads_;
};

}  // namespace equalizer::numerics
