#include "equalizer/numerics/graph.hpp"

#include "equalizer/error.hpp"

namespace equalizer::numerics {

std::size_t ParameterStore::add(std::string name, Tensor value) {
  if (find(name)) throw ContractError("duplicate parameter name '" + name + "'");
  names_.push_back(std::move(name));
  values_.push_back(std::move(value));
  return values_.size() - 1;
}

std::optional<std::size_t> ParameterStore::find(std::string_view name) const {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) return i;
  }
  return std::nullopt;
}

std::size_t ParameterStore::index(std::string_view name) const {
  auto i = find(name);
  if (!i) throw LookupError("unknown parameter '" + std::string(name) + "'");
  return *i;
}

std::size_t ParameterStore::parameter_count() const {
  std::size_t n = 0;
  for (const auto& v : values_) n += v.size();
  return n;
}

const Tensor& BackwardContext::out_grad() const { return graph_.grads_[node_]; }
const Tensor& BackwardContext::out_value() const { return graph_.nodes_[node_].value; }

const Tensor& BackwardContext::input(std::size_t k) const {
  return graph_.nodes_[graph_.nodes_[node_].inputs.at(k).index].value;
}

Tensor* BackwardContext::input_grad(std::size_t k) {
  auto id = graph_.nodes_[node_].inputs.at(k).index;
  if (!graph_.nodes_[id].requires_grad) return nullptr;
  return &graph_.grads_[id];
}

std::size_t BackwardContext::input_count() const { return graph_.nodes_[node_].inputs.size(); }

NodeId Graph::constant(Tensor value) {
  require_finite(value, "constant");
  Node n;
  n.op = "constant";
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return NodeId{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

NodeId Graph::parameter(const ParameterStore& store, std::size_t index) {
  if (store_ && store_ != &store) throw ContractError("graph already bound to a different parameter store");
  store_ = &store;
  if (index >= store.size()) throw LookupError("parameter index out of range");
  if (parameter_nodes_.size() < store.size()) parameter_nodes_.resize(store.size());
  if (parameter_nodes_[index]) return *parameter_nodes_[index];
  require_finite(store.value(index), "parameter");
  Node n;
  n.op = "parameter";
  n.value = store.value(index);
  n.requires_grad = record_backward_;
  n.parameter = index;
  nodes_.push_back(std::move(n));
  NodeId id{static_cast<std::uint32_t>(nodes_.size() - 1)};
  parameter_nodes_[index] = id;
  return id;
}

NodeId Graph::parameter(const ParameterStore& store, std::string_view name) {
  return parameter(store, store.index(name));
}

NodeId Graph::record(const char* op, Tensor value, std::vector<NodeId> inputs, BackwardFn backward) {
  require_finite(value, op);
  Node n;
  n.op = op;
  n.value = std::move(value);
  if (record_backward_) {
    for (auto in : inputs) {
      if (in.index >= nodes_.size()) throw ContractError("operation input refers to a later node");
      n.requires_grad = n.requires_grad || nodes_[in.index].requires_grad;
    }
    if (n.requires_grad) n.backward = std::move(backward);
    n.inputs = std::move(inputs);
  }
  nodes_.push_back(std::move(n));
  return NodeId{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Gradients Graph::backward(NodeId loss, const ParameterStore& store) {
  if (!record_backward_) throw ContractError("backward() on a graph built without recording");
  if (store_ && store_ != &store) throw ContractError("backward() with a parameter store not bound to this graph");
  const auto& loss_value = nodes_.at(loss.index).value;
  if (loss_value.size() != 1) {
    throw ContractError("backward() requires a scalar loss, got shape " + shape_string(loss_value.shape()));
  }

  grads_.clear();
  grads_.reserve(nodes_.size());
  for (const auto& n : nodes_) grads_.emplace_back(n.value.shape(), 0.0);
  if (nodes_[loss.index].requires_grad) grads_[loss.index][0] = 1.0;

  for (std::size_t i = loss.index + 1; i-- > 0;) {
    auto& node = nodes_[i];
    if (!node.requires_grad || !node.backward) continue;
    BackwardContext ctx(*this, static_cast<std::uint32_t>(i));
    node.backward(ctx);
  }

  Gradients out;
  out.reserve(store.size());
  for (std::size_t p = 0; p < store.size(); ++p) {
    const bool bound = p < parameter_nodes_.size() && parameter_nodes_[p];
    if (bound && parameter_nodes_[p]->index <= loss.index) {
      const auto& g = grads_[parameter_nodes_[p]->index];
      require_finite(g, "backward");
      out.push_back(g);
    } else {
      out.emplace_back(store.value(p).shape(), 0.0);
    }
  }
  return out;
}

const Tensor& Graph::grad(NodeId id) const {
  if (grads_.size() != nodes_.size()) throw ContractError("grad() requested before backward()");
  return grads_.at(id.index);
}

}  // namespace equalizer::numerics
