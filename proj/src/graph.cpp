#include "attnav/graph.hpp"

#include <algorithm>

#include "attnav/errors.hpp"

namespace attnav {

const Tensor& Var::value() const { return graph->value(id); }

Var Graph::leaf(Tensor value, bool requires_grad) {
  Node node;
  node.requires_grad = requires_grad || value.requires_grad();
  node.value = std::move(value);
  nodes_.push_back(std::move(node));
  return Var{this, nodes_.size() - 1};
}

Var Graph::record(Tensor value, std::vector<std::size_t> parents, BackwardFn backward) {
  Node node;
  node.value = std::move(value);
  node.requires_grad = std::any_of(parents.begin(), parents.end(),
                                   [this](std::size_t p) { return nodes_[p].requires_grad; });
  if (node.requires_grad) {
    node.parents = std::move(parents);
    node.backward = std::move(backward);
  }
  nodes_.push_back(std::move(node));
  return Var{this, nodes_.size() - 1};
}

std::span<double> Graph::grad_in(std::size_t id) {
  Node& node = nodes_[id];
  if (!node.requires_grad) return {};
  if (node.grad.empty()) node.grad.assign(node.value.size(), 0.0);
  return node.grad;
}

void Graph::backward(Var root) {
  if (root.graph != this) throw ContractError("backward root belongs to another graph");
  if (root.size() != 1) {
    throw ContractError("backward root must be scalar, got shape " + shape_string(root.shape()));
  }
  for (Node& node : nodes_) node.grad.clear();
  if (!nodes_[root.id].requires_grad) return;
  nodes_[root.id].grad.assign(1, 1.0);
  for (std::size_t id = root.id + 1; id-- > 0;) {
    Node& node = nodes_[id];
    if (node.grad.empty() || !node.backward) continue;
    node.backward(*this, id);
  }
}

Tensor Graph::grad(Var v) const {
  const Node& node = nodes_[v.id];
  if (node.grad.empty()) return Tensor(node.value.shape(), 0.0);
  return Tensor(node.value.shape(), node.grad);
}

}  // namespace attnav
