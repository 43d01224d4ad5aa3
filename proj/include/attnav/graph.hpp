#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "attnav/tensor.hpp"

namespace attnav {

class Graph;

// Handle to a node recorded on a Graph. Cheap to copy; only valid while the
// owning graph is alive.
struct Var {
  Graph* graph = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t size() const { return value().size(); }
  double item() const { return value().item(); }
};

// Reverse-mode tape. Nodes are appended in evaluation order, so ids are a
// topological order by construction. A graph is single-threaded.
class Graph {
 public:
  // Propagates the node's output gradient into its parents' buffers.
  using BackwardFn = std::function<void(Graph&, std::size_t self)>;

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var leaf(Tensor value, bool requires_grad = false);
  Var constant(Tensor value) { return leaf(std::move(value), false); }

  // Used by op implementations. The node requires grad iff a parent does;
  // otherwise the backward function is dropped.
  Var record(Tensor value, std::vector<std::size_t> parents, BackwardFn backward);

  // Fills gradients of every node reachable from root. Previous gradients are
  // discarded first, so a graph can be differentiated several times.
  void backward(Var root);

  // Gradient of a node from the last backward(); zeros if it was not reached.
  Tensor grad(Var v) const;

  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  std::size_t size() const { return nodes_.size(); }

  // Gradient of the node being processed (read) and its parents (accumulate).
  // grad_in is empty for nodes that do not require grad.
  std::span<const double> grad_out(std::size_t id) const { return nodes_[id].grad; }
  std::span<double> grad_in(std::size_t id);

 private:
  struct Node {
    Tensor value;
    std::vector<std::size_t> parents;
    BackwardFn backward;
    bool requires_grad = false;
    std::vector<double> grad;
  };

  std::vector<Node> nodes_;
};

}  // namespace attnav
