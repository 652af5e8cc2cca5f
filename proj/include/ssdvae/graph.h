// SPDX-License-Identifier: Apache-2.0
//
// Reverse-mode differentiation over a per-step recorded tape. A Graph is built
// during the forward pass, consumed by one backward pass and then discarded.
// Graphs are confined to the thread that builds them.

#ifndef SSDVAE_GRAPH_H_
#define SSDVAE_GRAPH_H_

#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "ssdvae/tensor.h"

namespace ssdvae {

class Graph;

// Handle to a node of a Graph. Cheap to copy; only valid while its Graph lives.
class Var {
 public:
  Var() = default;
  Var(Graph* g, int id) : graph_(g), id_(id) {}

  bool valid() const { return graph_ != nullptr; }
  Graph* graph() const { return graph_; }
  int id() const { return id_; }

  const Matrix& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  double scalar() const;

 private:
  Graph* graph_ = nullptr;
  int id_ = -1;
};

class Graph {
 public:
  using BackwardFn = std::function<void(Graph&, int)>;

  // With record_gradients=false no backward closures are kept; use it for
  // evaluation passes.
  explicit Graph(bool record_gradients = true) : recording_(record_gradients) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var constant(Matrix value);
  // Leaf bound to a parameter tensor. A tensor without requires_grad behaves as
  // a constant. Repeated calls for the same tensor return the same leaf.
  Var param(Tensor& t);

  // Runs the backward pass from a 1x1 loss.
  void backward(Var loss);

  // Gradient accumulated at the leaf for `t`, or nullptr if `t` never entered
  // the graph or received no gradient.
  const Matrix* grad_of(const Tensor& t) const;

  bool recording() const { return recording_; }
  size_t num_nodes() const { return nodes_.size(); }

  // Op-author interface.
  Var record(Matrix value, std::vector<int> inputs, BackwardFn fn, const char* op);
  const Matrix& value(int id) const { return nodes_[id].value; }
  const Matrix& grad(int id) const { return nodes_[id].grad; }
  bool needs_grad(int id) const { return nodes_[id].needs_grad; }
  // Zero-initialised gradient buffer for node `id`.
  Matrix& grad_buffer(int id);

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    std::vector<int> inputs;
    BackwardFn backward;
    const char* op = "";
    bool needs_grad = false;
    bool has_grad = false;
  };

  std::vector<Node> nodes_;
  std::unordered_map<const Tensor*, int> leaves_;
  bool recording_;
  bool consumed_ = false;
};

}  // namespace ssdvae

#endif  // SSDVAE_GRAPH_H_
