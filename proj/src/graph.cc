// SPDX-License-Identifier: Apache-2.0

#include "ssdvae/graph.h"

#include <string>

namespace ssdvae {

const Matrix& Var::value() const {
  if (!graph_) throw ContractError("use of an unbound Var");
  return graph_->value(id_);
}

double Var::scalar() const {
  const Matrix& v = value();
  if (v.rows() != 1 || v.cols() != 1) throw ContractError("Var is not a scalar");
  return v(0, 0);
}

Var Graph::constant(Matrix value) {
  return record(std::move(value), {}, nullptr, "constant");
}

Var Graph::param(Tensor& t) {
  auto it = leaves_.find(&t);
  if (it != leaves_.end()) return Var(this, it->second);
  if (!t.all_finite()) throw NumericError("parameter holds non-finite values");
  Node n;
  n.value = t.value();
  n.op = "param";
  n.needs_grad = recording_ && t.requires_grad();
  nodes_.push_back(std::move(n));
  const int id = static_cast<int>(nodes_.size()) - 1;
  leaves_.emplace(&t, id);
  return Var(this, id);
}

Var Graph::record(Matrix value, std::vector<int> inputs, BackwardFn fn, const char* op) {
  if (!value.allFinite()) throw NumericError(std::string("non-finite values produced by ") + op);
  Node n;
  n.value = std::move(value);
  n.op = op;
  if (recording_) {
    for (int in : inputs) n.needs_grad = n.needs_grad || nodes_[in].needs_grad;
  }
  if (n.needs_grad) {
    n.inputs = std::move(inputs);
    n.backward = std::move(fn);
  }
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Matrix& Graph::grad_buffer(int id) {
  Node& n = nodes_[id];
  if (!n.has_grad) {
    n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
    n.has_grad = true;
  }
  return n.grad;
}

void Graph::backward(Var loss) {
  if (loss.graph() != this) throw ContractError("loss belongs to a different graph");
  const Matrix& lv = value(loss.id());
  if (lv.rows() != 1 || lv.cols() != 1) throw ContractError("backward requires a scalar loss");
  if (!recording_) throw ContractError("backward on a graph built without gradient recording");
  if (consumed_) throw ContractError("backward already ran on this graph");
  consumed_ = true;
  if (!nodes_[loss.id()].needs_grad) return;
  grad_buffer(loss.id())(0, 0) = 1.0;
  for (int id = loss.id(); id >= 0; --id) {
    Node& n = nodes_[id];
    if (!n.has_grad || !n.backward) continue;
    if (!n.grad.allFinite()) {
      throw NumericError(std::string("non-finite gradient reached ") + n.op);
    }
    n.backward(*this, id);
  }
}

const Matrix* Graph::grad_of(const Tensor& t) const {
  auto it = leaves_.find(&t);
  if (it == leaves_.end()) return nullptr;
  const Node& n = nodes_[it->second];
  if (!n.has_grad) return nullptr;
  if (!n.grad.allFinite()) throw NumericError("non-finite gradient at parameter leaf");
  return &n.grad;
}

}  // namespace ssdvae
