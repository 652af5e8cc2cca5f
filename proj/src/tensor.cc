// SPDX-License-Identifier: Apache-2.0

#include "ssdvae/tensor.h"

#include <numeric>

namespace ssdvae {

namespace {

size_t leading_rows(const std::vector<size_t>& shape) {
  if (shape.empty()) throw ContractError("tensor shape must have at least one extent");
  size_t rows = 1;
  for (size_t i = 0; i + 1 < shape.size(); ++i) rows *= shape[i];
  for (size_t e : shape) {
    if (e == 0) throw ContractError("tensor extents must be positive");
  }
  return rows;
}

}  // namespace

Tensor::Tensor(std::vector<size_t> shape, double fill) : shape_(std::move(shape)) {
  const size_t rows = leading_rows(shape_);
  value_ = Matrix::Constant(static_cast<Eigen::Index>(rows),
                            static_cast<Eigen::Index>(shape_.back()), fill);
}

Tensor::Tensor(size_t rows, size_t cols, double fill) : Tensor(std::vector<size_t>{rows, cols}, fill) {}

Tensor Tensor::from_matrix(const Matrix& m) {
  Tensor t(static_cast<size_t>(m.rows()), static_cast<size_t>(m.cols()));
  t.value_ = m;
  return t;
}

void Tensor::set_requires_grad(bool on) {
  requires_grad_ = on;
  if (on && !has_grad_) {
    grad_ = Matrix::Zero(value_.rows(), value_.cols());
    has_grad_ = true;
  }
}

Matrix& Tensor::grad() {
  if (!has_grad_) {
    grad_ = Matrix::Zero(value_.rows(), value_.cols());
    has_grad_ = true;
  }
  return grad_;
}

const Matrix& Tensor::grad() const {
  if (!has_grad_) throw ContractError("tensor has no gradient buffer");
  return grad_;
}

void Tensor::zero_grad() {
  if (has_grad_) grad_.setZero();
}

Tensor& ParameterSet::add(const std::string& name, Tensor t) {
  if (index_.count(name)) throw ContractError("duplicate parameter name: " + name);
  t.set_requires_grad(true);
  index_.emplace(name, tensors_.size());
  names_.push_back(name);
  tensors_.push_back(std::make_unique<Tensor>(std::move(t)));
  return *tensors_.back();
}

size_t ParameterSet::index_of(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ContractError("unknown parameter: " + name);
  return it->second;
}

size_t ParameterSet::total_elements() const {
  return std::accumulate(tensors_.begin(), tensors_.end(), size_t{0},
                         [](size_t acc, const auto& t) { return acc + t->size(); });
}

GradientMap ParameterSet::zero_gradients() const {
  GradientMap out;
  out.reserve(tensors_.size());
  for (const auto& t : tensors_) out.push_back(Matrix::Zero(t->value().rows(), t->value().cols()));
  return out;
}

void ParameterSet::zero_grad() {
  for (auto& t : tensors_) t->zero_grad();
}

}  // namespace ssdvae
