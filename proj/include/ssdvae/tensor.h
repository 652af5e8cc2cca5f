// SPDX-License-Identifier: Apache-2.0
//
// Dense row-major tensors and named parameter collections.

#ifndef SSDVAE_TENSOR_H_
#define SSDVAE_TENSOR_H_

#include <cstddef>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

namespace ssdvae {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

// Raised when a precondition on shapes, indices or argument ranges fails.
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Raised when a computation produces NaN or Inf.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A dense tensor of doubles. Storage is a row-major matrix whose column count
// is the last extent and whose row count is the product of the leading extents
// (1 for a rank-1 tensor).
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<size_t> shape, double fill = 0.0);
  Tensor(size_t rows, size_t cols, double fill = 0.0);
  static Tensor from_matrix(const Matrix& m);

  const std::vector<size_t>& shape() const { return shape_; }
  size_t size() const { return static_cast<size_t>(value_.size()); }
  size_t rows() const { return static_cast<size_t>(value_.rows()); }
  size_t cols() const { return static_cast<size_t>(value_.cols()); }

  Matrix& value() { return value_; }
  const Matrix& value() const { return value_; }
  std::span<double> data() { return {value_.data(), size()}; }
  std::span<const double> data() const { return {value_.data(), size()}; }

  bool requires_grad() const { return requires_grad_; }
  void set_requires_grad(bool on);
  bool has_grad() const { return has_grad_; }
  Matrix& grad();
  const Matrix& grad() const;
  void zero_grad();

  bool all_finite() const { return value_.allFinite(); }

 private:
  std::vector<size_t> shape_;
  Matrix value_;
  Matrix grad_;
  bool requires_grad_ = false;
  bool has_grad_ = false;
};

// Gradients aligned with a ParameterSet's iteration order.
using GradientMap = std::vector<Matrix>;

// Named, ordered collection of trainable tensors. Iteration order is insertion
// order, so identical construction sequences give identical layouts.
class ParameterSet {
 public:
  ParameterSet() = default;
  ParameterSet(const ParameterSet&) = delete;
  ParameterSet& operator=(const ParameterSet&) = delete;
  ParameterSet(ParameterSet&&) = default;
  ParameterSet& operator=(ParameterSet&&) = default;

  // Returns a stable reference; throws ContractError on a duplicate name.
  Tensor& add(const std::string& name, Tensor t);

  size_t size() const { return tensors_.size(); }
  bool contains(const std::string& name) const { return index_.count(name) > 0; }
  size_t index_of(const std::string& name) const;
  Tensor& at(size_t i) { return *tensors_[i]; }
  const Tensor& at(size_t i) const { return *tensors_[i]; }
  Tensor& at(const std::string& name) { return *tensors_[index_of(name)]; }
  const Tensor& at(const std::string& name) const { return *tensors_[index_of(name)]; }
  const std::string& name(size_t i) const { return names_[i]; }
  const std::vector<std::string>& names() const { return names_; }

  size_t total_elements() const;
  GradientMap zero_gradients() const;
  void zero_grad();

 private:
  std::vector<std::string> names_;
  std::vector<std::unique_ptr<Tensor>> tensors_;
  std::unordered_map<std::string, size_t> index_;
};

}  // namespace ssdvae

#endif  // SSDVAE_TENSOR_H_
