// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <functional>
#include <vector>

#include "doctest.h"
#include "ssdvae/graph.h"
#include "ssdvae/ops.h"
#include "ssdvae/optim.h"
#include "ssdvae/rng.h"
#include "ssdvae/seqnets.h"

using namespace ssdvae;

namespace {

Tensor random_tensor(size_t r, size_t c, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(r, c);
  for (double& v : t.data()) v = lo + (hi - lo) * rng.uniform();
  t.set_requires_grad(true);
  return t;
}

// Weighted sum so every output entry gets a distinct upstream gradient.
Var weighted_sum(Graph& g, Var y) {
  Matrix w(y.rows(), y.cols());
  for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = 0.3 + 0.1 * static_cast<double>(i % 7);
  return sum(cmul(y, g.constant(w)));
}

double check_op(const std::function<Var(Graph&, Var, Var)>& op, size_t r, size_t c, double lo = -1.0,
                double hi = 1.0) {
  Rng rng(11);
  ParameterSet ps;
  Tensor& a = ps.add("a", random_tensor(r, c, rng, lo, hi));
  Tensor& b = ps.add("b", random_tensor(r, c, rng, lo, hi));
  auto loss = [&](Graph& g) { return weighted_sum(g, op(g, g.param(a), g.param(b))); };
  return finite_difference_check(loss, ps, 1e-5).max_relative_error();
}

}  // namespace

TEST_CASE("sum gives all-ones gradient") {
  ParameterSet ps;
  Tensor& w = ps.add("w", Tensor(2, 2, 0.7));
  w.set_requires_grad(true);
  Graph g;
  auto grads = backward_gradients(g, sum(g.param(w)), ps);
  CHECK(grads[0].isApprox(Matrix::Ones(2, 2)));
}

TEST_CASE("zero-scaled loss gives zero gradient") {
  ParameterSet ps;
  Tensor& w = ps.add("w", Tensor(2, 2, 0.7));
  w.set_requires_grad(true);
  Graph g;
  auto grads = backward_gradients(g, scale(sum(tanh(g.param(w))), 0.0), ps);
  CHECK(grads[0].isZero(0.0));
}

TEST_CASE("unreached parameters get zero gradient") {
  ParameterSet ps;
  Tensor& a = ps.add("a", Tensor(1, 3, 1.0));
  Tensor& b = ps.add("b", Tensor(2, 2, 1.0));
  a.set_requires_grad(true);
  b.set_requires_grad(true);
  Graph g;
  auto grads = backward_gradients(g, sum(g.param(a)), ps);
  REQUIRE(grads.size() == 2);
  CHECK(grads[1].rows() == 2);
  CHECK(grads[1].isZero(0.0));
}

TEST_CASE("non-scalar loss is rejected") {
  ParameterSet ps;
  Tensor& a = ps.add("a", Tensor(2, 2, 1.0));
  a.set_requires_grad(true);
  Graph g;
  CHECK_THROWS_AS(backward_gradients(g, g.param(a), ps), ContractError);
}

TEST_CASE("NaN names the producing op") {
  ParameterSet ps;
  Tensor& a = ps.add("a", Tensor(1, 2, -1.0));
  a.set_requires_grad(true);
  Graph g;
  try {
    (void)sum(log(g.param(a)));
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("log") != std::string::npos);
  }
}

TEST_CASE("primitive gradients match central differences") {
  const double tol = 1e-4;
  CHECK(check_op([](Graph&, Var a, Var b) { return add(a, b); }, 3, 4) < tol);
  CHECK(check_op([](Graph&, Var a, Var b) { return sub(a, b); }, 3, 4) < tol);
  CHECK(check_op([](Graph&, Var a, Var b) { return cmul(a, b); }, 3, 4) < tol);
  CHECK(check_op([](Graph&, Var a, Var) { return tanh(a); }, 3, 4) < tol);
  CHECK(check_op([](Graph&, Var a, Var) { return sigmoid(a); }, 3, 4) < tol);
  CHECK(check_op([](Graph&, Var a, Var) { return exp(a); }, 3, 4) < tol);
  CHECK(check_op([](Graph&, Var a, Var) { return log(a); }, 3, 4, 0.5, 2.0) < tol);
  CHECK(check_op([](Graph&, Var a, Var) { return softplus(a); }, 3, 4) < tol);
  CHECK(check_op([](Graph&, Var a, Var) { return softmax_rows(a); }, 3, 4) < tol);
  CHECK(check_op([](Graph&, Var a, Var) { return log_softmax_rows(a); }, 3, 4) < tol);
  CHECK(check_op([](Graph&, Var a, Var) { return scale(a, -2.5); }, 3, 4) < tol);
  CHECK(check_op([](Graph&, Var a, Var) { return add_scalar(a, 3.0); }, 3, 4) < tol);
  CHECK(check_op([](Graph&, Var a, Var) { return row_sum(a); }, 3, 4) < tol);
  CHECK(check_op([](Graph&, Var a, Var) { return row_norm(a); }, 3, 4) < tol);
  CHECK(check_op([](Graph&, Var a, Var) { return sum(a); }, 3, 4) < tol);
  CHECK(check_op([](Graph&, Var a, Var b) { return matmul(a, slice_rows(concat_rows(std::vector<Var>{b, b}), 0, 4)); },
                 3, 4) < tol);
  CHECK(check_op([](Graph&, Var a, Var b) { return linear(a, b); }, 3, 4) < tol);
  CHECK(check_op([](Graph&, Var a, Var b) { return concat_cols(std::vector<Var>{a, b}); }, 3, 4) < tol);
  CHECK(check_op([](Graph&, Var a, Var b) { return concat_rows(std::vector<Var>{a, b}); }, 3, 4) < tol);
  CHECK(check_op([](Graph&, Var a, Var) { return slice_cols(a, 1, 2); }, 3, 4) < tol);
  CHECK(check_op([](Graph&, Var a, Var) { return slice_rows(a, 1, 2); }, 3, 4) < tol);
  CHECK(check_op([](Graph&, Var a, Var b) { return add_row(a, slice_rows(b, 0, 1)); }, 3, 4) < tol);
  CHECK(check_op([](Graph&, Var a, Var b) { return mul_col(a, slice_cols(b, 0, 1)); }, 3, 4) < tol);
  CHECK(check_op([](Graph&, Var a, Var) { return pick(a, std::vector<int>{0, -1, 3}); }, 3, 4) < tol);
  CHECK(check_op([](Graph&, Var a, Var b) { return lookup(a, std::vector<int>{2, 0, 2, 1}) + b; }, 4, 4) < tol);
  CHECK(check_op([](Graph&, Var a, Var b) { return block_dot(a, slice_cols(b, 0, 2)); }, 3, 4) < tol);
  CHECK(check_op([](Graph&, Var a, Var b) { return block_combine(a, slice_cols(b, 0, 2)); }, 3, 4) < tol);
}

TEST_CASE("matmul gradient") {
  Rng rng(3);
  ParameterSet ps;
  Tensor& a = ps.add("a", random_tensor(3, 4, rng));
  Tensor& b = ps.add("b", random_tensor(4, 2, rng));
  auto loss = [&](Graph& g) { return weighted_sum(g, matmul(g.param(a), g.param(b))); };
  CHECK(finite_difference_check(loss, ps, 1e-5).max_relative_error() < 1e-4);
}

TEST_CASE("finite-difference check: quadratic and constant losses") {
  Rng rng(5);
  ParameterSet ps;
  Tensor& w = ps.add("w", random_tensor(3, 4, rng));
  auto quad = [&](Graph& g) { Var p = g.param(w); return scale(sum(cmul(p, p)), 0.5); };
  CHECK(finite_difference_check(quad, ps, 1e-5).max_relative_error() < 1e-8);
  auto constant = [&](Graph& g) { return sum(g.constant(Matrix::Constant(2, 2, 3.0))); };
  CHECK(finite_difference_check(constant, ps, 1e-5).max_relative_error() == 0.0);
}

TEST_CASE("finite-difference check rejects stochastic losses") {
  Rng rng(5);
  ParameterSet ps;
  Tensor& w = ps.add("w", random_tensor(2, 2, rng));
  Rng noise(9);
  auto loss = [&](Graph& g) { return add_scalar(sum(g.param(w)), noise.uniform()); };
  CHECK_THROWS_AS(finite_difference_check(loss, ps, 1e-5), ContractError);
}

TEST_CASE("adam single step closed form") {
  ParameterSet ps;
  Tensor& t = ps.add("theta", Tensor(1, 1, 0.0));
  t.set_requires_grad(true);
  OptimizerState st = OptimizerState::for_params(ps, 1e-3);
  GradientMap g{Matrix::Constant(1, 1, 1.0)};
  adam_step(ps, g, st);
  CHECK(st.step == 1);
  CHECK(t.value()(0, 0) == doctest::Approx(-0.000999999).epsilon(1e-6));
}

TEST_CASE("adam with zero gradients is the identity") {
  Rng rng(2);
  ParameterSet ps;
  Tensor& t = ps.add("w", random_tensor(3, 3, rng));
  const Matrix before = t.value();
  OptimizerState st = OptimizerState::for_params(ps, 1e-2);
  for (int i = 0; i < 5; ++i) adam_step(ps, ps.zero_gradients(), st);
  CHECK(t.value() == before);
  CHECK(st.first_moment[0].isZero(0.0));
  CHECK(st.second_moment[0].isZero(0.0));

  // Also with nonzero moments.
  adam_step(ps, GradientMap{Matrix::Ones(3, 3)}, st);
  CHECK(t.value() != before);
  const Matrix mid = t.value();
  adam_step(ps, ps.zero_gradients(), st);
  CHECK(t.value() == mid);
}

TEST_CASE("adam shape mismatch") {
  ParameterSet ps;
  ps.add("w", Tensor(2, 2)).set_requires_grad(true);
  OptimizerState st = OptimizerState::for_params(ps, 1e-3);
  CHECK_THROWS_AS(adam_step(ps, GradientMap{Matrix::Ones(3, 2)}, st), ContractError);
  CHECK_THROWS_AS(adam_step(ps, GradientMap{}, st), ContractError);
}

TEST_CASE("adam is deterministic") {
  auto run = [] {
    Rng rng(42);
    ParameterSet ps;
    Tensor& w = ps.add("w", random_tensor(4, 3, rng));
    OptimizerState st = OptimizerState::for_params(ps, 1e-2);
    for (int i = 0; i < 20; ++i) {
      Graph g;
      Var p = g.param(w);
      auto grads = backward_gradients(g, sum(tanh(cmul(p, p))), ps);
      adam_step(ps, grads, st);
    }
    return Matrix(w.value());
  };
  CHECK(run() == run());
}

TEST_CASE("clip global norm") {
  GradientMap g{Matrix::Constant(1, 1, 6.0), Matrix::Constant(1, 1, 8.0)};
  CHECK(clip_global_norm(g, 5.0) == doctest::Approx(10.0));
  CHECK(g[0](0, 0) == doctest::Approx(3.0));
  CHECK(g[1](0, 0) == doctest::Approx(4.0));

  GradientMap h{Matrix::Constant(1, 1, 3.0)};
  CHECK(clip_global_norm(h, 5.0) == doctest::Approx(3.0));
  CHECK(h[0](0, 0) == 3.0);

  GradientMap empty;
  CHECK(clip_global_norm(empty, 5.0) == 0.0);
  CHECK_THROWS_AS(clip_global_norm(h, 0.0), ContractError);

  Rng rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    GradientMap r{Matrix::Random(3, 4) * (rng.uniform() * 100.0), Matrix::Random(2, 2)};
    const double max_norm = 0.1 + 10.0 * rng.uniform();
    clip_global_norm(r, max_norm);
    CHECK(global_norm(r) <= max_norm + 1e-9);
  }
}

TEST_CASE("graph ops are deterministic") {
  Rng rng(4);
  Tensor a = random_tensor(3, 4, rng);
  auto once = [&] {
    Graph g;
    Var x = g.param(a);
    return Matrix(log_softmax_rows(linear(tanh(x), x)).value());
  };
  CHECK(once() == once());
}

TEST_CASE("init_weight bounds") {
  Rng rng(1);
  Tensor w = init_weight(10, 16, rng);
  CHECK(w.value().cwiseAbs().maxCoeff() <= 0.25);
  CHECK(w.value().cwiseAbs().maxCoeff() > 0.2);
}
