// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"
#include "ssdvae/gumbel.h"
#include "ssdvae/ops.h"
#include "ssdvae/optim.h"

using namespace ssdvae;

namespace {

size_t argmax(const std::vector<double>& v) {
  return static_cast<size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

}  // namespace

TEST_CASE("closed-form noise values") {
  CHECK(gumbel_from_uniform(std::exp(-1.0)) == doctest::Approx(0.0).scale(1.0).epsilon(1e-15));
  CHECK(gumbel_from_uniform(std::exp(-std::exp(1.0))) == doctest::Approx(-1.0).epsilon(1e-14));
  CHECK(std::isfinite(gumbel_from_uniform(0.0)));
  CHECK(std::isfinite(gumbel_from_uniform(1.0)));
}

TEST_CASE("noise mean is the Euler-Mascheroni constant") {
  Rng rng(2024);
  const auto g = gumbel_noise(1000000, rng);
  double mean = 0.0;
  for (double x : g) mean += x;
  mean /= static_cast<double>(g.size());
  CHECK(std::abs(mean - 0.5772156649) < 0.01);
}

TEST_CASE("noise matrix is row-major fill of the scalar stream") {
  Rng a(5), b(5);
  Matrix m = gumbel_noise_matrix(2, 3, a);
  auto v = gumbel_noise(6, b);
  for (int i = 0; i < 6; ++i) CHECK(m.data()[i] == v[static_cast<size_t>(i)]);
}

TEST_CASE("symmetric logits give the uniform simplex") {
  const std::vector<double> zero(3, 0.0);
  for (double tau : {0.1, 0.5, 1.0, 5.0}) {
    auto s = gumbel_softmax_sample(zero, tau, zero);
    for (double p : s) CHECK(p == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  }
}

TEST_CASE("shift invariance") {
  Rng rng(3);
  std::vector<double> logits{0.3, -1.2, 2.0, 0.0};
  auto noise = gumbel_noise(4, rng);
  auto base = gumbel_softmax_sample(logits, 0.5, noise);
  for (double& l : logits) l += 17.5;
  auto shifted = gumbel_softmax_sample(logits, 0.5, noise);
  for (size_t i = 0; i < 4; ++i) CHECK(shifted[i] == doctest::Approx(base[i]).epsilon(1e-12));
}

TEST_CASE("non-finite logits are rejected") {
  std::vector<double> logits{0.0, std::numeric_limits<double>::quiet_NaN()};
  std::vector<double> noise{0.0, 0.0};
  CHECK_THROWS_AS(gumbel_softmax_sample(logits, 0.5, noise), ContractError);
  logits[1] = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(gumbel_softmax_sample(logits, 0.5, noise), ContractError);
  CHECK_THROWS_AS(gumbel_softmax_sample(noise, 0.0, noise), ContractError);
}

TEST_CASE("Gumbel-max frequencies") {
  const std::vector<double> logits{std::log(2.0), 0.0, 0.0};
  Rng rng(77);
  std::vector<double> counts(3, 0.0);
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    auto s = gumbel_softmax_sample(logits, 0.1, gumbel_noise(3, rng));
    counts[argmax(s)] += 1.0;
  }
  CHECK(std::abs(counts[0] / n - 0.5) < 0.01);
  CHECK(std::abs(counts[1] / n - 0.25) < 0.01);
  CHECK(std::abs(counts[2] / n - 0.25) < 0.01);
}

TEST_CASE("simplex, argmax and entropy properties") {
  Rng rng(9);
  for (int trial = 0; trial < 2000; ++trial) {
    const size_t F = 2 + rng.below(9);
    std::vector<double> logits(F);
    for (double& l : logits) l = 6.0 * rng.uniform() - 3.0;
    const auto noise = gumbel_noise(F, rng);
    std::vector<double> perturbed(F);
    for (size_t i = 0; i < F; ++i) perturbed[i] = logits[i] + noise[i];
    double prev = -1.0;
    for (double tau : {0.1, 0.5, 1.0, 5.0}) {
      auto s = gumbel_softmax_sample(logits, tau, noise);
      double total = 0.0;
      for (double p : s) {
        CHECK(p > 0.0);
        total += p;
      }
      CHECK(std::abs(total - 1.0) < 1e-9);
      CHECK(argmax(s) == argmax(perturbed));
      const double h = entropy(s);
      CHECK(h >= prev - 1e-12);
      prev = h;
    }
  }
}

TEST_CASE("entropy") {
  CHECK(entropy(std::vector<double>{0.25, 0.25, 0.25, 0.25}) == doctest::Approx(std::log(4.0)));
  CHECK(entropy(std::vector<double>{1.0, 0.0}) == 0.0);
}

TEST_CASE("relaxed draw gradient") {
  Rng rng(12);
  ParameterSet ps;
  Tensor& logits = ps.add("logits", Tensor(3, 5));
  for (double& v : logits.data()) v = 2.0 * rng.uniform() - 1.0;
  logits.set_requires_grad(true);
  const Matrix noise = gumbel_noise_matrix(3, 5, rng);
  Matrix w = Matrix::Random(3, 5);
  auto loss = [&](Graph& g) {
    Var s = gumbel_softmax(g.param(logits), noise, 0.5);
    return sum(cmul(s, g.constant(w)));
  };
  CHECK(finite_difference_check(loss, ps, 1e-5).max_relative_error() < 1e-4);

  Graph g(false);
  Matrix vals = gumbel_softmax(g.param(logits), noise, 0.5).value();
  for (Eigen::Index r = 0; r < 3; ++r) {
    std::vector<double> row(logits.value().row(r).data(), logits.value().row(r).data() + 5);
    std::vector<double> nz(noise.row(r).data(), noise.row(r).data() + 5);
    auto plain = gumbel_softmax_sample(row, 0.5, nz);
    for (Eigen::Index c = 0; c < 5; ++c) CHECK(vals(r, c) == doctest::Approx(plain[static_cast<size_t>(c)]));
  }
}

TEST_CASE("seeded streams replay") {
  Rng a(3, "gumbel", 4), b(3, "gumbel", 4), c(3, "gumbel", 5);
  auto x = gumbel_noise(10, a);
  CHECK(x == gumbel_noise(10, b));
  CHECK(x != gumbel_noise(10, c));
}
