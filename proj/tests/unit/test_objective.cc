// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <vector>

#include "doctest.h"
#include "ssdvae/gumbel.h"
#include "ssdvae/model.h"
#include "ssdvae/objective.h"
#include "ssdvae/ops.h"
#include "ssdvae/optim.h"
#include "toy.h"

using namespace ssdvae;

namespace {

std::vector<double> softmax(std::vector<double> x) {
  double z = 0.0;
  for (double& v : x) z += (v = std::exp(v));
  for (double& v : x) v /= z;
  return x;
}

}  // namespace

TEST_CASE("reconstruction term") {
  const std::vector<double> uniform(4, std::log(0.1));
  CHECK(reconstruction_loss(uniform) == doctest::Approx(4.0 * std::log(10.0)));
  CHECK(reconstruction_loss(uniform) == doctest::Approx(9.2103).epsilon(1e-5));
  CHECK(reconstruction_loss(std::vector<double>{0.0, 0.0, 0.0}) == 0.0);
  Graph g(false);
  Matrix lp(3, 1);
  lp << -1.0, -2.5, -0.25;
  CHECK(reconstruction_loss(g.constant(lp)).scalar() == doctest::Approx(3.75));
}

TEST_CASE("entropy term") {
  const std::vector<std::vector<double>> two_uniform(2, std::vector<double>(4, 0.25));
  CHECK(entropy_regularizer(two_uniform) == doctest::Approx(2.0 * std::log(4.0)));
  CHECK(entropy_regularizer(two_uniform) == doctest::Approx(2.7726).epsilon(1e-4));
  const auto peaked = softmax({10, 0, 0, 0});
  CHECK(entropy_regularizer({peaked}) == doctest::Approx(1.50e-3).epsilon(0.01));

  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const size_t M = 1 + rng.below(4), F = 2 + rng.below(6);
    Matrix gammas(1, static_cast<Eigen::Index>(F));
    std::vector<Var> vs;
    Graph g(false);
    for (size_t m = 0; m < M; ++m) {
      for (Eigen::Index k = 0; k < gammas.cols(); ++k) gammas(0, k) = 8.0 * rng.uniform() - 4.0;
      vs.push_back(g.constant(gammas));
    }
    const double lq = entropy_regularizer(vs).scalar();
    CHECK(lq >= 0.0);
    CHECK(lq <= static_cast<double>(M) * std::log(static_cast<double>(F)) + 1e-12);
  }

  // Batched form agrees with the plain form.
  Graph g(false);
  Matrix gm(1, 4);
  gm << 10, 0, 0, 0;
  CHECK(entropy_regularizer(std::vector<Var>{g.constant(gm)}).scalar() ==
        doctest::Approx(entropy_regularizer({peaked})).epsilon(1e-12));
}

TEST_CASE("classification term") {
  const std::vector<std::vector<double>> uniform(2, std::vector<double>(4, 0.25));
  CHECK(classification_loss(uniform, std::vector<int>{-1, -1}) == 0.0);
  CHECK(classification_loss(uniform, std::vector<int>{2, -1}) == doctest::Approx(std::log(4.0)));
  const auto p = softmax({2, 0, 0, 0});
  CHECK(classification_loss({p}, std::vector<int>{0}) == doctest::Approx(std::log(1.0 + 3.0 * std::exp(-2.0))));
  CHECK(classification_loss({p}, std::vector<int>{0}) == doctest::Approx(0.3407).epsilon(1e-4));

  Graph g(false);
  Matrix gm(2, 4);
  gm << 2, 0, 0, 0, 1, 1, 1, 1;
  std::vector<std::vector<int>> obs{{0, -1}};
  CHECK(classification_loss(std::vector<Var>{g.constant(gm)}, obs).scalar() ==
        doctest::Approx(std::log(1.0 + 3.0 * std::exp(-2.0))));
}

TEST_CASE("classification term ignores unobserved events") {
  Rng rng(4);
  Graph g(false);
  Matrix a = Matrix::Random(3, 5), b = Matrix::Random(3, 5);
  std::vector<std::vector<int>> obs{{1, -1, 4}, {-1, -1, -1}};
  const double base = classification_loss(std::vector<Var>{g.constant(a), g.constant(b)}, obs).scalar();
  for (int trial = 0; trial < 10; ++trial) {
    Matrix a2 = a;
    a2.row(1) = Matrix::Random(1, 5) * 10.0;
    Matrix b2 = Matrix::Random(3, 5) * 10.0;
    CHECK(classification_loss(std::vector<Var>{g.constant(a2), g.constant(b2)}, obs).scalar() == base);
  }
}

TEST_CASE("weighted combination") {
  CHECK(total_loss(9.2103, 2.7726, 1.3863, 0.0, 0.0) == 9.2103);
  CHECK(total_loss(9.2103, 2.7726, 1.3863, 0.1, 0.1) == doctest::Approx(9.0717).epsilon(1e-5));
  CHECK(total_loss(5.0, 2.0, 1.0, 0.1, 0.1) < total_loss(5.0, 1.0, 1.0, 0.1, 0.1));
  CHECK_THROWS_AS(total_loss(1.0, 1.0, 1.0, -0.1, 0.1), ContractError);
  CHECK_THROWS_AS(total_loss(1.0, 1.0, 1.0, 0.1, -0.1), ContractError);
  Graph g(false);
  auto c = [&](double v) { return g.constant(Matrix::Constant(1, 1, v)); };
  CHECK(total_loss(c(9.2103), c(2.7726), c(1.3863), 0.1, 0.1).scalar() == doctest::Approx(9.0717).epsilon(1e-5));
  CHECK_THROWS_AS(total_loss(c(1), c(1), c(1), -1.0, 0.0), ContractError);
}

TEST_CASE("uniform prior constant shifts the objective without changing gradients") {
  CHECK(uniform_prior_log_constant(5, 10) == doctest::Approx(-5.0 * std::log(10.0)));
  Config c = toy::config(4, 2);
  FrameVae model(c, 9);
  Rng rng(1);
  randomize_parameters(model.params(), 0.5, rng);
  EncodedDocument doc{{4, 5, 6, 7, 8, 4, 5, 6}, {1, 3}, 2};
  BatchInputs in;
  in.docs = {&doc};
  in.masks = {ObservationMask{{1, -1}}};
  in.noise = {{gumbel_noise_matrix(1, 4, rng), gumbel_noise_matrix(1, 4, rng)}};
  Graph g1, g2;
  BatchOutput o1 = model.batch_loss(g1, in);
  const double shift = uniform_prior_log_constant(2, 4);
  Var shifted = add_scalar(model.batch_loss(g2, in).loss, -shift);
  CHECK(shifted.scalar() - o1.loss.scalar() == doctest::Approx(-shift));
  auto a = backward_gradients(g1, o1.loss, model.params());
  auto b = backward_gradients(g2, shifted, model.params());
  for (size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("objective is deterministic and its breakdown is consistent") {
  Config c = toy::config(4, 2);
  FrameVae model(c, 9);
  Rng rng(2);
  EncodedDocument d1{{4, 5, 6, 7, 8, 4, 5, 6}, {1, 3}, 2}, d2{{5, 5, 6, 6, 7, 7, 8, 8}, {0, -1}, 2};
  BatchInputs in;
  in.docs = {&d1, &d2};
  in.masks = {ObservationMask{{1, -1}}, ObservationMask{{0, -1}}};
  in.noise = {{gumbel_noise_matrix(2, 4, rng), gumbel_noise_matrix(2, 4, rng)}};
  Graph g1(false), g2(false);
  BatchOutput a = model.batch_loss(g1, in), b = model.batch_loss(g2, in);
  CHECK(a.loss.scalar() == b.loss.scalar());
  CHECK(a.sums.l_w >= 0.0);
  CHECK(a.sums.l_c >= 0.0);
  CHECK(a.sums.token_count == 16);
  CHECK(a.loss.scalar() ==
        doctest::Approx(total_loss(a.sums.l_w, a.sums.l_q, a.sums.l_c, 0.1, 0.1) / 2.0).epsilon(1e-12));
  CHECK(a.doc_nll[0] + a.doc_nll[1] == doctest::Approx(a.sums.l_w).epsilon(1e-12));

  BatchInputs none = in;
  none.masks.clear();
  Graph g3(false);
  CHECK(model.batch_loss(g3, none).sums.l_c == 0.0);
}

TEST_CASE("full objective gradients match finite differences") {
  for (size_t samples : {1, 2}) {
    Config c = toy::config(4, 2);
    c.train.samples = samples;
    FrameVae model(c, 9);
    Rng rng(3);
    randomize_parameters(model.params(), 1.0, rng);
    EncodedDocument d1{{4, 5, 6, 7, 8, 4, 5, 6}, {1, 3}, 2}, d2{{5, 5, 6, 6, 7, 7, 8, 8}, {0, 2}, 2};
    BatchInputs in;
    in.docs = {&d1, &d2};
    in.masks = {ObservationMask{{1, -1}}, ObservationMask{{0, 2}}};
    for (size_t s = 0; s < samples; ++s) in.noise.push_back({gumbel_noise_matrix(2, 4, rng), gumbel_noise_matrix(2, 4, rng)});
    auto loss = [&](Graph& g) { return model.batch_loss(g, in).loss; };
    CHECK(finite_difference_check(loss, model.params(), 1e-5).max_relative_error() < 1e-4);
  }
}
