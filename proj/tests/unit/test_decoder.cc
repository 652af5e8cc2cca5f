// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <vector>

#include "doctest.h"
#include "ssdvae/decoder.h"
#include "ssdvae/gumbel.h"
#include "ssdvae/model.h"
#include "ssdvae/objective.h"
#include "ssdvae/ops.h"
#include "ssdvae/optim.h"
#include "toy.h"

using namespace ssdvae;

namespace {

struct Weights {
  ParameterSet ps;
  DecoderWeights w;
  Weights(size_t F, size_t d_e, size_t dz, size_t V, uint64_t seed) {
    Rng rng(seed);
    w.frames = EmbeddingTable::create(ps, "frames", F, d_e, rng);
    w.w_in = &ps.add("w_in", init_uniform(d_e, dz, 1.0, rng));
    w.w_out = &ps.add("w_out", init_uniform(V, d_e, 1.0, rng));
    w.w_concat = &ps.add("w_concat", init_uniform(d_e, 2 * d_e, 1.0, rng));
  }
};

Matrix random_simplex(Eigen::Index rows, Eigen::Index F, Rng& rng) {
  Matrix m(rows, F);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < F; ++c) m(r, c) = 0.05 + rng.uniform();
    m.row(r) /= m.row(r).sum();
  }
  return m;
}

}  // namespace

TEST_CASE("frame context selects, averages and mixes") {
  Rng rng(1);
  Matrix E = Matrix::Random(3, 2);
  Matrix onehot = Matrix::Zero(1, 3);
  onehot(0, 1) = 1.0;
  CHECK(frame_context(onehot, E).row(0) == E.row(1));
  Matrix uniform = Matrix::Constant(1, 3, 1.0 / 3.0);
  CHECK(frame_context(uniform, E).row(0).isApprox(E.colwise().mean(), 1e-15));
  Matrix s = random_simplex(4, 3, rng);
  Matrix ctx = frame_context(s, E);
  for (Eigen::Index m = 0; m < 4; ++m) {
    for (Eigen::Index d = 0; d < 2; ++d) {
      double acc = 0.0;
      for (Eigen::Index k = 0; k < 3; ++k) acc += s(m, k) * E(k, d);
      CHECK(std::abs(ctx(m, d) - acc) < 1e-12);
      // Convex hull: inside the per-coordinate range of E's rows.
      CHECK(ctx(m, d) >= E.col(d).minCoeff() - 1e-12);
      CHECK(ctx(m, d) <= E.col(d).maxCoeff() + 1e-12);
    }
  }
  CHECK_THROWS_AS(frame_context(Matrix::Zero(1, 4), E), ContractError);

  // Batched form matches the single-document form.
  ParameterSet ps;
  Rng init(2);
  EmbeddingTable table = EmbeddingTable::create(ps, "frames", 3, 2, init);
  Graph g(false);
  std::vector<Var> samples{g.constant(s.row(0)), g.constant(s.row(1))};
  Matrix batched = frame_context(samples, table).value();
  Matrix single = frame_context(Matrix(s.topRows(2)), table.weights->value());
  CHECK(batched.leftCols(2).isApprox(single.row(0), 1e-15));
  CHECK(batched.rightCols(2).isApprox(single.row(1), 1e-15));
}

TEST_CASE("zero weights give the uniform token distribution") {
  Weights t(3, 2, 4, 7, 1);
  t.w.w_in->value().setZero();
  t.w.w_out->value().setZero();
  TokenDistribution d = decode_token_step(t.w, Matrix::Random(2, 2), std::vector<double>{0.3, -0.2, 0.1, 0.5});
  for (double g : d.logits) CHECK(g == 0.0);
  for (double p : d.probs) CHECK(p == doctest::Approx(1.0 / 7.0));
}

TEST_CASE("single frame gets all the attention") {
  Weights t(3, 2, 4, 5, 2);
  Matrix EM = Matrix::Random(1, 2);
  TokenDistribution d = decode_token_step(t.w, EM, std::vector<double>{0.9, -1.0, 0.4, 0.0});
  REQUIRE(d.attention.size() == 1);
  CHECK(d.attention[0] == 1.0);
}

TEST_CASE("hand two-frame step") {
  Weights t(2, 2, 2, 3, 3);
  t.w.w_in->value() << 1.0, 0.5, -0.5, 2.0;
  t.w.w_out->value() << 1.0, -1.0, 0.5, 0.5, -2.0, 1.0;
  Matrix EM(2, 2);
  EM << 0.2, -0.4, 1.0, 0.3;
  const std::vector<double> z{0.6, -0.1};
  TokenDistribution d = decode_token_step(t.w, EM, z);
  // By hand.
  const double q0 = 1.0 * 0.6 + 0.5 * -0.1, q1 = -0.5 * 0.6 + 2.0 * -0.1;
  const double s0 = 0.2 * q0 - 0.4 * q1, s1 = 1.0 * q0 + 0.3 * q1;
  const double a0 = std::exp(s0) / (std::exp(s0) + std::exp(s1)), a1 = 1.0 - a0;
  const double c0 = a0 * 0.2 + a1 * 1.0, c1 = a0 * -0.4 + a1 * 0.3;
  const double u0 = std::tanh(q0) + std::tanh(c0), u1 = std::tanh(q1) + std::tanh(c1);
  const double g[3] = {u0 - u1, 0.5 * u0 + 0.5 * u1, -2.0 * u0 + u1};
  const double zsum = std::exp(g[0]) + std::exp(g[1]) + std::exp(g[2]);
  CHECK(d.attention[0] == doctest::Approx(a0).epsilon(1e-13));
  for (int i = 0; i < 3; ++i) {
    CHECK(d.logits[static_cast<size_t>(i)] == doctest::Approx(g[i]).epsilon(1e-13));
    CHECK(d.probs[static_cast<size_t>(i)] == doctest::Approx(std::exp(g[i]) / zsum).epsilon(1e-13));
  }
}

TEST_CASE("token distribution is a strictly positive simplex") {
  Rng rng(4);
  for (auto combine : {AttentionCombine::kAdditive, AttentionCombine::kConcat}) {
    Weights t(4, 3, 5, 9, 4);
    t.w.combine = combine;
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<double> z(5);
      for (double& v : z) v = 2.0 * rng.uniform() - 1.0;
      TokenDistribution d = decode_token_step(t.w, Matrix::Random(3, 3), z);
      double total = 0.0;
      for (double p : d.probs) {
        CHECK(p > 0.0);
        total += p;
      }
      CHECK(std::abs(total - 1.0) < 1e-9);
    }
  }
  Weights t(2, 2, 2, 3, 3);
  CHECK_THROWS_AS(decode_token_step(t.w, Matrix::Random(1, 2), std::vector<double>{NAN, 0.0}), ContractError);
}

TEST_CASE("teacher forcing matches stepwise chain-rule evaluation") {
  for (auto combine : {AttentionCombine::kAdditive, AttentionCombine::kConcat}) {
    Config c = toy::config(3, 2);
    c.model.attention = combine;
    FrameVae model(c, 8);
    Rng rng(5);
    randomize_parameters(model.params(), 0.8, rng);
    const Matrix f = random_simplex(2, 3, rng);
    const std::vector<int> a{4, 7, 5}, b{6, 4, 4};
    Graph g(false);
    std::vector<Var> samples{g.constant(Matrix(f.row(0))), g.constant(Matrix(f.row(1)))};
    Var one = frame_context(samples, model.decoder().frames);
    Var ctx = concat_rows(std::vector<Var>{one, one});
    TeacherForced tf = decode_teacher_forced(model.decoder(), model.decoder_rnn(), model.tokens(), ctx, {&a, &b});
    const Matrix per = tf.per_position();
    REQUIRE(per.rows() == 2);
    REQUIRE(per.cols() == 3);

    const Matrix EM = frame_context(f, model.decoder().frames.weights->value());
    for (int d = 0; d < 2; ++d) {
      const std::vector<int>& doc = d == 0 ? a : b;
      GruState st = zero_state(g, model.decoder_rnn(), 1);
      int prev = Vocabulary::kBegin;
      double total = 0.0;
      for (size_t t = 0; t < doc.size(); ++t) {
        const int ids[1] = {prev};
        Var z = unigru_decode_step(model.decoder_rnn(), model.tokens().lookup(g, ids), st);
        std::vector<double> zv(z.value().data(), z.value().data() + z.value().size());
        TokenDistribution dist = decode_token_step(model.decoder(), EM, zv);
        const double lp = std::log(dist.probs[static_cast<size_t>(doc[t])]);
        CHECK(per(d, static_cast<Eigen::Index>(t)) == doctest::Approx(lp).epsilon(1e-12));
        total += lp;
        prev = doc[t];
      }
      std::vector<double> row(per.row(d).data(), per.row(d).data() + 3);
      CHECK(reconstruction_loss(row) == doctest::Approx(-total).epsilon(1e-12));
    }
  }
}

TEST_CASE("zero-weight decoder scores log(1/V) everywhere") {
  Config c = toy::config(3, 1);
  FrameVae model(c, 10);
  toy::zero_params(model.params());
  const std::vector<int> doc{4, 5, 6, 7};
  Graph g(false);
  Var ctx = g.constant(Matrix::Zero(1, static_cast<Eigen::Index>(c.model.frame_dim)));
  TeacherForced tf = decode_teacher_forced(model.decoder(), model.decoder_rnn(), model.tokens(), ctx, {&doc});
  for (Eigen::Index t = 0; t < 4; ++t) CHECK(tf.per_position()(0, t) == doctest::Approx(-std::log(10.0)));
  const std::vector<int> empty;
  CHECK_THROWS_AS(decode_teacher_forced(model.decoder(), model.decoder_rnn(), model.tokens(), ctx, {&empty}),
                  ContractError);
}

TEST_CASE("document scores do not depend on batch order") {
  Config c = toy::config(3, 1);
  FrameVae model(c, 9);
  Rng rng(6);
  randomize_parameters(model.params(), 0.5, rng);
  const std::vector<int> a{4, 5, 6, 7}, b{8, 8, 4, 5}, d{6, 6, 6, 6};
  Matrix ctx = Matrix::Random(3, static_cast<Eigen::Index>(c.model.frame_dim));
  auto run = [&](std::vector<const std::vector<int>*> docs, Matrix rows) {
    Graph g(false);
    return decode_teacher_forced(model.decoder(), model.decoder_rnn(), model.tokens(), g.constant(rows), docs)
        .per_position();
  };
  Matrix fwd = run({&a, &b, &d}, ctx);
  Matrix perm(3, ctx.cols());
  perm << ctx.row(2), ctx.row(0), ctx.row(1);
  Matrix rev = run({&d, &a, &b}, perm);
  CHECK(fwd.row(0).isApprox(rev.row(1), 1e-13));
  CHECK(fwd.row(1).isApprox(rev.row(2), 1e-13));
  CHECK(fwd.row(2).isApprox(rev.row(0), 1e-13));
}

TEST_CASE("script generation contract") {
  Config c = toy::config(4, 3);
  FrameVae model(c, 12);
  Rng init(8);
  randomize_parameters(model.params(), 0.5, init);
  const std::array<int, 4> seed{4, 5, 6, 7};

  Rng r0(1);
  Script s = generate_script(model, seed, 3, 1.0, r0);
  CHECK(s.events.size() == 3);
  CHECK(s.seed_frame >= 0);
  for (const auto& ev : s.events) {
    CHECK(ev.frame >= 0);
    CHECK(ev.frame < 4);
  }

  Rng g1(1), g2(99);
  Script a = generate_script(model, seed, 2, 0.0, g1);
  Script b = generate_script(model, seed, 2, 0.0, g2);
  for (size_t i = 0; i < 2; ++i) {
    CHECK(a.events[i].tokens == b.events[i].tokens);
    CHECK(a.events[i].frame == b.events[i].frame);
  }

  Rng bad(1);
  CHECK_THROWS_AS(generate_script(model, seed, 0, 1.0, bad), ContractError);
  CHECK_THROWS_AS(generate_script(model, {4, 5, 6, 99}, 1, 1.0, bad), ContractError);
}

TEST_CASE("generation never emits the unknown token") {
  Config c = toy::config(3, 1);
  FrameVae model(c, 6);
  Rng init(3);
  randomize_parameters(model.params(), 0.5, init);
  // Make the unknown token by far the most likely output.
  model.decoder().w_out->value().row(Vocabulary::kUnknown).setConstant(3.0);
  const std::array<int, 4> seed{4, 5, 4, 5};
  Rng rng(17);
  size_t unknown = 0;
  for (int i = 0; i < 1000; ++i) {
    Script s = generate_script(model, seed, 1, 1.0, rng);
    for (int t : s.events[0].tokens) unknown += t == Vocabulary::kUnknown;
  }
  CHECK(unknown == 0);
}

TEST_CASE("decoder gradients match finite differences") {
  for (auto combine : {AttentionCombine::kAdditive, AttentionCombine::kConcat}) {
    Config c = toy::config(3, 1);
    c.model.attention = combine;
    FrameVae model(c, 7);
    Rng rng(9);
    randomize_parameters(model.params(), 1.0, rng);
    const std::vector<int> a{4, 5, 6, 2}, b{6, 6, 5, 4};
    const Matrix f = random_simplex(2, 3, rng);
    auto loss = [&](Graph& g) {
      Var ctx = model.decoder().frames.mix(g.constant(f));
      return sum(decode_teacher_forced(model.decoder(), model.decoder_rnn(), model.tokens(), ctx, {&a, &b}).log_probs);
    };
    CHECK(finite_difference_check(loss, model.params(), 1e-5).max_relative_error() < 1e-4);
  }
}
