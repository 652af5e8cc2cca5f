// SPDX-License-Identifier: Apache-2.0

#include "ssdvae/encoder.h"

#include <cmath>

#include "ssdvae/gumbel.h"
#include "ssdvae/ops.h"

namespace ssdvae {

namespace {

void check_observation_rows(const Matrix& observed) {
  for (Eigen::Index r = 0; r < observed.rows(); ++r) {
    check_observation(std::span<const double>(observed.row(r).data(), static_cast<size_t>(observed.cols())));
  }
}

Matrix row_of(std::span<const double> v) {
  Matrix m(1, static_cast<Eigen::Index>(v.size()));
  for (size_t i = 0; i < v.size(); ++i) m(0, static_cast<Eigen::Index>(i)) = v[i];
  return m;
}

std::vector<double> to_vector(const Matrix& m) { return {m.data(), m.data() + m.size()}; }

}  // namespace

void check_observation(std::span<const double> v) {
  size_t ones = 0;
  for (double x : v) {
    if (x == 1.0) {
      ++ones;
    } else if (x != 0.0) {
      throw ContractError("observation vector must be all-zero or one-hot");
    }
  }
  if (ones > 1) throw ContractError("observation vector must be all-zero or one-hot");
}

Var inject_observation(Var gamma_raw, const Matrix& observed) {
  if (observed.rows() != gamma_raw.rows() || observed.cols() != gamma_raw.cols()) {
    throw ContractError("inject_observation: observation shape differs from logits");
  }
  check_observation_rows(observed);
  if (observed.isZero(0.0)) return gamma_raw;
  Graph& g = *gamma_raw.graph();
  return gamma_raw + mul_col(g.constant(observed), row_norm(gamma_raw));
}

FrameStep encode_event_step(const EncoderWeights& w, Var f_prev, const Matrix& observed, Var encoder_states,
                            double tau, const Matrix& noise) {
  Graph& g = *f_prev.graph();
  const auto frames = static_cast<Eigen::Index>(w.num_frames());
  if (f_prev.cols() != frames || noise.cols() != frames || noise.rows() != f_prev.rows()) {
    throw ContractError("encode_event_step: frame dimension mismatch");
  }
  if (encoder_states.rows() != f_prev.rows() || encoder_states.cols() == 0) {
    throw ContractError("encode_event_step: encoder states must be non-empty with one row per document");
  }
  Var prev_embedding = w.frames.mix(f_prev);
  Var query = linear(prev_embedding, g.param(*w.w_in));
  Var attention = softmax_rows(block_dot(encoder_states, query));
  Var context = block_combine(encoder_states, attention);
  Var combined;
  if (w.combine == AttentionCombine::kAdditive) {
    combined = tanh(query) + tanh(context);
  } else {
    const Var parts[2] = {query, context};
    combined = tanh(linear(concat_cols(parts), g.param(*w.w_concat)));
  }
  Var raw = linear(combined, g.param(*w.w_out));
  FrameStep step;
  step.gamma = inject_observation(raw, observed);
  step.sample = gumbel_softmax(step.gamma, noise, tau);
  step.normalized = softmax_rows(step.gamma);
  step.attention = attention;
  return step;
}

std::vector<FrameStep> encode_frames(const EncoderWeights& w, Var encoder_states,
                                     const std::vector<Matrix>& observed, const std::vector<Matrix>& noise,
                                     double tau) {
  if (observed.size() != noise.size() || observed.empty()) {
    throw ContractError("encode_frames: need matching, non-empty observation and noise lists");
  }
  Graph& g = *encoder_states.graph();
  const auto frames = static_cast<Eigen::Index>(w.num_frames());
  Var prev = g.constant(Matrix::Constant(encoder_states.rows(), frames, 1.0 / static_cast<double>(frames)));
  std::vector<FrameStep> steps;
  steps.reserve(observed.size());
  for (size_t m = 0; m < observed.size(); ++m) {
    steps.push_back(encode_event_step(w, prev, observed[m], encoder_states, tau, noise[m]));
    prev = steps.back().sample;
  }
  return steps;
}

FrameState encode_event_step(const EncoderWeights& w, std::span<const double> f_prev,
                             std::span<const double> observation, const Matrix& encoder_states, double tau,
                             std::span<const double> noise) {
  if (encoder_states.rows() == 0) throw ContractError("encode_event_step: empty encoder states");
  check_observation(observation);
  Graph g(false);
  Matrix flat = Eigen::Map<const Matrix>(encoder_states.data(), 1, encoder_states.size());
  FrameStep step = encode_event_step(w, g.constant(row_of(f_prev)), row_of(observation), g.constant(flat), tau,
                                     row_of(noise));
  return {to_vector(step.gamma.value()), to_vector(step.sample.value()), to_vector(step.normalized.value()),
          to_vector(step.attention.value())};
}

Matrix beta_enc(const Matrix& encoder_states, const Matrix& w_out) {
  if (w_out.cols() != encoder_states.cols()) throw ContractError("beta_enc: W_out columns must equal d_h");
  return w_out * encoder_states.transpose().array().tanh().matrix();
}

AttentionResult attend(const Matrix& keys, const Vector& query) {
  if (keys.cols() != query.size()) throw ContractError("attend: key width differs from query");
  Vector scores = keys * query;
  Vector weights = (scores.array() - scores.maxCoeff()).exp();
  weights /= weights.sum();
  return {weights, keys.transpose() * weights};
}

}  // namespace ssdvae
