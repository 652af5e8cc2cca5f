// SPDX-License-Identifier: Apache-2.0
//
// Variational frame encoder q(f_m | f_{m-1}, I_m, w).
//
// Per event, from the previous frame sample f_{m-1} and encoder states H:
//   e      = f_{m-1}^T E^F
//   alpha  = softmax(H W_in e)            attention over all T positions
//   c_m    = H^T alpha
//   g'     = W_out (tanh(W_in e) + tanh(c_m))
//   gamma  = g' + ||g'||_2 I_m            observed frames raise their logit
//   f_m    = softmax((gamma + noise) / tau)
// The chain starts from the uniform simplex f_0 = 1/F.

#ifndef SSDVAE_ENCODER_H_
#define SSDVAE_ENCODER_H_

#include <span>
#include <vector>

#include "ssdvae/config.h"
#include "ssdvae/graph.h"
#include "ssdvae/rng.h"
#include "ssdvae/seqnets.h"

namespace ssdvae {

struct EncoderWeights {
  Tensor* w_in = nullptr;      // d_h x d_e
  Tensor* w_out = nullptr;     // F x d_h
  Tensor* w_concat = nullptr;  // d_h x 2 d_h, concatenation variant only
  EmbeddingTable frames;       // E^F, F x d_e, shared with the decoder
  AttentionCombine combine = AttentionCombine::kAdditive;

  size_t num_frames() const { return frames.rows; }
};

// Batched frame state; one document per row.
struct FrameStep {
  Var gamma;       // B x F logits after injection
  Var sample;      // B x F simplex sample f_m
  Var normalized;  // B x F softmax(gamma)
  Var attention;   // B x T
};

// gamma = gamma_raw + ||gamma_raw||_2 * observed, row-wise. `observed` rows
// must be zero or one-hot.
Var inject_observation(Var gamma_raw, const Matrix& observed);

// One step of the chain. `encoder_states` is B x (T * d_h), noise is B x F.
FrameStep encode_event_step(const EncoderWeights& w, Var f_prev, const Matrix& observed, Var encoder_states,
                            double tau, const Matrix& noise);

// Runs the chain over M events. observed[m] and noise[m] are B x F.
std::vector<FrameStep> encode_frames(const EncoderWeights& w, Var encoder_states,
                                     const std::vector<Matrix>& observed, const std::vector<Matrix>& noise,
                                     double tau);

// Single-document value form of encode_event_step.
struct FrameState {
  std::vector<double> gamma;
  std::vector<double> sample;
  std::vector<double> normalized;
  std::vector<double> attention;
};

FrameState encode_event_step(const EncoderWeights& w, std::span<const double> f_prev,
                             std::span<const double> observation, const Matrix& encoder_states, double tau,
                             std::span<const double> noise);

// Throws ContractError unless v is all-zero or exactly one-hot.
void check_observation(std::span<const double> v);

// beta_enc = W_out tanh(H^T): F x T token-to-frame scores.
Matrix beta_enc(const Matrix& encoder_states, const Matrix& w_out);

// Plain evaluation of the attention summary (alpha, c) used in tests.
struct AttentionResult {
  Vector weights;
  Vector context;
};
AttentionResult attend(const Matrix& keys, const Vector& query);

}  // namespace ssdvae

#endif  // SSDVAE_ENCODER_H_
