// SPDX-License-Identifier: Apache-2.0
//
// Token decoder p(w_t | f, w_<t). A left-to-right GRU yields z_t; each step
// attends over the inferred frame embeddings E^M = f E^F:
//   alpha^ = softmax(E^M W^_in z_t)
//   c_t    = E^M^T alpha^
//   g      = W^_out (tanh(W^_in z_t) + tanh(c_t)),  p(w_t) ∝ exp(g)

#ifndef SSDVAE_DECODER_H_
#define SSDVAE_DECODER_H_

#include <span>
#include <vector>

#include "ssdvae/config.h"
#include "ssdvae/graph.h"
#include "ssdvae/seqnets.h"

namespace ssdvae {

struct DecoderWeights {
  Tensor* w_in = nullptr;      // d_e x decoder hidden
  Tensor* w_out = nullptr;     // V x d_e
  Tensor* w_concat = nullptr;  // d_e x 2 d_e, concatenation variant only
  EmbeddingTable frames;       // shared E^F
  AttentionCombine combine = AttentionCombine::kAdditive;
};

// B x (M * d_e): row b holds e_1 .. e_M with e_m = f_m[b]^T E^F.
Var frame_context(std::span<const Var> samples, const EmbeddingTable& frames);
// Single-document form: rows of `samples` are f_m; returns M x d_e.
Matrix frame_context(const Matrix& samples, const Matrix& frame_embeddings);

// Logits g for a batch of decoder states z (rows) against per-row contexts.
Var decode_token_logits(const DecoderWeights& w, Var context, Var z);

struct TokenDistribution {
  std::vector<double> logits;
  std::vector<double> probs;
  std::vector<double> attention;
};
// Single-document form with E^M given as M x d_e.
TokenDistribution decode_token_step(const DecoderWeights& w, const Matrix& frame_embeddings,
                                    std::span<const double> z);

struct TeacherForced {
  Var log_probs;             // (T * B) x 1, time-major
  Eigen::Index batch = 0;
  Eigen::Index steps = 0;

  // B x T values of log p(w_t | f, w_<t).
  Matrix per_position() const;
};

// `tokens` holds B equal-length documents. Inputs are <s>, w_1 .. w_{T-1}.
TeacherForced decode_teacher_forced(const DecoderWeights& w, const GruStack& rnn, const EmbeddingTable& embeddings,
                                    Var context, const std::vector<const std::vector<int>*>& tokens);

}  // namespace ssdvae

#endif  // SSDVAE_DECODER_H_
