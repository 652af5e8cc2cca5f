// SPDX-License-Identifier: Apache-2.0
//
// Left-to-right GRU language models, optionally with a learned slot-role
// embedding concatenated to every input, and their frame-classification head
// (bi-GRU final states -> linear -> softplus -> dropout).

#ifndef SSDVAE_BASELINES_H_
#define SSDVAE_BASELINES_H_

#include <span>
#include <vector>

#include "ssdvae/model.h"

namespace ssdvae {

inline constexpr size_t kRoles = 4;

// Role of token position t (0-based) under the default layout: t mod 4.
inline int role_of(size_t position) { return static_cast<int>(position % kRoles); }

class RnnLanguageModel : public SequenceModel {
 public:
  RnnLanguageModel(const Config& config, size_t vocab_size, bool roles);

  BatchOutput batch_loss(Graph& g, const BatchInputs& in) const override;
  EmbeddingTable& token_embeddings() override { return tokens_; }

  bool has_roles() const { return roles_.weights != nullptr; }
  const EmbeddingTable& role_table() const { return roles_; }

  // B x F head logits; dropout applies only when `training` is set.
  Var frame_logits(Graph& g, const std::vector<const std::vector<int>*>& docs, bool training, Rng* dropout) const;

 private:
  Var step_inputs(Graph& g, std::span<const int> ids, size_t position, size_t batch) const;
  BatchOutput lm_loss(Graph& g, const BatchInputs& in) const;
  BatchOutput head_loss(Graph& g, const BatchInputs& in) const;

  EmbeddingTable tokens_;
  EmbeddingTable roles_;
  GruStack lm_rnn_;
  Tensor* w_out_ = nullptr;
  Tensor* b_out_ = nullptr;
  GruStack head_rnn_;
  Tensor* head_w_ = nullptr;
  Tensor* head_b_ = nullptr;
};

// Inverted dropout: zeroes entries with probability p and rescales by 1/(1-p).
Var dropout(Var x, double p, Rng& rng);

}  // namespace ssdvae

#endif  // SSDVAE_BASELINES_H_
