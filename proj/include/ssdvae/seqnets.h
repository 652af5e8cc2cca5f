// SPDX-License-Identifier: Apache-2.0
//
// Recurrent and embedding building blocks.
//
// GRU convention used throughout:
//   z  = sigmoid(W_z x + U_z h + b_z)
//   r  = sigmoid(W_r x + U_r h + b_r)
//   h~ = tanh(W_h x + U_h (r * h) + b_h)
//   h' = (1 - z) * h + z * h~
// Input weights are stored stacked as [z; r; h~] rows, recurrent weights as
// U_zr = [U_z; U_r] and U_h.

#ifndef SSDVAE_SEQNETS_H_
#define SSDVAE_SEQNETS_H_

#include <string>
#include <vector>

#include "ssdvae/graph.h"
#include "ssdvae/rng.h"
#include "ssdvae/tensor.h"

namespace ssdvae {

// Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
Tensor init_weight(size_t rows, size_t cols, Rng& rng);
Tensor init_uniform(size_t rows, size_t cols, double bound, Rng& rng);

struct GruCell {
  Tensor* w_input = nullptr;   // 3h x in
  Tensor* w_gates = nullptr;   // 2h x h  (U_z; U_r)
  Tensor* w_cand = nullptr;    // h x h   (U_h)
  Tensor* bias = nullptr;      // 1 x 3h
  size_t input_size = 0;
  size_t hidden_size = 0;

  static GruCell create(ParameterSet& params, const std::string& prefix, size_t input_size,
                        size_t hidden_size, Rng& init);
};

// One step from raw input x (B x in) and state h (B x hidden).
Var gru_cell_step(const GruCell& cell, Var x, Var h);
// One step from an already projected input x W^T + b (B x 3h).
Var gru_cell_step_projected(const GruCell& cell, Var x_proj, Var h);

struct GruStack {
  size_t num_layers = 0;
  size_t hidden_size = 0;
  size_t input_size = 0;
  bool bidirectional = false;
  std::vector<GruCell> forward;   // one per layer
  std::vector<GruCell> backward;  // one per layer when bidirectional

  static GruStack create(ParameterSet& params, const std::string& prefix, size_t input_size,
                         size_t hidden_size, size_t num_layers, bool bidirectional, Rng& init);
  size_t output_size() const { return hidden_size * (bidirectional ? 2 : 1); }
};

// Runs one cell over a sequence (each element B x in) from a zero state.
std::vector<Var> run_gru_layer(const GruCell& cell, const std::vector<Var>& inputs, bool reverse);

// Bidirectional encoding: element t is [forward_t, backward_t] of the top layer.
std::vector<Var> bigru_encode(const GruStack& stack, const std::vector<Var>& inputs);
// Plain-matrix form: T x d_in embeddings in, T x (2 hidden) out.
Matrix bigru_encode(const GruStack& stack, const Matrix& token_embeddings);

// Per-layer recurrent state of a unidirectional stack.
using GruState = std::vector<Var>;
GruState zero_state(Graph& g, const GruStack& stack, Eigen::Index batch);
// Advances every layer by one step; returns the top-layer output z_t.
Var unigru_decode_step(const GruStack& stack, Var x, GruState& state);
// Teacher-forced run over a whole sequence from zero state; returns z_t per t.
std::vector<Var> unigru_run(const GruStack& stack, const std::vector<Var>& inputs);

class Vocabulary;

struct EmbeddingTable {
  Tensor* weights = nullptr;  // rows x dim
  size_t rows = 0;
  size_t dim = 0;

  static EmbeddingTable create(ParameterSet& params, const std::string& name, size_t rows, size_t dim,
                               Rng& init, bool trainable = true);
  Var lookup(Graph& g, std::span<const int> ids) const;
  // s^T * weights for simplex (or any) rows s (B x rows).
  Var mix(Var weights_per_row) const;
};

// Loads "token v1 ... vd" lines into the rows of known tokens. Returns the
// number of rows overwritten. Unknown tokens are skipped.
size_t load_pretrained_embeddings(const std::string& path, const Vocabulary& vocab, EmbeddingTable& table);

}  // namespace ssdvae

#endif  // SSDVAE_SEQNETS_H_
