// SPDX-License-Identifier: Apache-2.0
//
// Training objective. All terms are in nats and the trainer minimizes
//   J = L_w - alpha_q * L_q + alpha_c * L_c
// where L_w is the token NLL, L_q the entropy of softmax(gamma_m) summed over
// events, and L_c the cross-entropy of softmax(gamma_m) against observed
// frames.

#ifndef SSDVAE_OBJECTIVE_H_
#define SSDVAE_OBJECTIVE_H_

#include <span>
#include <vector>

#include "ssdvae/graph.h"

namespace ssdvae {

struct LossBreakdown {
  double l_w = 0.0;
  double l_q = 0.0;
  double l_c = 0.0;
  double total = 0.0;
  size_t token_count = 0;
};

// Batched, recorded forms. `gammas` are B x F logits after injection.
Var reconstruction_loss(Var log_probs);
Var entropy_regularizer(const std::vector<Var>& gammas);
// observed[m][b] is the observed frame index of event m in document b, or -1.
Var classification_loss(const std::vector<Var>& gammas, const std::vector<std::vector<int>>& observed);
Var total_loss(Var l_w, Var l_q, Var l_c, double alpha_q, double alpha_c);

// Plain forms over single documents.
double reconstruction_loss(std::span<const double> log_probs);
// Entropy of an already-normalized distribution, summed over events.
double entropy_regularizer(const std::vector<std::vector<double>>& normalized);
double classification_loss(const std::vector<std::vector<double>>& normalized, std::span<const int> observed);
double total_loss(double l_w, double l_q, double l_c, double alpha_q, double alpha_c);

// E_q[log p(f)] under the uniform prior: -M ln F for every q.
double uniform_prior_log_constant(size_t events, size_t frames);

}  // namespace ssdvae

#endif  // SSDVAE_OBJECTIVE_H_
