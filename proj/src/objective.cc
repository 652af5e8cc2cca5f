// SPDX-License-Identifier: Apache-2.0

#include "ssdvae/objective.h"

#include <cmath>

#include "ssdvae/ops.h"

namespace ssdvae {

namespace {

void check_alphas(double alpha_q, double alpha_c) {
  if (!(alpha_q >= 0.0) || !(alpha_c >= 0.0)) throw ContractError("loss weights must be non-negative");
}

}  // namespace

Var reconstruction_loss(Var log_probs) { return scale(sum(log_probs), -1.0); }

Var entropy_regularizer(const std::vector<Var>& gammas) {
  if (gammas.empty()) throw ContractError("entropy_regularizer: no events");
  Var total;
  for (const Var& gamma : gammas) {
    Var h = scale(sum(cmul(softmax_rows(gamma), log_softmax_rows(gamma))), -1.0);
    total = total.valid() ? total + h : h;
  }
  return total;
}

Var classification_loss(const std::vector<Var>& gammas, const std::vector<std::vector<int>>& observed) {
  if (gammas.size() != observed.size()) throw ContractError("classification_loss: event count mismatch");
  if (gammas.empty()) throw ContractError("classification_loss: no events");
  Graph& g = *gammas[0].graph();
  Var total = g.constant(Matrix::Zero(1, 1));
  for (size_t m = 0; m < gammas.size(); ++m) {
    if (observed[m].size() != static_cast<size_t>(gammas[m].rows())) {
      throw ContractError("classification_loss: batch size mismatch");
    }
    bool any = false;
    for (int k : observed[m]) {
      if (k >= gammas[m].cols()) throw ContractError("classification_loss: frame index out of range");
      any = any || k >= 0;
    }
    if (!any) continue;
    total = total - sum(pick(log_softmax_rows(gammas[m]), observed[m]));
  }
  return total;
}

Var total_loss(Var l_w, Var l_q, Var l_c, double alpha_q, double alpha_c) {
  check_alphas(alpha_q, alpha_c);
  return l_w - scale(l_q, alpha_q) + scale(l_c, alpha_c);
}

double reconstruction_loss(std::span<const double> log_probs) {
  if (log_probs.empty()) throw ContractError("reconstruction_loss: no tokens");
  double s = 0.0;
  for (double v : log_probs) s -= v;
  return s;
}

double entropy_regularizer(const std::vector<std::vector<double>>& normalized) {
  double s = 0.0;
  for (const auto& p : normalized) {
    for (double v : p) {
      if (v > 0.0) s -= v * std::log(v);
    }
  }
  return s;
}

double classification_loss(const std::vector<std::vector<double>>& normalized, std::span<const int> observed) {
  if (normalized.size() != observed.size()) throw ContractError("classification_loss: event count mismatch");
  double s = 0.0;
  for (size_t m = 0; m < observed.size(); ++m) {
    if (observed[m] < 0) continue;
    const auto k = static_cast<size_t>(observed[m]);
    if (k >= normalized[m].size()) throw ContractError("classification_loss: frame index out of range");
    s -= std::log(normalized[m][k]);
  }
  return s;
}

double total_loss(double l_w, double l_q, double l_c, double alpha_q, double alpha_c) {
  check_alphas(alpha_q, alpha_c);
  return l_w - alpha_q * l_q + alpha_c * l_c;
}

double uniform_prior_log_constant(size_t events, size_t frames) {
  return -static_cast<double>(events) * std::log(static_cast<double>(frames));
}

}  // namespace ssdvae
