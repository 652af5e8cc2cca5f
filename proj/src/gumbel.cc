// SPDX-License-Identifier: Apache-2.0

#include "ssdvae/gumbel.h"

#include <algorithm>
#include <cmath>

#include "ssdvae/ops.h"

namespace ssdvae {

double gumbel_from_uniform(double u) {
  u = std::clamp(u, 1e-12, 1.0 - 1e-12);
  return -std::log(-std::log(u));
}

std::vector<double> gumbel_noise(size_t n, Rng& rng) {
  std::vector<double> out(n);
  for (double& g : out) g = gumbel_from_uniform(rng.uniform());
  return out;
}

Matrix gumbel_noise_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  Matrix out(rows, cols);
  for (Eigen::Index i = 0; i < out.size(); ++i) out.data()[i] = gumbel_from_uniform(rng.uniform());
  return out;
}

std::vector<double> gumbel_softmax_sample(std::span<const double> logits, double tau,
                                          std::span<const double> noise) {
  if (!(tau > 0.0)) throw ContractError("gumbel_softmax_sample: temperature must be positive");
  if (logits.size() != noise.size() || logits.empty()) {
    throw ContractError("gumbel_softmax_sample: logits and noise must be non-empty and equal length");
  }
  for (double l : logits) {
    if (!std::isfinite(l)) throw ContractError("gumbel_softmax_sample: non-finite logit");
  }
  std::vector<double> out(logits.size());
  double mx = -INFINITY;
  for (size_t i = 0; i < out.size(); ++i) {
    out[i] = (logits[i] + noise[i]) / tau;
    mx = std::max(mx, out[i]);
  }
  double total = 0.0;
  for (double& v : out) {
    v = std::exp(v - mx);
    total += v;
  }
  for (double& v : out) v /= total;
  return out;
}

Var gumbel_softmax(Var logits, const Matrix& noise, double tau) {
  if (!(tau > 0.0)) throw ContractError("gumbel_softmax: temperature must be positive");
  if (noise.rows() != logits.rows() || noise.cols() != logits.cols()) {
    throw ContractError("gumbel_softmax: noise shape differs from logits");
  }
  Graph& g = *logits.graph();
  return softmax_rows(scale(add(logits, g.constant(noise)), 1.0 / tau));
}

double entropy(std::span<const double> p) {
  double h = 0.0;
  for (double v : p) {
    if (v > 0.0) h -= v * std::log(v);
  }
  return h;
}

}  // namespace ssdvae
