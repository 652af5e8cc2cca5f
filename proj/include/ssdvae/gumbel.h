// SPDX-License-Identifier: Apache-2.0
//
// Gumbel(0,1) noise and the relaxed categorical draw softmax((logits+g)/tau).
// Noise is always an explicit argument; only training and evaluation loops
// draw it.

#ifndef SSDVAE_GUMBEL_H_
#define SSDVAE_GUMBEL_H_

#include <cstdint>
#include <span>
#include <vector>

#include "ssdvae/graph.h"
#include "ssdvae/rng.h"

namespace ssdvae {

struct GumbelConfig {
  double temperature = 0.5;
  uint64_t seed = 0;
};

// -log(-log(u)) with u clamped to [1e-12, 1 - 1e-12].
double gumbel_from_uniform(double u);

std::vector<double> gumbel_noise(size_t n, Rng& rng);
// rows x cols matrix of independent Gumbel draws, filled row-major.
Matrix gumbel_noise_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng);

// softmax((logits + noise) / tau) on plain vectors.
std::vector<double> gumbel_softmax_sample(std::span<const double> logits, double tau,
                                          std::span<const double> noise);

// Differentiable row-wise version; noise is a constant of the same shape.
Var gumbel_softmax(Var logits, const Matrix& noise, double tau);

// Shannon entropy in nats.
double entropy(std::span<const double> p);

}  // namespace ssdvae

#endif  // SSDVAE_GUMBEL_H_
