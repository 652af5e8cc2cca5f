// SPDX-License-Identifier: Apache-2.0

#ifndef SSDVAE_OPTIM_H_
#define SSDVAE_OPTIM_H_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ssdvae/graph.h"
#include "ssdvae/rng.h"
#include "ssdvae/tensor.h"

namespace ssdvae {

struct OptimizerState {
  std::vector<Matrix> first_moment;
  std::vector<Matrix> second_moment;
  uint64_t step = 0;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  // Zero moments shaped like `params`.
  static OptimizerState for_params(const ParameterSet& params, double learning_rate);
};

// Runs graph.backward(loss) and collects d(loss)/d(param) for every entry of
// `params`; parameters the loss does not reach get zeros.
GradientMap backward_gradients(Graph& graph, Var loss, const ParameterSet& params);

// One bias-corrected Adam update. Increments state.step. Tensors whose
// gradient is entirely zero keep their values; their moments still decay.
void adam_step(ParameterSet& params, const GradientMap& grads, OptimizerState& state);

// Rescales all gradients by max_norm / g when the global L2 norm g exceeds
// max_norm. Returns g (the norm before clipping).
double clip_global_norm(GradientMap& grads, double max_norm);

double global_norm(const GradientMap& grads);

struct GradCheckEntry {
  std::string name;
  double max_relative_error = 0.0;
  size_t checked = 0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double max_relative_error() const;
};

// Scalar loss built on a fresh Graph from the current parameter values.
using LossFn = std::function<Var(Graph&)>;

// Compares analytic gradients of `loss_fn` with central differences of the
// given step. `max_entries_per_param` (0 = all) checks an evenly strided subset
// of large tensors. Throws ContractError if two identical evaluations of the
// loss disagree.
// Redraws every trainable entry uniformly in [-bound, bound]. Gradient checks
// use this to move away from the small-gradient regime of a fresh init.
void randomize_parameters(ParameterSet& params, double bound, Rng& rng);

GradCheckReport finite_difference_check(const LossFn& loss_fn, ParameterSet& params, double step,
                                        size_t max_entries_per_param = 0);

}  // namespace ssdvae

#endif  // SSDVAE_OPTIM_H_
