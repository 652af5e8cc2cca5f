// SPDX-License-Identifier: Apache-2.0

#include "ssdvae/optim.h"

#include <algorithm>
#include <cmath>

namespace ssdvae {

OptimizerState OptimizerState::for_params(const ParameterSet& params, double learning_rate) {
  OptimizerState s;
  s.learning_rate = learning_rate;
  s.first_moment = params.zero_gradients();
  s.second_moment = params.zero_gradients();
  return s;
}

GradientMap backward_gradients(Graph& graph, Var loss, const ParameterSet& params) {
  graph.backward(loss);
  GradientMap out = params.zero_gradients();
  for (size_t i = 0; i < params.size(); ++i) {
    if (const Matrix* g = graph.grad_of(params.at(i))) out[i] = *g;
  }
  return out;
}

void adam_step(ParameterSet& params, const GradientMap& grads, OptimizerState& state) {
  if (grads.size() != params.size() || state.first_moment.size() != params.size() ||
      state.second_moment.size() != params.size()) {
    throw ContractError("adam_step: gradient/moment count does not match parameters");
  }
  for (size_t i = 0; i < params.size(); ++i) {
    const Matrix& p = params.at(i).value();
    if (grads[i].rows() != p.rows() || grads[i].cols() != p.cols() ||
        state.first_moment[i].rows() != p.rows() || state.first_moment[i].cols() != p.cols()) {
      throw ContractError("adam_step: shape mismatch for " + params.name(i));
    }
  }
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (size_t i = 0; i < params.size(); ++i) {
    Matrix& m = state.first_moment[i];
    Matrix& v = state.second_moment[i];
    const Matrix& g = grads[i];
    m = state.beta1 * m + (1.0 - state.beta1) * g;
    v = state.beta2 * v + (1.0 - state.beta2) * g.cwiseProduct(g);
    Tensor& p = params.at(i);
    // A tensor with an all-zero gradient is left in place whatever its moments hold.
    if (!p.requires_grad() || g.isZero(0.0)) continue;
    p.value().array() -= state.learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + state.epsilon);
  }
}

double global_norm(const GradientMap& grads) {
  double sq = 0.0;
  for (const Matrix& g : grads) sq += g.squaredNorm();
  return std::sqrt(sq);
}

double clip_global_norm(GradientMap& grads, double max_norm) {
  if (!(max_norm > 0.0)) throw ContractError("clip_global_norm: max_norm must be positive");
  const double norm = global_norm(grads);
  if (norm > max_norm) {
    const double factor = max_norm / norm;
    for (Matrix& g : grads) g *= factor;
  }
  return norm;
}

double GradCheckReport::max_relative_error() const {
  double worst = 0.0;
  for (const auto& e : entries) worst = std::max(worst, e.max_relative_error);
  return worst;
}

void randomize_parameters(ParameterSet& params, double bound, Rng& rng) {
  for (size_t i = 0; i < params.size(); ++i) {
    if (!params.at(i).requires_grad()) continue;
    for (double& v : params.at(i).data()) v = (2.0 * rng.uniform() - 1.0) * bound;
  }
}

GradCheckReport finite_difference_check(const LossFn& loss_fn, ParameterSet& params, double step,
                                        size_t max_entries_per_param) {
  auto evaluate = [&] {
    Graph g(false);
    return loss_fn(g).scalar();
  };
  if (evaluate() != evaluate()) throw ContractError("finite_difference_check: loss is not deterministic");

  Graph g;
  Var loss = loss_fn(g);
  const GradientMap analytic = backward_gradients(g, loss, params);

  GradCheckReport report;
  for (size_t i = 0; i < params.size(); ++i) {
    Tensor& t = params.at(i);
    GradCheckEntry entry{params.name(i), 0.0, 0};
    if (!t.requires_grad()) {
      report.entries.push_back(entry);
      continue;
    }
    const size_t n = t.size();
    const size_t stride = (max_entries_per_param == 0 || n <= max_entries_per_param)
                              ? 1 : (n + max_entries_per_param - 1) / max_entries_per_param;
    double* data = t.value().data();
    const double* grad = analytic[i].data();
    for (size_t k = 0; k < n; k += stride) {
      const double saved = data[k];
      data[k] = saved + step;
      const double up = evaluate();
      data[k] = saved - step;
      const double down = evaluate();
      data[k] = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double denom = std::max({std::abs(grad[k]), std::abs(numeric), 1e-8});
      entry.max_relative_error = std::max(entry.max_relative_error, std::abs(grad[k] - numeric) / denom);
      ++entry.checked;
    }
    report.entries.push_back(entry);
  }
  return report;
}

}  // namespace ssdvae
