// SPDX-License-Identifier: Apache-2.0

#include "ssdvae/seqnets.h"

#include <cmath>
#include <fstream>
#include <sstream>

#include "ssdvae/corpus.h"
#include "ssdvae/ops.h"

namespace ssdvae {

Tensor init_uniform(size_t rows, size_t cols, double bound, Rng& rng) {
  Tensor t(rows, cols);
  for (double& v : t.data()) v = (2.0 * rng.uniform() - 1.0) * bound;
  return t;
}

Tensor init_weight(size_t rows, size_t cols, Rng& rng) {
  return init_uniform(rows, cols, 1.0 / std::sqrt(static_cast<double>(cols)), rng);
}

GruCell GruCell::create(ParameterSet& params, const std::string& prefix, size_t input_size,
                        size_t hidden_size, Rng& init) {
  GruCell c;
  c.input_size = input_size;
  c.hidden_size = hidden_size;
  c.w_input = &params.add(prefix + ".w_input", init_weight(3 * hidden_size, input_size, init));
  c.w_gates = &params.add(prefix + ".w_gates", init_weight(2 * hidden_size, hidden_size, init));
  c.w_cand = &params.add(prefix + ".w_cand", init_weight(hidden_size, hidden_size, init));
  c.bias = &params.add(prefix + ".bias", Tensor(1, 3 * hidden_size));
  return c;
}

Var gru_cell_step_projected(const GruCell& cell, Var x_proj, Var h) {
  const auto hs = static_cast<Eigen::Index>(cell.hidden_size);
  if (x_proj.cols() != 3 * hs || h.cols() != hs || h.rows() != x_proj.rows()) {
    throw ContractError("gru_cell_step: width mismatch");
  }
  Graph& g = *h.graph();
  Var zr = sigmoid(slice_cols(x_proj, 0, 2 * hs) + linear(h, g.param(*cell.w_gates)));
  Var z = slice_cols(zr, 0, hs);
  Var r = slice_cols(zr, hs, hs);
  Var cand = tanh(slice_cols(x_proj, 2 * hs, hs) + linear(cmul(r, h), g.param(*cell.w_cand)));
  return h + cmul(z, cand - h);
}

Var gru_cell_step(const GruCell& cell, Var x, Var h) {
  if (x.cols() != static_cast<Eigen::Index>(cell.input_size)) throw ContractError("gru_cell_step: input width mismatch");
  Graph& g = *x.graph();
  Var proj = add_row(linear(x, g.param(*cell.w_input)), g.param(*cell.bias));
  return gru_cell_step_projected(cell, proj, h);
}

GruStack GruStack::create(ParameterSet& params, const std::string& prefix, size_t input_size,
                          size_t hidden_size, size_t num_layers, bool bidirectional, Rng& init) {
  if (num_layers == 0 || hidden_size == 0 || input_size == 0) throw ContractError("GruStack: zero-sized stack");
  GruStack s;
  s.num_layers = num_layers;
  s.hidden_size = hidden_size;
  s.input_size = input_size;
  s.bidirectional = bidirectional;
  size_t in = input_size;
  for (size_t l = 0; l < num_layers; ++l) {
    const std::string base = prefix + ".l" + std::to_string(l);
    s.forward.push_back(GruCell::create(params, base + ".fwd", in, hidden_size, init));
    if (bidirectional) s.backward.push_back(GruCell::create(params, base + ".bwd", in, hidden_size, init));
    in = s.output_size();
  }
  return s;
}

std::vector<Var> run_gru_layer(const GruCell& cell, const std::vector<Var>& inputs, bool reverse) {
  if (inputs.empty()) throw ContractError("run_gru_layer: empty sequence");
  Graph& g = *inputs[0].graph();
  const Eigen::Index batch = inputs[0].rows();
  const auto steps = static_cast<Eigen::Index>(inputs.size());
  // Project all time steps with one matmul.
  Var stacked = inputs.size() == 1 ? inputs[0] : concat_rows(inputs);
  if (stacked.cols() != static_cast<Eigen::Index>(cell.input_size)) throw ContractError("run_gru_layer: input width mismatch");
  Var proj = add_row(linear(stacked, g.param(*cell.w_input)), g.param(*cell.bias));
  std::vector<Var> out(inputs.size());
  Var h = g.constant(Matrix::Zero(batch, static_cast<Eigen::Index>(cell.hidden_size)));
  for (Eigen::Index k = 0; k < steps; ++k) {
    const Eigen::Index t = reverse ? steps - 1 - k : k;
    Var xp = steps == 1 ? proj : slice_rows(proj, t * batch, batch);
    h = gru_cell_step_projected(cell, xp, h);
    out[static_cast<size_t>(t)] = h;
  }
  return out;
}

std::vector<Var> bigru_encode(const GruStack& stack, const std::vector<Var>& inputs) {
  if (!stack.bidirectional) throw ContractError("bigru_encode: stack is not bidirectional");
  if (inputs.empty()) throw ContractError("bigru_encode: empty sequence");
  std::vector<Var> layer_in = inputs;
  for (size_t l = 0; l < stack.num_layers; ++l) {
    std::vector<Var> fwd = run_gru_layer(stack.forward[l], layer_in, false);
    std::vector<Var> bwd = run_gru_layer(stack.backward[l], layer_in, true);
    for (size_t t = 0; t < layer_in.size(); ++t) {
      const Var both[2] = {fwd[t], bwd[t]};
      layer_in[t] = concat_cols(both);
    }
  }
  return layer_in;
}

Matrix bigru_encode(const GruStack& stack, const Matrix& token_embeddings) {
  if (token_embeddings.rows() == 0) throw ContractError("bigru_encode: empty sequence");
  Graph g(false);
  std::vector<Var> inputs;
  for (Eigen::Index t = 0; t < token_embeddings.rows(); ++t) inputs.push_back(g.constant(token_embeddings.row(t)));
  std::vector<Var> h = bigru_encode(stack, inputs);
  Matrix out(token_embeddings.rows(), static_cast<Eigen::Index>(stack.output_size()));
  for (size_t t = 0; t < h.size(); ++t) out.row(static_cast<Eigen::Index>(t)) = h[t].value().row(0);
  return out;
}

GruState zero_state(Graph& g, const GruStack& stack, Eigen::Index batch) {
  GruState s;
  for (size_t l = 0; l < stack.num_layers; ++l) {
    s.push_back(g.constant(Matrix::Zero(batch, static_cast<Eigen::Index>(stack.hidden_size))));
  }
  return s;
}

Var unigru_decode_step(const GruStack& stack, Var x, GruState& state) {
  if (stack.bidirectional) throw ContractError("unigru_decode_step: stack is bidirectional");
  if (state.size() != stack.num_layers) throw ContractError("unigru_decode_step: state has wrong layer count");
  Var in = x;
  for (size_t l = 0; l < stack.num_layers; ++l) {
    state[l] = gru_cell_step(stack.forward[l], in, state[l]);
    in = state[l];
  }
  return in;
}

std::vector<Var> unigru_run(const GruStack& stack, const std::vector<Var>& inputs) {
  if (stack.bidirectional) throw ContractError("unigru_run: stack is bidirectional");
  std::vector<Var> layer_in = inputs;
  for (size_t l = 0; l < stack.num_layers; ++l) layer_in = run_gru_layer(stack.forward[l], layer_in, false);
  return layer_in;
}

EmbeddingTable EmbeddingTable::create(ParameterSet& params, const std::string& name, size_t rows,
                                      size_t dim, Rng& init, bool trainable) {
  EmbeddingTable e;
  e.rows = rows;
  e.dim = dim;
  e.weights = &params.add(name, init_uniform(rows, dim, 0.1, init));
  e.weights->set_requires_grad(trainable);
  return e;
}

Var EmbeddingTable::lookup(Graph& g, std::span<const int> ids) const {
  return ssdvae::lookup(g.param(*weights), ids);
}

Var EmbeddingTable::mix(Var weights_per_row) const {
  if (weights_per_row.cols() != static_cast<Eigen::Index>(rows)) throw ContractError("EmbeddingTable::mix: width mismatch");
  return matmul(weights_per_row, weights_per_row.graph()->param(*weights));
}

size_t load_pretrained_embeddings(const std::string& path, const Vocabulary& vocab, EmbeddingTable& table) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open pretrained embeddings: " + path);
  std::string line;
  size_t loaded = 0;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string token;
    if (!(ls >> token)) continue;
    std::vector<double> values;
    double v;
    while (ls >> v) values.push_back(v);
    if (values.size() != table.dim) {
      throw ContractError(path + ":" + std::to_string(line_no) + ": expected " + std::to_string(table.dim) +
                          " values, found " + std::to_string(values.size()));
    }
    const int id = vocab.find(token);
    if (id < 0) continue;
    for (size_t k = 0; k < values.size(); ++k) table.weights->value()(id, static_cast<Eigen::Index>(k)) = values[k];
    ++loaded;
  }
  return loaded;
}

}  // namespace ssdvae
