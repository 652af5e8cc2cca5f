// SPDX-License-Identifier: Apache-2.0

#include "ssdvae/baselines.h"

#include "ssdvae/ops.h"

namespace ssdvae {

RnnLanguageModel::RnnLanguageModel(const Config& config, size_t vocab_size, bool roles)
    : SequenceModel(config, vocab_size) {
  const ModelConfig& m = config.model;
  if (roles && m.tuple_separator) throw ContractError("role embeddings require the default 4-slot layout");
  Rng init(config.train.seed, "init");
  tokens_ = EmbeddingTable::create(params_, "tokens", vocab_size, m.embed_dim, init);
  if (roles) roles_ = EmbeddingTable::create(params_, "roles", kRoles, m.role_dim, init);
  const size_t input = m.embed_dim + (roles ? m.role_dim : 0);
  if (frame_task()) {
    head_rnn_ = GruStack::create(params_, "head.rnn", input, m.enc_hidden, m.enc_layers, true, init);
    head_w_ = &params_.add("head.w", init_weight(m.frames, head_rnn_.output_size(), init));
    head_b_ = &params_.add("head.b", Tensor(1, m.frames, 0.0));
  } else {
    lm_rnn_ = GruStack::create(params_, "lm.rnn", input, m.dec_hidden, m.dec_layers, false, init);
    w_out_ = &params_.add("lm.w_out", init_weight(vocab_size, m.dec_hidden, init));
    b_out_ = &params_.add("lm.b_out", Tensor(1, vocab_size, 0.0));
  }
}

Var RnnLanguageModel::step_inputs(Graph& g, std::span<const int> ids, size_t position, size_t batch) const {
  Var x = tokens_.lookup(g, ids);
  if (!has_roles()) return x;
  const std::vector<int> role(batch, role_of(position));
  const Var parts[2] = {x, roles_.lookup(g, role)};
  return concat_cols(parts);
}

BatchOutput RnnLanguageModel::batch_loss(Graph& g, const BatchInputs& in) const {
  if (in.docs.empty()) throw ContractError("batch_loss: empty batch");
  for (const auto* d : in.docs) {
    if (d->tokens.empty()) throw ContractError("batch_loss: empty token sequence");
    if (d->tokens.size() != in.docs[0]->tokens.size()) {
      throw ContractError("batch_loss: documents in a batch must share their layout");
    }
  }
  return frame_task() ? head_loss(g, in) : lm_loss(g, in);
}

BatchOutput RnnLanguageModel::lm_loss(Graph& g, const BatchInputs& in) const {
  const size_t batch = in.docs.size();
  const size_t steps = in.docs[0]->tokens.size();
  std::vector<Var> inputs;
  std::vector<int> ids(batch), gold;
  gold.reserve(batch * steps);
  for (size_t t = 0; t < steps; ++t) {
    for (size_t b = 0; b < batch; ++b) {
      ids[b] = t == 0 ? Vocabulary::kBegin : in.docs[b]->tokens[t - 1];
      gold.push_back(in.docs[b]->tokens[t]);
    }
    inputs.push_back(step_inputs(g, ids, t, batch));
  }
  std::vector<Var> states = unigru_run(lm_rnn_, inputs);
  Var z = steps == 1 ? states[0] : concat_rows(states);
  Var logits = add_row(linear(z, g.param(*w_out_)), g.param(*b_out_));
  Var log_probs = pick(log_softmax_rows(logits), gold);
  Var l_w = reconstruction_loss(log_probs);

  BatchOutput out;
  out.sums.l_w = l_w.scalar();
  out.sums.total = out.sums.l_w;
  out.sums.token_count = batch * steps;
  out.doc_nll.assign(batch, 0.0);
  const Matrix& lp = log_probs.value();
  for (size_t t = 0; t < steps; ++t) {
    for (size_t b = 0; b < batch; ++b) out.doc_nll[b] -= lp(static_cast<Eigen::Index>(t * batch + b), 0);
  }
  out.loss = scale(l_w, 1.0 / static_cast<double>(batch));
  return out;
}

Var RnnLanguageModel::frame_logits(Graph& g, const std::vector<const std::vector<int>*>& docs, bool training,
                                   Rng* rng) const {
  if (!frame_task()) throw ContractError("frame_logits: model was built without a classification head");
  const size_t batch = docs.size();
  const size_t steps = docs[0]->size();
  std::vector<Var> inputs;
  std::vector<int> ids(batch);
  for (size_t t = 0; t < steps; ++t) {
    for (size_t b = 0; b < batch; ++b) ids[b] = (*docs[b])[t];
    inputs.push_back(step_inputs(g, ids, t, batch));
  }
  std::vector<Var> states = bigru_encode(head_rnn_, inputs);
  const auto h = static_cast<Eigen::Index>(head_rnn_.hidden_size);
  const Var last[2] = {slice_cols(states.back(), 0, h), slice_cols(states.front(), h, h)};
  Var logits = softplus(add_row(linear(concat_cols(last), g.param(*head_w_)), g.param(*head_b_)));
  if (training && config_.train.dropout > 0.0) {
    if (rng == nullptr) throw ContractError("frame_logits: training mode needs a dropout stream");
    logits = dropout(logits, config_.train.dropout, *rng);
  }
  return logits;
}

BatchOutput RnnLanguageModel::head_loss(Graph& g, const BatchInputs& in) const {
  const size_t batch = in.docs.size();
  std::vector<const std::vector<int>*> docs;
  std::vector<int> gold(batch, -1);
  for (size_t b = 0; b < batch; ++b) {
    docs.push_back(&in.docs[b]->tokens);
    if (!in.docs[b]->frames.empty()) gold[b] = in.docs[b]->frames[0];
  }
  Var logits = frame_logits(g, docs, in.training, in.dropout);
  Var picked = pick(log_softmax_rows(logits), gold);
  Var ce = scale(sum(picked), -1.0);

  BatchOutput out;
  out.sums.l_c = ce.scalar();
  out.sums.total = out.sums.l_c;
  out.sums.token_count = batch * docs[0]->size();
  out.doc_nll.resize(batch);
  for (size_t b = 0; b < batch; ++b) out.doc_nll[b] = -picked.value()(static_cast<Eigen::Index>(b), 0);
  out.head_logits = logits.value();
  out.loss = scale(ce, 1.0 / static_cast<double>(batch));
  return out;
}

Var dropout(Var x, double p, Rng& rng) {
  if (p < 0.0 || p >= 1.0) throw ContractError("dropout rate must lie in [0, 1)");
  Matrix mask(x.rows(), x.cols());
  const double keep = 1.0 / (1.0 - p);
  for (Eigen::Index i = 0; i < mask.size(); ++i) mask.data()[i] = rng.bernoulli(p) ? 0.0 : keep;
  return cmul(x, x.graph()->constant(std::move(mask)));
}

}  // namespace ssdvae
