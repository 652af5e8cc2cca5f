// SPDX-License-Identifier: Apache-2.0

#include "ssdvae/decoder.h"

#include "ssdvae/corpus.h"
#include "ssdvae/ops.h"

namespace ssdvae {

Var frame_context(std::span<const Var> samples, const EmbeddingTable& frames) {
  if (samples.empty()) throw ContractError("frame_context: no frames");
  std::vector<Var> rows;
  rows.reserve(samples.size());
  for (const Var& f : samples) rows.push_back(frames.mix(f));
  return rows.size() == 1 ? rows[0] : concat_cols(rows);
}

Matrix frame_context(const Matrix& samples, const Matrix& frame_embeddings) {
  if (samples.cols() != frame_embeddings.rows()) throw ContractError("frame_context: F mismatch");
  return samples * frame_embeddings;
}

Var decode_token_logits(const DecoderWeights& w, Var context, Var z) {
  Graph& g = *z.graph();
  Var query = linear(z, g.param(*w.w_in));
  Var attention = softmax_rows(block_dot(context, query));
  Var summary = block_combine(context, attention);
  Var combined;
  if (w.combine == AttentionCombine::kAdditive) {
    combined = tanh(query) + tanh(summary);
  } else {
    const Var parts[2] = {query, summary};
    combined = tanh(linear(concat_cols(parts), g.param(*w.w_concat)));
  }
  return linear(combined, g.param(*w.w_out));
}

TokenDistribution decode_token_step(const DecoderWeights& w, const Matrix& frame_embeddings,
                                    std::span<const double> z) {
  for (double v : z) {
    if (!std::isfinite(v)) throw ContractError("decode_token_step: non-finite decoder state");
  }
  Graph g(false);
  Matrix zrow(1, static_cast<Eigen::Index>(z.size()));
  for (size_t i = 0; i < z.size(); ++i) zrow(0, static_cast<Eigen::Index>(i)) = z[i];
  Matrix flat = Eigen::Map<const Matrix>(frame_embeddings.data(), 1, frame_embeddings.size());
  Var context = g.constant(flat);
  Var zv = g.constant(zrow);
  Var logits = decode_token_logits(w, context, zv);
  Var probs = softmax_rows(logits);
  Var query = linear(zv, g.param(*w.w_in));
  Var attention = softmax_rows(block_dot(context, query));
  auto vec = [](const Matrix& m) { return std::vector<double>(m.data(), m.data() + m.size()); };
  return {vec(logits.value()), vec(probs.value()), vec(attention.value())};
}

Matrix TeacherForced::per_position() const {
  const Matrix& v = log_probs.value();
  Matrix out(batch, steps);
  for (Eigen::Index t = 0; t < steps; ++t)
    for (Eigen::Index b = 0; b < batch; ++b) out(b, t) = v(t * batch + b, 0);
  return out;
}

TeacherForced decode_teacher_forced(const DecoderWeights& w, const GruStack& rnn, const EmbeddingTable& embeddings,
                                    Var context, const std::vector<const std::vector<int>*>& tokens) {
  if (tokens.empty() || tokens[0]->empty()) throw ContractError("decode_teacher_forced: empty token sequence");
  const size_t batch = tokens.size();
  const size_t steps = tokens[0]->size();
  for (const auto* t : tokens) {
    if (t->size() != steps) throw ContractError("decode_teacher_forced: documents in a batch differ in length");
  }
  if (context.rows() != static_cast<Eigen::Index>(batch)) throw ContractError("decode_teacher_forced: context rows");
  Graph& g = *context.graph();

  std::vector<Var> inputs;
  std::vector<int> gold;
  inputs.reserve(steps);
  gold.reserve(steps * batch);
  std::vector<int> ids(batch);
  for (size_t t = 0; t < steps; ++t) {
    for (size_t b = 0; b < batch; ++b) {
      ids[b] = t == 0 ? Vocabulary::kBegin : (*tokens[b])[t - 1];
      gold.push_back((*tokens[b])[t]);
    }
    inputs.push_back(embeddings.lookup(g, ids));
  }
  std::vector<Var> states = unigru_run(rnn, inputs);
  Var z_all = steps == 1 ? states[0] : concat_rows(states);
  std::vector<Var> repeated(steps, context);
  Var context_all = steps == 1 ? context : concat_rows(repeated);
  Var logits = decode_token_logits(w, context_all, z_all);
  TeacherForced out;
  out.log_probs = pick(log_softmax_rows(logits), gold);
  out.batch = static_cast<Eigen::Index>(batch);
  out.steps = static_cast<Eigen::Index>(steps);
  return out;
}

}  // namespace ssdvae
