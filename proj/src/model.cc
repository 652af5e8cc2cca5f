// SPDX-License-Identifier: Apache-2.0

#include "ssdvae/model.h"

#include <algorithm>
#include <cmath>

#include "ssdvae/baselines.h"
#include "ssdvae/gumbel.h"
#include "ssdvae/ops.h"

namespace ssdvae {

namespace {

Var encoder_states(Graph& g, const EmbeddingTable& tokens, const GruStack& rnn,
                   const std::vector<const std::vector<int>*>& docs) {
  const size_t steps = docs[0]->size();
  std::vector<Var> inputs;
  inputs.reserve(steps);
  std::vector<int> ids(docs.size());
  for (size_t t = 0; t < steps; ++t) {
    for (size_t b = 0; b < docs.size(); ++b) ids[b] = (*docs[b])[t];
    inputs.push_back(tokens.lookup(g, ids));
  }
  std::vector<Var> states = bigru_encode(rnn, inputs);
  return states.size() == 1 ? states[0] : concat_cols(states);
}

int argmax_row(const Matrix& m) {
  Eigen::Index best = 0;
  m.row(0).maxCoeff(&best);
  return static_cast<int>(best);
}

int choose_token(const Matrix& logits, double temperature, Rng& rng) {
  const Eigen::Index v = logits.cols();
  auto best_known = [&] {
    Eigen::Index best = -1;
    for (Eigen::Index i = 0; i < v; ++i) {
      if (i == Vocabulary::kUnknown) continue;
      if (best < 0 || logits(0, i) > logits(0, best)) best = i;
    }
    return static_cast<int>(best);
  };
  if (temperature <= 0.0) return best_known();
  std::vector<double> p(static_cast<size_t>(v));
  const double top = logits.row(0).maxCoeff();
  for (Eigen::Index i = 0; i < v; ++i) p[static_cast<size_t>(i)] = std::exp((logits(0, i) - top) / temperature);
  for (int attempt = 0; attempt <= 100; ++attempt) {
    const auto k = static_cast<int>(rng.categorical(p));
    if (k != Vocabulary::kUnknown) return k;
  }
  return best_known();
}

}  // namespace

SequenceModel::SequenceModel(const Config& config, size_t vocab_size) : config_(config), vocab_size_(vocab_size) {
  if (vocab_size <= Vocabulary::kReserved) throw ContractError("model vocabulary must exceed the reserved tokens");
}

FrameVae::FrameVae(const Config& config, size_t vocab_size) : SequenceModel(config, vocab_size) {
  const ModelConfig& m = config.model;
  if (m.frames == 0) throw ContractError("model.frames must be positive");
  Rng init(config.train.seed, "init");
  tokens_ = EmbeddingTable::create(params_, "tokens", vocab_size, m.embed_dim, init);
  encoder_rnn_ = GruStack::create(params_, "enc.rnn", m.embed_dim, m.enc_hidden, m.enc_layers, true, init);
  const size_t d_h = encoder_rnn_.output_size();
  const size_t d_e = m.frame_dim;
  EmbeddingTable frames = EmbeddingTable::create(params_, "frames", m.frames, d_e, init);
  encoder_.frames = frames;
  encoder_.combine = m.attention;
  encoder_.w_in = &params_.add("enc.w_in", init_weight(d_h, d_e, init));
  encoder_.w_out = &params_.add("enc.w_out", init_weight(m.frames, d_h, init));
  if (m.attention == AttentionCombine::kConcat) {
    encoder_.w_concat = &params_.add("enc.w_concat", init_weight(d_h, 2 * d_h, init));
  }
  decoder_rnn_ = GruStack::create(params_, "dec.rnn", m.embed_dim, m.dec_hidden, m.dec_layers, false, init);
  decoder_.frames = frames;
  decoder_.combine = m.attention;
  decoder_.w_in = &params_.add("dec.w_in", init_weight(d_e, m.dec_hidden, init));
  decoder_.w_out = &params_.add("dec.w_out", init_weight(vocab_size, d_e, init));
  if (m.attention == AttentionCombine::kConcat) {
    decoder_.w_concat = &params_.add("dec.w_concat", init_weight(d_e, 2 * d_e, init));
  }
}

Matrix FrameVae::encode_tokens(const std::vector<int>& tokens) const {
  if (tokens.empty()) throw ContractError("encode_tokens: empty sequence");
  const Matrix& table = tokens_.weights->value();
  Matrix x(static_cast<Eigen::Index>(tokens.size()), table.cols());
  for (size_t t = 0; t < tokens.size(); ++t) x.row(static_cast<Eigen::Index>(t)) = table.row(tokens[t]);
  return bigru_encode(encoder_rnn_, x);
}

std::vector<std::vector<int>> observed_indices(const std::vector<ObservationMask>& masks, size_t batch,
                                               size_t events) {
  std::vector<std::vector<int>> out(events, std::vector<int>(batch, -1));
  if (masks.empty()) return out;
  if (masks.size() != batch) throw ContractError("one observation mask per document required");
  for (size_t b = 0; b < batch; ++b) {
    if (masks[b].observed.empty()) continue;
    if (masks[b].observed.size() != events) throw ContractError("observation mask length differs from event count");
    for (size_t m = 0; m < events; ++m) out[m][b] = masks[b].observed[m];
  }
  return out;
}

BatchOutput FrameVae::batch_loss(Graph& g, const BatchInputs& in) const {
  if (in.docs.empty()) throw ContractError("batch_loss: empty batch");
  const size_t batch = in.docs.size();
  const size_t events = in.docs[0]->num_events;
  const size_t frames = num_frames();
  std::vector<const std::vector<int>*> tokens;
  for (const auto* d : in.docs) {
    if (d->num_events != events || d->tokens.size() != in.docs[0]->tokens.size()) {
      throw ContractError("batch_loss: documents in a batch must share their layout");
    }
    tokens.push_back(&d->tokens);
  }
  if (in.noise.empty()) throw ContractError("batch_loss: at least one noise chain required");
  const auto observed = observed_indices(in.masks, batch, events);
  std::vector<Matrix> observed_matrix(events, Matrix::Zero(static_cast<Eigen::Index>(batch),
                                                           static_cast<Eigen::Index>(frames)));
  for (size_t m = 0; m < events; ++m) {
    for (size_t b = 0; b < batch; ++b) {
      const int k = observed[m][b];
      if (k < 0) continue;
      if (static_cast<size_t>(k) >= frames) throw ContractError("observed frame index out of range");
      observed_matrix[m](static_cast<Eigen::Index>(b), k) = 1.0;
    }
  }

  Var states = encoder_states(g, tokens_, encoder_rnn_, tokens);
  const double chains = static_cast<double>(in.noise.size());
  BatchOutput out;
  out.doc_nll.assign(batch, 0.0);
  Var objective;
  for (size_t s = 0; s < in.noise.size(); ++s) {
    if (in.noise[s].size() != events) throw ContractError("batch_loss: one noise matrix per event required");
    std::vector<FrameStep> steps = encode_frames(encoder_, states, observed_matrix, in.noise[s], in.tau);
    std::vector<Var> samples, gammas;
    for (const auto& st : steps) {
      samples.push_back(st.sample);
      gammas.push_back(st.gamma);
    }
    Var context = frame_context(samples, decoder_.frames);
    TeacherForced tf = decode_teacher_forced(decoder_, decoder_rnn_, tokens_, context, tokens);
    Var l_w = reconstruction_loss(tf.log_probs);
    Var l_q = entropy_regularizer(gammas);
    Var l_c = classification_loss(gammas, observed);
    Var j = total_loss(l_w, l_q, l_c, config_.train.alpha_q, config_.train.alpha_c);
    objective = objective.valid() ? objective + j : j;

    out.sums.l_w += l_w.scalar() / chains;
    out.sums.l_q += l_q.scalar() / chains;
    out.sums.l_c += l_c.scalar() / chains;
    out.sums.total += j.scalar() / chains;
    const Matrix per = tf.per_position();
    for (size_t b = 0; b < batch; ++b) out.doc_nll[b] -= per.row(static_cast<Eigen::Index>(b)).sum() / chains;
    if (s == 0) {
      for (const auto& st : steps) out.normalized.push_back(st.normalized.value());
    }
  }
  out.sums.token_count = batch * tokens[0]->size();
  out.loss = scale(objective, 1.0 / (chains * static_cast<double>(batch)));
  return out;
}

std::unique_ptr<SequenceModel> make_model(const Config& config, size_t vocab_size) {
  switch (config.model.kind) {
    case ModelKind::kVae: return std::make_unique<FrameVae>(config, vocab_size);
    case ModelKind::kRnnlm: return std::make_unique<RnnLanguageModel>(config, vocab_size, false);
    case ModelKind::kRnnlmRole: return std::make_unique<RnnLanguageModel>(config, vocab_size, true);
  }
  throw ContractError("unknown model kind");
}

Script generate_script(const FrameVae& model, const std::array<int, kSlotsPerEvent>& seed, size_t num_events,
                       double temperature, Rng& rng) {
  if (num_events < 1) throw ContractError("generate_script: num_events must be at least 1");
  const auto vocab = static_cast<int>(model.vocab_size());
  for (int t : seed) {
    if (t < 0 || t >= vocab) throw ContractError("generate_script: seed token outside the vocabulary");
  }
  const bool separator = model.config().model.tuple_separator;
  const auto frames = static_cast<Eigen::Index>(model.num_frames());
  std::vector<int> tokens(seed.begin(), seed.end());
  Script script;
  for (size_t step = 0; step < num_events; ++step) {
    const size_t prefix_events = step + 1;
    Graph g(false);
    Var states = encoder_states(g, model.tokens(), model.encoder_rnn(), {&tokens});
    std::vector<Matrix> observed(prefix_events + 1, Matrix::Zero(1, frames));
    std::vector<Matrix> noise;
    for (size_t m = 0; m <= prefix_events; ++m) {
      noise.push_back(temperature <= 0.0 ? Matrix::Zero(1, frames) : gumbel_noise_matrix(1, frames, rng));
    }
    std::vector<FrameStep> chain = encode_frames(model.encoder(), states, observed, noise, model.config().train.tau);
    if (step == 0) script.seed_frame = argmax_row(chain[0].sample.value());
    std::vector<Var> samples;
    for (const auto& st : chain) samples.push_back(st.sample);
    Var context = frame_context(samples, model.decoder().frames);

    GruState state = zero_state(g, model.decoder_rnn(), 1);
    auto feed = [&](int id) {
      const int ids[1] = {id};
      return unigru_decode_step(model.decoder_rnn(), model.tokens().lookup(g, ids), state);
    };
    Var z = feed(Vocabulary::kBegin);
    for (int t : tokens) z = feed(t);
    if (separator) {
      tokens.push_back(Vocabulary::kTuple);
      z = feed(Vocabulary::kTuple);
    }
    GeneratedEvent ev;
    ev.frame = argmax_row(chain.back().sample.value());
    for (size_t slot = 0; slot < kSlotsPerEvent; ++slot) {
      Var logits = decode_token_logits(model.decoder(), context, z);
      const int tok = choose_token(logits.value(), temperature, rng);
      ev.tokens[slot] = tok;
      tokens.push_back(tok);
      if (slot + 1 < kSlotsPerEvent) z = feed(tok);
    }
    script.events.push_back(ev);
  }
  return script;
}

}  // namespace ssdvae
