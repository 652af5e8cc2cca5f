// SPDX-License-Identifier: Apache-2.0

#include "ssdvae/trainer.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <ostream>

#include "ssdvae/gumbel.h"

namespace ssdvae {

double epoch_temperature(const TrainConfig& c, size_t epoch) {
  if (c.tau_decay == 1.0) return c.tau;
  const double t = c.tau * std::pow(c.tau_decay, static_cast<double>(epoch > 0 ? epoch - 1 : 0));
  return std::max(c.tau_min, t);
}

std::vector<ObservationMask> epoch_masks(const std::vector<EncodedDocument>& docs, const TrainConfig& c,
                                         size_t epoch) {
  Rng rng(c.seed, "mask", c.mask_fixed ? 0 : epoch);
  std::vector<ObservationMask> out;
  out.reserve(docs.size());
  for (const auto& d : docs) out.push_back(mask_frames(d.frames, c.epsilon, rng));
  return out;
}

std::vector<std::vector<size_t>> epoch_batches(const std::vector<EncodedDocument>& docs, size_t batch, Rng& rng) {
  if (batch == 0) throw ContractError("batch size must be positive");
  std::map<std::pair<size_t, size_t>, std::vector<size_t>> groups;
  for (size_t i = 0; i < docs.size(); ++i) groups[{docs[i].tokens.size(), docs[i].num_events}].push_back(i);
  std::vector<std::vector<size_t>> out;
  for (auto& [key, ids] : groups) {
    rng.shuffle(ids.begin(), ids.end());
    for (size_t s = 0; s < ids.size(); s += batch) {
      out.emplace_back(ids.begin() + static_cast<std::ptrdiff_t>(s),
                       ids.begin() + static_cast<std::ptrdiff_t>(std::min(ids.size(), s + batch)));
    }
  }
  rng.shuffle(out.begin(), out.end());
  return out;
}

Trainer::Trainer(SequenceModel& model, const Vocabulary& vocab)
    : model_(model),
      vocab_(vocab),
      optimizer_(OptimizerState::for_params(model.params(), model.config().train.lr)),
      order_(model.config().train.seed, "order") {}

EpochStats Trainer::train_epoch(const std::vector<EncodedDocument>& train, size_t epoch) {
  if (train.empty()) throw ContractError("train_epoch: empty training corpus");
  const auto start = std::chrono::steady_clock::now();
  const TrainConfig& c = model_.config().train;
  const size_t frames = model_.num_frames();
  const std::vector<ObservationMask> masks = epoch_masks(train, c, epoch);
  const auto batches = epoch_batches(train, c.batch, order_);
  Rng noise_rng(c.seed, "gumbel", epoch);
  Rng dropout_rng(c.seed, "dropout", epoch);
  const double tau = epoch_temperature(c, epoch);
  const size_t chains = std::max<size_t>(1, c.samples);

  EpochStats st;
  st.epoch = epoch;
  for (size_t bi = 0; bi < batches.size(); ++bi) {
    const auto& ids = batches[bi];
    BatchInputs in;
    in.tau = tau;
    in.training = true;
    in.dropout = &dropout_rng;
    for (size_t id : ids) {
      in.docs.push_back(&train[id]);
      in.masks.push_back(masks[id]);
    }
    if (model_.uses_noise()) {
      const size_t events = train[ids[0]].num_events;
      in.noise.resize(chains);
      for (auto& chain : in.noise) {
        for (size_t m = 0; m < events; ++m) {
          chain.push_back(gumbel_noise_matrix(static_cast<Eigen::Index>(ids.size()),
                                              static_cast<Eigen::Index>(frames), noise_rng));
        }
      }
    }
    Graph g;
    GradientMap grads;
    BatchOutput out;
    try {
      out = model_.batch_loss(g, in);
      grads = backward_gradients(g, out.loss, model_.params());
    } catch (const NumericError& e) {
      throw NumericError("epoch " + std::to_string(epoch) + " batch " + std::to_string(bi) + ": " + e.what());
    }
    if (!std::isfinite(out.loss.scalar())) {
      throw NumericError("epoch " + std::to_string(epoch) + " batch " + std::to_string(bi) + ": non-finite loss");
    }
    const double norm = clip_global_norm(grads, c.clip);
    adam_step(model_.params(), grads, optimizer_);
    st.mean_grad_norm += norm;
    st.max_grad_norm = std::max(st.max_grad_norm, norm);
    st.max_clipped_norm = std::max(st.max_clipped_norm, global_norm(grads));
    st.mean_j += out.sums.total;
    st.mean_l_w += out.sums.l_w;
    st.mean_l_q += out.sums.l_q;
    st.mean_l_c += out.sums.l_c;
    st.documents += ids.size();
    ++st.batches;
  }
  const double docs = static_cast<double>(st.documents);
  st.mean_j /= docs;
  st.mean_l_w /= docs;
  st.mean_l_q /= docs;
  st.mean_l_c /= docs;
  st.mean_grad_norm /= static_cast<double>(st.batches);
  st.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return st;
}

double Trainer::validate(const std::vector<EncodedDocument>& valid) const {
  EvalOptions o = eval_options(model_.config());
  const DocumentScores s = score_documents(model_, valid, o);
  const bool head = model_.frame_task() && !model_.uses_noise();
  const double denom = head ? static_cast<double>(valid.size()) : static_cast<double>(s.tokens);
  return std::exp(s.total_nll / denom);
}

Checkpoint Trainer::fit(const std::vector<EncodedDocument>& train, const std::vector<EncodedDocument>& valid,
                        std::ostream* log) {
  if (valid.empty()) throw ContractError("fit: validation corpus is empty");
  const TrainConfig& c = model_.config().train;
  const size_t patience = std::max<size_t>(1, c.patience);
  double best = std::numeric_limits<double>::infinity();
  Checkpoint best_ckpt;
  size_t stale = 0;
  for (size_t epoch = 1; epoch <= c.max_epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    EpochStats st = train_epoch(train, epoch);
    st.valid_ppl = validate(valid);
    st.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    history_.push_back(st);
    if (log != nullptr) {
      write_log_line(*log, st);
      log->flush();
    }
    if (st.valid_ppl < best) {
      best = st.valid_ppl;
      stale = 0;
      best_ckpt = snapshot(model_, vocab_, optimizer_, epoch, best, order_.state());
    } else if (++stale >= patience) {
      break;
    }
  }
  if (best_ckpt.params.empty()) {
    best_ckpt = snapshot(model_, vocab_, optimizer_, 0, best, order_.state());
  } else {
    load_parameters(model_, best_ckpt.params);
  }
  return best_ckpt;
}

void write_log_line(std::ostream& out, const EpochStats& s) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%zu\t%.17g\t%.17g\t%.17g\t%.17g\t%.17g\t%.3f\n", s.epoch, s.mean_j, s.mean_l_w,
                s.mean_l_q, s.mean_l_c, s.valid_ppl, s.seconds);
  out << buf;
}

}  // namespace ssdvae
