// SPDX-License-Identifier: Apache-2.0

#include "ssdvae/synth.h"

#include <cmath>
#include <limits>
#include <sstream>
#include <unordered_map>

#include "ssdvae/tensor.h"

namespace ssdvae {

namespace {

constexpr double kStochasticTolerance = 1e-9;
constexpr std::array<char, kSlotsPerEvent> kSlotPrefix = {'v', 's', 'o', 'm'};

std::vector<long> parse_offsets(const std::string& text) {
  std::vector<long> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item.empty()) continue;
    try {
      out.push_back(std::stol(item));
    } catch (const std::exception&) {
      throw ContractError("synth.successors: bad offset '" + item + "'");
    }
  }
  return out;
}

void check_distribution(const std::vector<double>& p, const std::string& what) {
  double total = 0.0;
  for (double v : p) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw ContractError(what + " has a negative or non-finite entry");
    total += v;
  }
  if (std::abs(total - 1.0) > kStochasticTolerance) throw ContractError(what + " does not sum to 1");
}

using TokenIndex = std::array<std::unordered_map<std::string, size_t>, kSlotsPerEvent>;

TokenIndex index_tokens(const SyntheticSpec& spec) {
  TokenIndex idx;
  for (size_t s = 0; s < kSlotsPerEvent; ++s) {
    for (size_t i = 0; i < spec.slot_tokens[s].size(); ++i) idx[s].emplace(spec.slot_tokens[s][i], i);
  }
  return idx;
}

// log p(event | frame) for every frame.
std::vector<double> emission_logs(const SyntheticSpec& spec, const TokenIndex& idx,
                                  const std::array<std::string, kSlotsPerEvent>& event) {
  std::array<size_t, kSlotsPerEvent> ids{};
  for (size_t s = 0; s < kSlotsPerEvent; ++s) {
    auto it = idx[s].find(event[s]);
    if (it == idx[s].end()) throw ContractError("token '" + event[s] + "' is outside the synthetic spec");
    ids[s] = it->second;
  }
  std::vector<double> out(spec.frames, 0.0);
  for (size_t k = 0; k < spec.frames; ++k) {
    for (size_t s = 0; s < kSlotsPerEvent; ++s) out[k] += std::log(spec.emission[k][s][ids[s]]);
  }
  return out;
}

double log_sum_exp(const std::vector<double>& v) {
  double top = -std::numeric_limits<double>::infinity();
  for (double x : v) top = std::max(top, x);
  if (!std::isfinite(top)) return top;
  double s = 0.0;
  for (double x : v) s += std::exp(x - top);
  return top + std::log(s);
}

double forward(const SyntheticSpec& spec, const TokenIndex& idx, const EventDocument& doc) {
  if (doc.events.empty()) throw ContractError("hmm oracle: empty document");
  const size_t f = spec.frames;
  std::vector<double> alpha(f), next(f), terms(f);
  std::vector<double> e = emission_logs(spec, idx, doc.events[0]);
  for (size_t k = 0; k < f; ++k) alpha[k] = std::log(spec.initial[k]) + e[k];
  for (size_t m = 1; m < doc.events.size(); ++m) {
    e = emission_logs(spec, idx, doc.events[m]);
    for (size_t k = 0; k < f; ++k) {
      for (size_t j = 0; j < f; ++j) terms[j] = alpha[j] + std::log(spec.transition[j][k]);
      next[k] = log_sum_exp(terms) + e[k];
    }
    alpha.swap(next);
  }
  const double out = log_sum_exp(alpha);
  if (!std::isfinite(out)) throw ContractError("hmm oracle: document has zero probability under the spec");
  return out;
}

}  // namespace

SyntheticSpec SyntheticSpec::from_config(const SynthConfig& c, uint64_t seed) {
  if (c.frames == 0 || c.slot_vocab == 0 || c.events == 0) {
    throw ContractError("synthetic spec needs positive frames, slot_vocab and events");
  }
  if (c.home_size == 0 || c.home_size > c.slot_vocab) throw ContractError("synth.home_size must be in [1, slot_vocab]");
  if (c.home_mass < 0.0 || c.home_mass > 1.0) throw ContractError("synth.home_mass must lie in [0, 1]");
  if (c.self_loop < 0.0 || c.self_loop > 1.0) throw ContractError("synth.self_loop must lie in [0, 1]");
  SyntheticSpec spec;
  spec.frames = c.frames;
  spec.events = c.events;
  spec.train_docs = c.train_docs;
  spec.valid_docs = c.valid_docs;
  spec.test_docs = c.test_docs;
  spec.seed = seed;
  for (size_t s = 0; s < kSlotsPerEvent; ++s) {
    for (size_t i = 0; i < c.slot_vocab; ++i) spec.slot_tokens[s].push_back(kSlotPrefix[s] + std::to_string(i));
  }
  double zipf = 0.0;
  for (size_t i = 0; i < c.home_size; ++i) zipf += 1.0 / static_cast<double>(i + 1);
  const double background = (1.0 - c.home_mass) / static_cast<double>(c.slot_vocab);
  spec.emission.resize(c.frames);
  for (size_t k = 0; k < c.frames; ++k) {
    for (size_t s = 0; s < kSlotsPerEvent; ++s) {
      auto& p = spec.emission[k][s];
      p.assign(c.slot_vocab, background);
      for (size_t i = 0; i < c.home_size; ++i) {
        p[(c.home_size * k + i) % c.slot_vocab] += c.home_mass / (zipf * static_cast<double>(i + 1));
      }
    }
  }
  spec.initial.assign(c.frames, 1.0 / static_cast<double>(c.frames));
  const std::vector<long> offsets = parse_offsets(c.successors);
  spec.transition.assign(c.frames, std::vector<double>(c.frames, 0.0));
  const auto f = static_cast<long>(c.frames);
  for (long k = 0; k < f; ++k) {
    auto& row = spec.transition[static_cast<size_t>(k)];
    if (offsets.empty()) {
      row[static_cast<size_t>(k)] = 1.0;
      continue;
    }
    row[static_cast<size_t>(k)] += c.self_loop;
    for (long o : offsets) {
      row[static_cast<size_t>(((k + o) % f + f) % f)] += (1.0 - c.self_loop) / static_cast<double>(offsets.size());
    }
  }
  spec.validate();
  return spec;
}

void SyntheticSpec::validate() const {
  if (frames == 0) throw ContractError("synthetic spec has no frames");
  if (emission.size() != frames || initial.size() != frames || transition.size() != frames) {
    throw ContractError("synthetic spec tables disagree with the frame count");
  }
  check_distribution(initial, "initial frame distribution");
  for (size_t k = 0; k < frames; ++k) {
    if (transition[k].size() != frames) throw ContractError("transition row has the wrong width");
    check_distribution(transition[k], "transition row " + std::to_string(k));
    for (size_t s = 0; s < kSlotsPerEvent; ++s) {
      if (emission[k][s].size() != slot_tokens[s].size()) throw ContractError("emission table width mismatch");
      check_distribution(emission[k][s], "emission table of frame " + std::to_string(k));
    }
  }
}

int SyntheticSpec::home_frame(size_t slot, size_t token) const {
  int best = -1;
  double best_p = 0.0;
  for (size_t k = 0; k < frames; ++k) {
    const auto& p = emission[k][slot];
    double low = p[0];
    for (double v : p) low = std::min(low, v);
    if (p[token] > low && p[token] > best_p) {
      best_p = p[token];
      best = static_cast<int>(k);
    }
  }
  return best;
}

std::vector<EventDocument> synth_documents(const SyntheticSpec& spec, const std::string& split, size_t count,
                                           size_t events) {
  spec.validate();
  Rng rng(spec.seed, "synth-" + split);
  std::vector<EventDocument> docs;
  docs.reserve(count);
  for (size_t d = 0; d < count; ++d) {
    EventDocument doc;
    size_t frame = rng.categorical(spec.initial);
    for (size_t m = 0; m < events; ++m) {
      if (m > 0) frame = rng.categorical(spec.transition[frame]);
      std::array<std::string, kSlotsPerEvent> ev;
      for (size_t s = 0; s < kSlotsPerEvent; ++s) ev[s] = spec.slot_tokens[s][rng.categorical(spec.emission[frame][s])];
      doc.events.push_back(std::move(ev));
      doc.frames.emplace_back(SyntheticSpec::frame_label(frame));
    }
    docs.push_back(std::move(doc));
  }
  return docs;
}

SyntheticCorpus synth_generate(const SyntheticSpec& spec) {
  return {synth_documents(spec, "train", spec.train_docs, spec.events),
          synth_documents(spec, "valid", spec.valid_docs, spec.events),
          synth_documents(spec, "test", spec.test_docs, spec.events)};
}

double hmm_log_likelihood(const SyntheticSpec& spec, const EventDocument& doc) {
  return forward(spec, index_tokens(spec), doc);
}

double hmm_log_likelihood_enumerate(const SyntheticSpec& spec, const EventDocument& doc) {
  const TokenIndex idx = index_tokens(spec);
  const size_t m_count = doc.events.size();
  if (m_count == 0) throw ContractError("hmm oracle: empty document");
  std::vector<std::vector<double>> e;
  for (const auto& ev : doc.events) e.push_back(emission_logs(spec, idx, ev));
  std::vector<size_t> chain(m_count, 0);
  std::vector<double> terms;
  while (true) {
    double lp = std::log(spec.initial[chain[0]]) + e[0][chain[0]];
    for (size_t m = 1; m < m_count; ++m) lp += std::log(spec.transition[chain[m - 1]][chain[m]]) + e[m][chain[m]];
    terms.push_back(lp);
    size_t pos = 0;
    while (pos < m_count && ++chain[pos] == spec.frames) chain[pos++] = 0;
    if (pos == m_count) break;
  }
  return log_sum_exp(terms);
}

double hmm_oracle_ppl(const SyntheticSpec& spec, const std::vector<EventDocument>& corpus) {
  if (corpus.empty()) throw ContractError("hmm_oracle_ppl: empty corpus");
  const TokenIndex idx = index_tokens(spec);
  double total = 0.0;
  size_t words = 0;
  for (const auto& doc : corpus) {
    total += forward(spec, idx, doc);
    words += doc.events.size() * kSlotsPerEvent;
  }
  return std::exp(-total / static_cast<double>(words));
}

}  // namespace ssdvae
