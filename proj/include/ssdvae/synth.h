// SPDX-License-Identifier: Apache-2.0
//
// Synthetic frame-HMM corpora. Each document draws a frame chain from an
// initial distribution and a row-stochastic transition matrix, then emits the
// four slot tokens of every event independently from the frame's per-slot
// categorical tables. The exact marginal likelihood is available through the
// forward algorithm.

#ifndef SSDVAE_SYNTH_H_
#define SSDVAE_SYNTH_H_

#include <array>
#include <string>
#include <vector>

#include "ssdvae/config.h"
#include "ssdvae/corpus.h"
#include "ssdvae/rng.h"

namespace ssdvae {

struct SyntheticSpec {
  size_t frames = 0;
  size_t events = 0;
  // slot_tokens[s][i]: surface form of token i of slot s.
  std::array<std::vector<std::string>, kSlotsPerEvent> slot_tokens;
  // emission[k][s][i]: p(token i in slot s | frame k).
  std::vector<std::array<std::vector<double>, kSlotsPerEvent>> emission;
  std::vector<double> initial;
  std::vector<std::vector<double>> transition;  // frames x frames, row-stochastic
  size_t train_docs = 0;
  size_t valid_docs = 0;
  size_t test_docs = 0;
  uint64_t seed = 0;

  static SyntheticSpec from_config(const SynthConfig& c, uint64_t seed);
  // Throws ContractError unless every table is a distribution within 1e-9.
  void validate() const;
  static std::string frame_label(size_t k) { return "F" + std::to_string(k); }
  // Home frame of a slot token, or -1 if it is preferred by none.
  int home_frame(size_t slot, size_t token) const;
};

struct SyntheticCorpus {
  std::vector<EventDocument> train;
  std::vector<EventDocument> valid;
  std::vector<EventDocument> test;
};

// Documents for one named split, deterministic in (spec.seed, split).
std::vector<EventDocument> synth_documents(const SyntheticSpec& spec, const std::string& split, size_t count,
                                           size_t events);
SyntheticCorpus synth_generate(const SyntheticSpec& spec);

// Exact log p(doc) under the generating model via the forward algorithm.
double hmm_log_likelihood(const SyntheticSpec& spec, const EventDocument& doc);
// Same value by summation over all F^M frame chains.
double hmm_log_likelihood_enumerate(const SyntheticSpec& spec, const EventDocument& doc);
// Per-word perplexity exp(-sum log p / sum 4M).
double hmm_oracle_ppl(const SyntheticSpec& spec, const std::vector<EventDocument>& corpus);

}  // namespace ssdvae

#endif  // SSDVAE_SYNTH_H_
