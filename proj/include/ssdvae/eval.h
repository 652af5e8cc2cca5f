// SPDX-License-Identifier: Apache-2.0
//
// Evaluation: per-word perplexity, inverse narrative cloze, frame
// classification metrics and attention cluster reports. Frames are never
// observed at evaluation and every document draws its Gumbel noise from its
// own stream (eval seed, document index), so results do not depend on
// batching or thread count.

#ifndef SSDVAE_EVAL_H_
#define SSDVAE_EVAL_H_

#include <array>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ssdvae/config.h"
#include "ssdvae/corpus.h"
#include "ssdvae/inc.h"
#include "ssdvae/model.h"

namespace ssdvae {

struct EvalOptions {
  uint64_t seed = 7;
  size_t chains = 1;
  size_t batch = 100;
  size_t threads = 1;
};

// Options from config.eval.*; threads from SSDVAE_THREADS (default 1).
EvalOptions eval_options(const Config& config);

// Gumbel noise of one evaluation document: [chain][event], each 1 x F.
std::vector<std::vector<Matrix>> eval_noise(uint64_t seed, uint64_t doc_index, size_t chains, size_t events,
                                            size_t frames);

struct DocumentScores {
  std::vector<double> nll;             // per document, in input order
  std::vector<std::vector<Matrix>> normalized;  // per document, per event 1 x F (frame models)
  std::vector<Matrix> head_logits;     // per document 1 x F (classifier heads)
  double total_nll = 0.0;
  size_t tokens = 0;
};

// `first_index` offsets the per-document noise streams.
DocumentScores score_documents(const SequenceModel& model, const std::vector<EncodedDocument>& docs,
                               const EvalOptions& options, uint64_t first_index = 0);

double perplexity(const SequenceModel& model, const std::vector<EncodedDocument>& docs, const EvalOptions& options);

struct IncResult {
  double accuracy = 0.0;
  size_t correct = 0;
  size_t total = 0;
  size_t ties = 0;
  size_t skipped = 0;
  std::vector<size_t> predictions;
};

// Argmin per sample; ties go to the lower option index and are counted.
IncResult score_inc(const std::vector<std::array<double, kIncOptions>>& option_scores,
                    std::span<const size_t> gold);
// Scores each option by mean NLL per token.
IncResult inc_accuracy(const SequenceModel& model, const Vocabulary& vocab, const std::vector<IncSample>& samples,
                       const EvalOptions& options);

struct ClassificationMetrics {
  double accuracy = 0.0;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  size_t count = 0;
  size_t classes = 0;
};

// Macro averages run over the classes present in `gold`.
ClassificationMetrics classification_metrics(std::span<const int> predicted, std::span<const int> gold);

// Predicted frame of the first event: argmax softmax(gamma_1) for frame models,
// argmax of the head logits for classifier baselines.
std::vector<int> predict_frames(const SequenceModel& model, const std::vector<EncodedDocument>& docs,
                                const EvalOptions& options);

struct ClusterEntry {
  int index = 0;
  double score = 0.0;
};

struct ClusterRow {
  std::string key;
  int id = 0;
  std::vector<ClusterEntry> top;
};

struct ClusterReport {
  std::vector<ClusterRow> token_frames;  // per observed token type: top frames from beta_enc
  std::vector<ClusterRow> frame_tokens;  // per inferred frame: top tokens from beta_dec
};

// Top-k indices of `scores`, descending, ties to the lower index.
std::vector<ClusterEntry> top_k(std::span<const double> scores, size_t k);

ClusterReport cluster_report(const FrameVae& model, const Vocabulary& vocab, const std::vector<EncodedDocument>& docs,
                             size_t k, bool use_max, const EvalOptions& options);
void write_cluster_rows(std::ostream& out, const std::vector<ClusterRow>& rows, const std::vector<std::string>& names);

// `metric<TAB>value` lines.
void write_metrics(std::ostream& out, const std::vector<std::pair<std::string, double>>& metrics);

}  // namespace ssdvae

#endif  // SSDVAE_EVAL_H_
