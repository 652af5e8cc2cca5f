// SPDX-License-Identifier: Apache-2.0
//
// Training loop: per epoch, fresh observation masks and Gumbel noise from
// streams derived from (seed, epoch), Adam with global-norm clipping, and
// early stopping on validation perplexity computed with no observed frames.

#ifndef SSDVAE_TRAINER_H_
#define SSDVAE_TRAINER_H_

#include <iosfwd>
#include <string>
#include <vector>

#include "ssdvae/checkpoint.h"
#include "ssdvae/corpus.h"
#include "ssdvae/eval.h"
#include "ssdvae/model.h"
#include "ssdvae/optim.h"

namespace ssdvae {

struct EpochStats {
  size_t epoch = 0;
  size_t documents = 0;
  size_t batches = 0;
  double mean_j = 0.0;
  double mean_l_w = 0.0;
  double mean_l_q = 0.0;
  double mean_l_c = 0.0;
  double mean_grad_norm = 0.0;
  double max_grad_norm = 0.0;
  double max_clipped_norm = 0.0;
  double valid_ppl = 0.0;
  double seconds = 0.0;
};

// Temperature used in a 1-based epoch.
double epoch_temperature(const TrainConfig& c, size_t epoch);

// Observation masks for one epoch, one per document in corpus order.
std::vector<ObservationMask> epoch_masks(const std::vector<EncodedDocument>& docs, const TrainConfig& c,
                                         size_t epoch);

// Training batches for one epoch: documents grouped by layout, shuffled.
std::vector<std::vector<size_t>> epoch_batches(const std::vector<EncodedDocument>& docs, size_t batch, Rng& rng);

class Trainer {
 public:
  Trainer(SequenceModel& model, const Vocabulary& vocab);

  // One pass over `train` (1-based epoch number).
  EpochStats train_epoch(const std::vector<EncodedDocument>& train, size_t epoch);

  // Validation metric: perplexity, or exp(mean cross-entropy) for classifier heads.
  double validate(const std::vector<EncodedDocument>& valid) const;

  // Trains until patience or train.max_epochs runs out and leaves the model
  // holding the best parameters. Writes one log line per epoch when `log` is set.
  Checkpoint fit(const std::vector<EncodedDocument>& train, const std::vector<EncodedDocument>& valid,
                 std::ostream* log = nullptr);

  const std::vector<EpochStats>& history() const { return history_; }
  OptimizerState& optimizer() { return optimizer_; }

 private:
  SequenceModel& model_;
  const Vocabulary& vocab_;
  OptimizerState optimizer_;
  Rng order_;
  std::vector<EpochStats> history_;
};

// epoch, J, L_w, L_q, L_c, valid ppl, seconds; TAB-separated, no header.
void write_log_line(std::ostream& out, const EpochStats& s);

}  // namespace ssdvae

#endif  // SSDVAE_TRAINER_H_
