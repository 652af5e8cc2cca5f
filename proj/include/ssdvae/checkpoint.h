// SPDX-License-Identifier: Apache-2.0
//
// Single-file binary checkpoints. Layout (little-endian):
//   magic "SSDVAECK" | u32 version | u64 payload bytes | u32 crc32(payload) | payload
// The payload holds, in order: config text, vocabulary text, trainer rng
// state (length-prefixed strings), u64 epoch, f64 best validation metric, the
// parameter table in ParameterSet order (name, rows, cols, values), and the
// Adam state (step, lr, beta1, beta2, epsilon, moments).

#ifndef SSDVAE_CHECKPOINT_H_
#define SSDVAE_CHECKPOINT_H_

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "ssdvae/corpus.h"
#include "ssdvae/model.h"
#include "ssdvae/optim.h"

namespace ssdvae {

inline constexpr uint32_t kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct NamedMatrix {
  std::string name;
  Matrix value;
};

struct Checkpoint {
  uint32_t version = kCheckpointVersion;
  std::string config_text;
  Vocabulary vocab;
  std::vector<NamedMatrix> params;
  OptimizerState optimizer;
  uint64_t epoch = 0;
  double best_metric = 0.0;
  std::string rng_state;
};

std::string encode_checkpoint(const Checkpoint& c);
Checkpoint decode_checkpoint(const std::string& bytes);
void save_checkpoint(const Checkpoint& c, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

Checkpoint snapshot(const SequenceModel& model, const Vocabulary& vocab, const OptimizerState& optimizer,
                    uint64_t epoch, double best_metric, const std::string& rng_state);
// Rebuilds the model described by the checkpoint and copies its parameters.
std::unique_ptr<SequenceModel> restore_model(const Checkpoint& c);
void load_parameters(SequenceModel& model, const std::vector<NamedMatrix>& params);

}  // namespace ssdvae

#endif  // SSDVAE_CHECKPOINT_H_
