// SPDX-License-Identifier: Apache-2.0
//
// Trainable sequence models behind one batch interface: the frame VAE and the
// language-model baselines (see baselines.h).

#ifndef SSDVAE_MODEL_H_
#define SSDVAE_MODEL_H_

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ssdvae/config.h"
#include "ssdvae/corpus.h"
#include "ssdvae/decoder.h"
#include "ssdvae/encoder.h"
#include "ssdvae/graph.h"
#include "ssdvae/objective.h"
#include "ssdvae/seqnets.h"

namespace ssdvae {

struct BatchInputs {
  std::vector<const EncodedDocument*> docs;  // equal token and event counts
  std::vector<ObservationMask> masks;        // one per document, or empty for none
  std::vector<std::vector<Matrix>> noise;    // [chain][event], each B x F
  double tau = 0.5;
  bool training = false;
  Rng* dropout = nullptr;  // classifier heads, training only
};

struct BatchOutput {
  Var loss;                   // objective averaged over documents and chains
  LossBreakdown sums;         // components summed over documents, averaged over chains
  std::vector<double> doc_nll;  // per document, averaged over chains
  // Per event, B x F softmax(gamma) of the first chain (frame models only).
  std::vector<Matrix> normalized;
  // B x F classifier logits (frame-classification heads only).
  Matrix head_logits;
};

class SequenceModel {
 public:
  SequenceModel(const Config& config, size_t vocab_size);
  virtual ~SequenceModel() = default;
  SequenceModel(const SequenceModel&) = delete;
  SequenceModel& operator=(const SequenceModel&) = delete;

  virtual BatchOutput batch_loss(Graph& g, const BatchInputs& in) const = 0;
  // Whether batch_loss consumes Gumbel noise.
  virtual bool uses_noise() const { return false; }
  virtual EmbeddingTable& token_embeddings() = 0;

  ParameterSet& params() { return params_; }
  const ParameterSet& params() const { return params_; }
  const Config& config() const { return config_; }
  size_t vocab_size() const { return vocab_size_; }
  size_t num_frames() const { return config_.model.frames; }
  bool frame_task() const { return config_.train.task == TrainTask::kFrames; }

 protected:
  Config config_;
  size_t vocab_size_;
  ParameterSet params_;
};

class FrameVae : public SequenceModel {
 public:
  FrameVae(const Config& config, size_t vocab_size);

  BatchOutput batch_loss(Graph& g, const BatchInputs& in) const override;
  bool uses_noise() const override { return true; }

  const EncoderWeights& encoder() const { return encoder_; }
  const DecoderWeights& decoder() const { return decoder_; }
  const EmbeddingTable& tokens() const { return tokens_; }
  const GruStack& encoder_rnn() const { return encoder_rnn_; }
  const GruStack& decoder_rnn() const { return decoder_rnn_; }
  EmbeddingTable& token_embeddings() override { return tokens_; }

  // T x d_h encoder states of one token sequence.
  Matrix encode_tokens(const std::vector<int>& tokens) const;

 private:
  EmbeddingTable tokens_;
  GruStack encoder_rnn_;
  GruStack decoder_rnn_;
  EncoderWeights encoder_;
  DecoderWeights decoder_;
};

// Builds the model selected by config.model.kind with seeded initialization.
std::unique_ptr<SequenceModel> make_model(const Config& config, size_t vocab_size);

// observed[m][b] from per-document masks; -1 where unobserved.
std::vector<std::vector<int>> observed_indices(const std::vector<ObservationMask>& masks, size_t batch,
                                               size_t events);

// Free-running script generation from one seed event.
struct GeneratedEvent {
  int frame = -1;
  std::array<int, kSlotsPerEvent> tokens{};
};

struct Script {
  int seed_frame = -1;
  std::vector<GeneratedEvent> events;
};

// temperature 0 is greedy: zero Gumbel noise and argmax tokens.
Script generate_script(const FrameVae& model, const std::array<int, kSlotsPerEvent>& seed, size_t num_events,
                       double temperature, Rng& rng);

}  // namespace ssdvae

#endif  // SSDVAE_MODEL_H_
