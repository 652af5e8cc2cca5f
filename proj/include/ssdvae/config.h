// SPDX-License-Identifier: Apache-2.0
//
// Run configuration. Text form is UTF-8 `key = value` lines with `#`
// comments and dotted keys (model.*, train.*, data.*, synth.*, eval.*).
// Unknown keys are errors. Precedence: flags > config file > defaults.

#ifndef SSDVAE_CONFIG_H_
#define SSDVAE_CONFIG_H_

#include <cstdint>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace ssdvae {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ModelKind { kVae, kRnnlm, kRnnlmRole };
enum class AttentionCombine { kAdditive, kConcat };
enum class TrainTask { kLm, kFrames };

struct ModelConfig {
  ModelKind kind = ModelKind::kVae;
  size_t frames = 500;        // F
  size_t vocab = 40000;       // V
  size_t events = 5;          // M
  size_t embed_dim = 300;     // token embedding width
  size_t frame_dim = 300;     // d_e
  size_t enc_layers = 2;
  size_t enc_hidden = 512;    // per direction; d_h = 2 * enc_hidden
  size_t dec_layers = 2;
  size_t dec_hidden = 512;
  size_t role_dim = 300;
  AttentionCombine attention = AttentionCombine::kAdditive;
  bool tuple_separator = false;
  std::string pretrained;     // optional embedding text file

  size_t encoder_state() const { return 2 * enc_hidden; }
};

struct TrainConfig {
  double epsilon = 0.5;
  double alpha_q = 0.1;
  double alpha_c = 0.1;
  size_t samples = 1;         // S
  double tau = 0.5;
  double tau_decay = 1.0;     // per-epoch multiplicative schedule; 1 = fixed
  double tau_min = 0.5;
  double lr = 1e-3;
  double clip = 5.0;
  size_t batch = 100;
  size_t patience = 10;
  size_t max_epochs = 100;
  uint64_t seed = 1;          // master seed for every substream
  TrainTask task = TrainTask::kLm;
  bool mask_fixed = false;    // draw epsilon-masks once instead of per epoch
  double dropout = 0.15;      // classifier heads only
};

struct DataConfig {
  std::string train;
  std::string valid;
  std::string test;
};

struct SynthConfig {
  size_t frames = 10;
  size_t slot_vocab = 50;
  size_t home_size = 5;
  double home_mass = 0.8;
  double self_loop = 0.6;
  std::string successors = "1,3";
  size_t train_docs = 5000;
  size_t valid_docs = 500;
  size_t test_docs = 500;
  size_t events = 5;
  size_t inc_docs = 500;
  size_t inc_events = 6;
};

struct EvalConfig {
  uint64_t seed = 7;
  size_t samples = 1;         // chains averaged per document
  size_t batch = 100;
  size_t cluster_k = 5;
  bool cluster_max = false;   // aggregate beta_enc by max instead of mean
  size_t inc_samples = 2000;
  double gen_temperature = 1.0;
  size_t gen_events = 3;
};

struct Config {
  ModelConfig model;
  TrainConfig train;
  DataConfig data;
  SynthConfig synth;
  EvalConfig eval;

  // Throws ConfigError for unknown keys or unparsable values.
  void set(const std::string& key, const std::string& value);
  std::string get(const std::string& key) const;
  static bool is_key(const std::string& key);
  static std::vector<std::string> keys();
  static std::string describe(const std::string& key);

  // Applies a config text. `source` names the input in diagnostics.
  void apply_text(std::istream& in, const std::string& source);
  void apply_file(const std::string& path);
  // Canonical text with every key, in documented order.
  std::string to_text() const;
  static Config from_text(const std::string& text);
};

std::string to_string(ModelKind k);
std::string to_string(AttentionCombine a);
std::string to_string(TrainTask t);

}  // namespace ssdvae

#endif  // SSDVAE_CONFIG_H_
