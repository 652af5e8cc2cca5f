// SPDX-License-Identifier: Apache-2.0
//
// Event-document corpora.
//
// Line format, one document per line:
//   <M frame labels, space separated, '-' when absent> TAB <4M slot tokens>
// Slot order per event is verb subject object modifier; an empty slot holds
// the literal token `None`.

#ifndef SSDVAE_CORPUS_H_
#define SSDVAE_CORPUS_H_

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "ssdvae/rng.h"
#include "ssdvae/tensor.h"

namespace ssdvae {

inline constexpr size_t kSlotsPerEvent = 4;

class CorpusError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EventDocument {
  std::vector<std::array<std::string, kSlotsPerEvent>> events;
  std::vector<std::optional<std::string>> frames;  // one per event

  size_t num_events() const { return events.size(); }
  bool operator==(const EventDocument&) const = default;
};

class Vocabulary {
 public:
  static constexpr int kUnknown = 0;
  static constexpr int kBegin = 1;
  static constexpr int kNone = 2;
  static constexpr int kTuple = 3;
  static constexpr size_t kReserved = 4;

  Vocabulary();

  // Adds a token if absent; returns its index.
  int add_token(const std::string& token);
  int add_frame(const std::string& label);

  // Index of a token, or kUnknown.
  int id(const std::string& token) const;
  // Index of a token, or -1 when absent.
  int find(const std::string& token) const;
  const std::string& token(int id) const { return tokens_.at(static_cast<size_t>(id)); }
  size_t size() const { return tokens_.size(); }

  // Index of a frame label, or -1 when absent.
  int frame_id(const std::string& label) const;
  const std::string& frame_label(int id) const { return frames_.at(static_cast<size_t>(id)); }
  size_t num_frame_labels() const { return frames_.size(); }

  void write(std::ostream& out) const;
  static Vocabulary read(std::istream& in);
  bool operator==(const Vocabulary& o) const { return tokens_ == o.tokens_ && frames_ == o.frames_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> token_index_;
  std::vector<std::string> frames_;
  std::unordered_map<std::string, int> frame_index_;
};

// Keeps the V - 4 most frequent tokens (ties broken lexicographically) plus the
// reserved entries. Frame labels are collected the same way, at most
// `max_frames` of them (0 = unlimited); more distinct labels is an error.
Vocabulary build_vocab(const std::vector<EventDocument>& corpus, size_t max_size, size_t max_frames = 0);

struct LineDiagnostic {
  size_t line = 0;
  std::string message;
};

struct ParsedCorpus {
  std::vector<EventDocument> documents;
  std::vector<LineDiagnostic> diagnostics;
  size_t lines_read = 0;
};

// Parses one line. Throws CorpusError describing the problem.
EventDocument parse_document_line(const std::string& line, const Vocabulary* frames = nullptr);
std::string serialize_document(const EventDocument& doc);

// Malformed lines are skipped with a diagnostic; more than 1% malformed lines
// raises CorpusError. With `frames` given, unknown frame labels are malformed.
ParsedCorpus parse_corpus(std::istream& in, const Vocabulary* frames = nullptr);
ParsedCorpus parse_corpus(const std::string& path, const Vocabulary* frames = nullptr);
void write_corpus(std::ostream& out, const std::vector<EventDocument>& docs);
void write_corpus(const std::string& path, const std::vector<EventDocument>& docs);

// Per-event observation: index of the observed frame, or -1 for I_m = 0.
struct ObservationMask {
  std::vector<int> observed;

  size_t num_observed() const;
  // M x F matrix of one-hot / zero rows.
  Matrix to_matrix(size_t num_frames) const;
};

// Independently per event: observe the gold frame with probability epsilon.
// One uniform draw is consumed per event whether or not it has a frame, so
// masks at different epsilon under the same stream are nested.
ObservationMask mask_frames(const std::vector<int>& gold_frames, double epsilon, Rng& rng);

struct EncodedDocument {
  std::vector<int> tokens;  // decoder/encoder token stream
  std::vector<int> frames;  // gold frame per event, -1 when absent
  size_t num_events = 0;
};

struct Layout {
  bool tuple_separator = false;  // insert <tup> between events
  size_t tokens_for(size_t events) const {
    return tuple_separator ? events * (kSlotsPerEvent + 1) - 1 : events * kSlotsPerEvent;
  }
};

EncodedDocument encode_document(const EventDocument& doc, const Vocabulary& vocab, const Layout& layout = {});
std::vector<EncodedDocument> encode_corpus(const std::vector<EventDocument>& docs, const Vocabulary& vocab,
                                           const Layout& layout = {});

}  // namespace ssdvae

#endif  // SSDVAE_CORPUS_H_
