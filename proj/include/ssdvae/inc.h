// SPDX-License-Identifier: Apache-2.0
//
// Inverse narrative cloze samples: six candidate event sequences of six
// events each that share their first event; exactly one is a real document.

#ifndef SSDVAE_INC_H_
#define SSDVAE_INC_H_

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include "ssdvae/corpus.h"
#include "ssdvae/rng.h"

namespace ssdvae {

inline constexpr size_t kIncOptions = 6;
inline constexpr size_t kIncEvents = 6;

using EventTuple = std::array<std::string, kSlotsPerEvent>;

struct IncSample {
  size_t gold = 0;
  std::vector<std::vector<EventTuple>> options;  // kIncOptions x kIncEvents

  bool operator==(const IncSample&) const = default;
};

// The gold option is the first six events of a random document. Every
// distractor keeps that first event and fills events 2..6 with events taken
// from random positions of other random documents. Options are then shuffled.
std::vector<IncSample> build_inc(const std::vector<EventDocument>& corpus, size_t num_samples, Rng& rng);

std::string serialize_inc_sample(const IncSample& s);
IncSample parse_inc_line(const std::string& line);

struct ParsedInc {
  std::vector<IncSample> samples;
  std::vector<LineDiagnostic> diagnostics;
};
ParsedInc read_inc(std::istream& in);
ParsedInc read_inc(const std::string& path);
void write_inc(std::ostream& out, const std::vector<IncSample>& samples);
void write_inc(const std::string& path, const std::vector<IncSample>& samples);

// Option as an unframed document for scoring.
EventDocument option_document(const std::vector<EventTuple>& option);

}  // namespace ssdvae

#endif  // SSDVAE_INC_H_
