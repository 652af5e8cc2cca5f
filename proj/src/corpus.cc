// SPDX-License-Identifier: Apache-2.0

#include "ssdvae/corpus.h"

#include <algorithm>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace ssdvae {

namespace {

std::vector<std::string> split_spaces(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

// Frequency-descending, then lexicographic.
std::vector<std::string> ranked(const std::map<std::string, size_t>& counts) {
  std::vector<std::pair<std::string, size_t>> items(counts.begin(), counts.end());
  std::stable_sort(items.begin(), items.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> out;
  out.reserve(items.size());
  for (auto& [tok, n] : items) out.push_back(tok);
  return out;
}

}  // namespace

Vocabulary::Vocabulary() {
  for (const char* t : {"<unk>", "<s>", "None", "<tup>"}) add_token(t);
}

int Vocabulary::add_token(const std::string& token) {
  auto it = token_index_.find(token);
  if (it != token_index_.end()) return it->second;
  const int id = static_cast<int>(tokens_.size());
  tokens_.push_back(token);
  token_index_.emplace(token, id);
  return id;
}

int Vocabulary::add_frame(const std::string& label) {
  auto it = frame_index_.find(label);
  if (it != frame_index_.end()) return it->second;
  const int id = static_cast<int>(frames_.size());
  frames_.push_back(label);
  frame_index_.emplace(label, id);
  return id;
}

int Vocabulary::id(const std::string& token) const {
  const int i = find(token);
  return i < 0 ? kUnknown : i;
}

int Vocabulary::find(const std::string& token) const {
  auto it = token_index_.find(token);
  return it == token_index_.end() ? -1 : it->second;
}

int Vocabulary::frame_id(const std::string& label) const {
  auto it = frame_index_.find(label);
  return it == frame_index_.end() ? -1 : it->second;
}

void Vocabulary::write(std::ostream& out) const {
  out << "tokens " << tokens_.size() << '\n';
  for (const auto& t : tokens_) out << t << '\n';
  out << "frames " << frames_.size() << '\n';
  for (const auto& f : frames_) out << f << '\n';
}

Vocabulary Vocabulary::read(std::istream& in) {
  Vocabulary v;
  std::string tag;
  size_t n = 0;
  if (!(in >> tag >> n) || tag != "tokens") throw CorpusError("malformed vocabulary header");
  in.ignore(1);
  std::string line;
  for (size_t i = 0; i < n; ++i) {
    if (!std::getline(in, line)) throw CorpusError("truncated vocabulary");
    if (i < kReserved) {
      if (line != v.tokens_[i]) throw CorpusError("vocabulary reserved entries differ");
      continue;
    }
    v.add_token(line);
  }
  if (!(in >> tag >> n) || tag != "frames") throw CorpusError("malformed vocabulary frame header");
  in.ignore(1);
  for (size_t i = 0; i < n; ++i) {
    if (!std::getline(in, line)) throw CorpusError("truncated frame inventory");
    v.add_frame(line);
  }
  return v;
}

Vocabulary build_vocab(const std::vector<EventDocument>& corpus, size_t max_size, size_t max_frames) {
  if (max_size <= Vocabulary::kReserved) {
    throw ContractError("vocabulary size must exceed the number of reserved tokens");
  }
  Vocabulary vocab;
  std::map<std::string, size_t> token_counts;
  std::map<std::string, size_t> frame_counts;
  for (const auto& doc : corpus) {
    for (const auto& ev : doc.events) {
      for (const auto& tok : ev) {
        if (vocab.find(tok) < 0) ++token_counts[tok];
      }
    }
    for (const auto& f : doc.frames) {
      if (f) ++frame_counts[*f];
    }
  }
  const std::vector<std::string> tokens = ranked(token_counts);
  const size_t keep = std::min(tokens.size(), max_size - Vocabulary::kReserved);
  for (size_t i = 0; i < keep; ++i) vocab.add_token(tokens[i]);
  const std::vector<std::string> frames = ranked(frame_counts);
  if (max_frames != 0 && frames.size() > max_frames) {
    throw ContractError("corpus has " + std::to_string(frames.size()) + " frame labels but F = " +
                        std::to_string(max_frames));
  }
  for (const auto& f : frames) vocab.add_frame(f);
  return vocab;
}

EventDocument parse_document_line(const std::string& line, const Vocabulary* frames) {
  const auto tab = line.find('\t');
  if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos) {
    throw CorpusError("expected exactly two TAB-separated fields");
  }
  const std::vector<std::string> labels = split_spaces(line.substr(0, tab));
  const std::vector<std::string> tokens = split_spaces(line.substr(tab + 1));
  if (labels.empty()) throw CorpusError("no frame field entries");
  if (tokens.size() % kSlotsPerEvent != 0) {
    throw CorpusError("token count " + std::to_string(tokens.size()) + " is not a multiple of 4");
  }
  if (tokens.size() / kSlotsPerEvent != labels.size()) {
    throw CorpusError(std::to_string(labels.size()) + " frame labels for " +
                      std::to_string(tokens.size() / kSlotsPerEvent) + " events");
  }
  EventDocument doc;
  for (size_t m = 0; m < labels.size(); ++m) {
    std::array<std::string, kSlotsPerEvent> ev;
    for (size_t s = 0; s < kSlotsPerEvent; ++s) ev[s] = tokens[m * kSlotsPerEvent + s];
    doc.events.push_back(std::move(ev));
    if (labels[m] == "-") {
      doc.frames.emplace_back(std::nullopt);
    } else {
      if (frames && frames->frame_id(labels[m]) < 0) throw CorpusError("unknown frame label '" + labels[m] + "'");
      doc.frames.emplace_back(labels[m]);
    }
  }
  return doc;
}

std::string serialize_document(const EventDocument& doc) {
  std::string out;
  for (size_t m = 0; m < doc.frames.size(); ++m) {
    if (m) out += ' ';
    out += doc.frames[m] ? *doc.frames[m] : std::string("-");
  }
  out += '\t';
  bool first = true;
  for (const auto& ev : doc.events) {
    for (const auto& tok : ev) {
      if (!first) out += ' ';
      out += tok;
      first = false;
    }
  }
  return out;
}

ParsedCorpus parse_corpus(std::istream& in, const Vocabulary* frames) {
  ParsedCorpus out;
  std::string line;
  while (std::getline(in, line)) {
    ++out.lines_read;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    try {
      out.documents.push_back(parse_document_line(line, frames));
    } catch (const CorpusError& e) {
      out.diagnostics.push_back({out.lines_read, e.what()});
    }
  }
  if (out.lines_read > 0 && out.diagnostics.size() * 100 > out.lines_read) {
    const auto& d = out.diagnostics.front();
    throw CorpusError(std::to_string(out.diagnostics.size()) + " of " + std::to_string(out.lines_read) +
                      " lines malformed (first at line " + std::to_string(d.line) + ": " + d.message + ")");
  }
  return out;
}

ParsedCorpus parse_corpus(const std::string& path, const Vocabulary* frames) {
  std::ifstream in(path);
  if (!in) throw CorpusError("cannot open corpus: " + path);
  return parse_corpus(in, frames);
}

void write_corpus(std::ostream& out, const std::vector<EventDocument>& docs) {
  for (const auto& d : docs) out << serialize_document(d) << '\n';
}

void write_corpus(const std::string& path, const std::vector<EventDocument>& docs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CorpusError("cannot write corpus: " + path);
  write_corpus(out, docs);
}

size_t ObservationMask::num_observed() const {
  return static_cast<size_t>(std::count_if(observed.begin(), observed.end(), [](int k) { return k >= 0; }));
}

Matrix ObservationMask::to_matrix(size_t num_frames) const {
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(observed.size()), static_cast<Eigen::Index>(num_frames));
  for (size_t m = 0; m < observed.size(); ++m) {
    if (observed[m] >= static_cast<int>(num_frames)) throw ContractError("observed frame index exceeds F");
    if (observed[m] >= 0) out(static_cast<Eigen::Index>(m), observed[m]) = 1.0;
  }
  return out;
}

ObservationMask mask_frames(const std::vector<int>& gold_frames, double epsilon, Rng& rng) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw ContractError("mask_frames: epsilon must lie in [0, 1]");
  ObservationMask mask;
  mask.observed.reserve(gold_frames.size());
  for (int gold : gold_frames) {
    const double u = rng.uniform();
    mask.observed.push_back(gold >= 0 && u < epsilon ? gold : -1);
  }
  return mask;
}

EncodedDocument encode_document(const EventDocument& doc, const Vocabulary& vocab, const Layout& layout) {
  EncodedDocument out;
  out.num_events = doc.num_events();
  out.tokens.reserve(layout.tokens_for(out.num_events));
  for (size_t m = 0; m < doc.events.size(); ++m) {
    if (layout.tuple_separator && m > 0) out.tokens.push_back(Vocabulary::kTuple);
    for (const auto& tok : doc.events[m]) out.tokens.push_back(vocab.id(tok));
  }
  for (const auto& f : doc.frames) out.frames.push_back(f ? vocab.frame_id(*f) : -1);
  return out;
}

std::vector<EncodedDocument> encode_corpus(const std::vector<EventDocument>& docs, const Vocabulary& vocab,
                                           const Layout& layout) {
  std::vector<EncodedDocument> out;
  out.reserve(docs.size());
  for (const auto& d : docs) out.push_back(encode_document(d, vocab, layout));
  return out;
}

}  // namespace ssdvae
