// SPDX-License-Identifier: Apache-2.0

#include "ssdvae/inc.h"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "ssdvae/tensor.h"

namespace ssdvae {

namespace {

constexpr const char* kOptionSeparator = " ||| ";
constexpr size_t kMaxRedraws = 1000;

std::vector<std::string> split_ws(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

}  // namespace

std::vector<IncSample> build_inc(const std::vector<EventDocument>& corpus, size_t num_samples, Rng& rng) {
  std::vector<size_t> eligible;
  for (size_t d = 0; d < corpus.size(); ++d) {
    if (corpus[d].events.size() >= kIncEvents) eligible.push_back(d);
  }
  if (eligible.size() < kIncOptions) {
    throw CorpusError("build_inc: need at least 6 documents with at least 6 events, found " +
                      std::to_string(eligible.size()));
  }
  std::vector<IncSample> out;
  out.reserve(num_samples);
  for (size_t n = 0; n < num_samples; ++n) {
    const size_t source = eligible[rng.below(eligible.size())];
    std::vector<EventTuple> gold(corpus[source].events.begin(), corpus[source].events.begin() + kIncEvents);
    std::vector<std::vector<EventTuple>> options = {gold};
    size_t redraws = 0;
    while (options.size() < kIncOptions) {
      std::vector<EventTuple> option = {gold[0]};
      for (size_t m = 1; m < kIncEvents; ++m) {
        size_t other = source;
        while (other == source) other = eligible[rng.below(eligible.size())];
        const auto& evs = corpus[other].events;
        option.push_back(evs[rng.below(evs.size())]);
      }
      if (std::find(options.begin(), options.end(), option) != options.end()) {
        if (++redraws > kMaxRedraws) throw CorpusError("build_inc: corpus too repetitive for distinct distractors");
        continue;
      }
      options.push_back(std::move(option));
    }
    std::vector<size_t> order(kIncOptions);
    for (size_t i = 0; i < kIncOptions; ++i) order[i] = i;
    rng.shuffle(order.begin(), order.end());
    IncSample s;
    for (size_t i = 0; i < kIncOptions; ++i) {
      s.options.push_back(options[order[i]]);
      if (order[i] == 0) s.gold = i;
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::string serialize_inc_sample(const IncSample& s) {
  std::string line = std::to_string(s.gold) + "\t";
  for (size_t i = 0; i < s.options.size(); ++i) {
    if (i > 0) line += kOptionSeparator;
    bool first = true;
    for (const auto& ev : s.options[i]) {
      for (const auto& tok : ev) {
        if (!first) line += ' ';
        line += tok;
        first = false;
      }
    }
  }
  return line;
}

IncSample parse_inc_line(const std::string& line) {
  const auto tab = line.find('\t');
  if (tab == std::string::npos) throw CorpusError("expected gold index and options separated by a TAB");
  IncSample s;
  const std::string gold = line.substr(0, tab);
  try {
    size_t used = 0;
    const long g = std::stol(gold, &used);
    if (used != gold.size() || g < 0) throw std::invalid_argument(gold);
    s.gold = static_cast<size_t>(g);
  } catch (const std::exception&) {
    throw CorpusError("bad gold index '" + gold + "'");
  }
  std::string rest = line.substr(tab + 1);
  size_t pos = 0;
  while (true) {
    const auto next = rest.find("|||", pos);
    const std::string part = rest.substr(pos, next == std::string::npos ? std::string::npos : next - pos);
    const auto toks = split_ws(part);
    if (toks.size() != kIncEvents * kSlotsPerEvent) {
      throw CorpusError("option " + std::to_string(s.options.size()) + " has " + std::to_string(toks.size()) +
                        " tokens, expected 24");
    }
    std::vector<EventTuple> option(kIncEvents);
    for (size_t i = 0; i < toks.size(); ++i) option[i / kSlotsPerEvent][i % kSlotsPerEvent] = toks[i];
    s.options.push_back(std::move(option));
    if (next == std::string::npos) break;
    pos = next + 3;
  }
  if (s.options.size() != kIncOptions) throw CorpusError("expected 6 options, found " + std::to_string(s.options.size()));
  if (s.gold >= kIncOptions) throw CorpusError("gold index out of range");
  for (const auto& o : s.options) {
    if (o[0] != s.options[0][0]) throw CorpusError("options do not share their first event");
  }
  return s;
}

ParsedInc read_inc(std::istream& in) {
  ParsedInc out;
  std::string line;
  size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    try {
      out.samples.push_back(parse_inc_line(line));
    } catch (const CorpusError& e) {
      out.diagnostics.push_back({n, e.what()});
    }
  }
  return out;
}

ParsedInc read_inc(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CorpusError("cannot open cloze file: " + path);
  return read_inc(in);
}

void write_inc(std::ostream& out, const std::vector<IncSample>& samples) {
  for (const auto& s : samples) out << serialize_inc_sample(s) << '\n';
}

void write_inc(const std::string& path, const std::vector<IncSample>& samples) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CorpusError("cannot write cloze file: " + path);
  write_inc(out, samples);
}

EventDocument option_document(const std::vector<EventTuple>& option) {
  EventDocument d;
  d.events = option;
  d.frames.assign(option.size(), std::nullopt);
  return d;
}

}  // namespace ssdvae
