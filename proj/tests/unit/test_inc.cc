// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "ssdvae/inc.h"
#include "ssdvae/synth.h"
#include "toy.h"

using namespace ssdvae;

namespace {

std::vector<EventDocument> inc_source(size_t docs, uint64_t seed = 5) {
  SyntheticSpec s = toy::spec(3, 6, seed);
  return synth_documents(s, "inc", docs, 6);
}

}  // namespace

TEST_CASE("construction contract") {
  auto corpus = inc_source(50);
  Rng rng(1);
  auto samples = build_inc(corpus, 200, rng);
  REQUIRE(samples.size() == 200);
  for (const auto& s : samples) {
    REQUIRE(s.options.size() == kIncOptions);
    CHECK(s.gold < kIncOptions);
    for (size_t i = 0; i < kIncOptions; ++i) {
      CHECK(s.options[i].size() == kIncEvents);
      CHECK(s.options[i][0] == s.options[0][0]);
      for (size_t j = i + 1; j < kIncOptions; ++j) CHECK(s.options[i] != s.options[j]);
    }
    // The gold option is the opening of some source document.
    bool found = false;
    for (const auto& d : corpus) {
      if (std::equal(s.options[s.gold].begin(), s.options[s.gold].end(), d.events.begin())) found = true;
    }
    CHECK(found);
  }
}

TEST_CASE("gold position is uniform") {
  auto corpus = inc_source(100);
  Rng rng(2);
  auto samples = build_inc(corpus, 2000, rng);
  std::vector<double> hist(kIncOptions, 0.0);
  for (const auto& s : samples) hist[s.gold] += 1.0;
  for (double h : hist) CHECK(std::abs(h / 2000.0 - 1.0 / 6.0) < 0.03);
}

TEST_CASE("insufficient corpus") {
  auto corpus = inc_source(5);
  Rng rng(3);
  CHECK_THROWS_AS(build_inc(corpus, 1, rng), CorpusError);
  SyntheticSpec s = toy::spec(3, 5);
  auto short_docs = synth_documents(s, "inc", 50, 5);
  CHECK_THROWS_AS(build_inc(short_docs, 1, rng), CorpusError);
}

TEST_CASE("file round trip and diagnostics") {
  auto corpus = inc_source(30);
  Rng rng(4);
  auto samples = build_inc(corpus, 40, rng);
  std::ostringstream out;
  write_inc(out, samples);
  std::istringstream in(out.str());
  ParsedInc parsed = read_inc(in);
  CHECK(parsed.samples == samples);
  CHECK(parsed.diagnostics.empty());

  const std::string line = serialize_inc_sample(samples[0]);
  CHECK(parse_inc_line(line) == samples[0]);
  CHECK(line.find(" ||| ") != std::string::npos);
  CHECK_THROWS_AS(parse_inc_line("x\t" + line.substr(line.find('\t') + 1)), CorpusError);
  CHECK_THROWS_AS(parse_inc_line("7\t" + line.substr(line.find('\t') + 1)), CorpusError);
  CHECK_THROWS_AS(parse_inc_line(line.substr(0, line.rfind(" ||| "))), CorpusError);
  CHECK_THROWS_AS(parse_inc_line(line + " extra"), CorpusError);
  CHECK_THROWS_AS(parse_inc_line("no tab"), CorpusError);

  IncSample mismatched = samples[0];
  mismatched.options[3][0][0] = "different";
  CHECK_THROWS_AS(parse_inc_line(serialize_inc_sample(mismatched)), CorpusError);

  EventDocument d = option_document(samples[0].options[1]);
  CHECK(d.num_events() == kIncEvents);
  for (const auto& f : d.frames) CHECK(!f.has_value());
}

TEST_CASE("hand-written file") {
  std::string opt_a, opt_b;
  for (int m = 0; m < 6; ++m) {
    opt_a += (m ? " " : "") + std::string("eat man food None");
    opt_b += (m ? " " : "") + std::string(m == 0 ? "eat man food None" : "run dog park fast");
  }
  std::string line = "2\t";
  for (int i = 0; i < 6; ++i) line += (i ? " ||| " : "") + (i == 2 ? opt_a : opt_b + (i > 2 ? "" : ""));
  IncSample s = parse_inc_line(line);
  CHECK(s.gold == 2);
  CHECK(s.options[2][5][1] == "man");
  CHECK(s.options[4][5][0] == "run");
}
