// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <set>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "ssdvae/eval.h"
#include "ssdvae/optim.h"
#include "toy.h"

using namespace ssdvae;

namespace {

struct Data {
  Vocabulary vocab;
  std::vector<EncodedDocument> docs;
  std::vector<EventDocument> raw;
  Data() {
    SyntheticCorpus c = synth_generate(toy::spec());
    raw = c.train;
    vocab = build_vocab(c.train, 40, 3);
    docs = encode_corpus(c.valid, vocab);
  }
};

std::vector<Matrix> values(const SequenceModel& m) {
  std::vector<Matrix> out;
  for (size_t i = 0; i < m.params().size(); ++i) out.push_back(m.params().at(i).value());
  return out;
}

std::unique_ptr<SequenceModel> random_model(const Vocabulary& vocab, ModelKind kind = ModelKind::kVae) {
  Config c = toy::config(3, 3);
  c.model.kind = kind;
  auto m = make_model(c, vocab.size());
  Rng rng(9);
  randomize_parameters(m->params(), 0.5, rng);
  return m;
}

}  // namespace

TEST_CASE("zero-weight models have perplexity equal to the vocabulary size") {
  Data d;
  for (auto kind : {ModelKind::kVae, ModelKind::kRnnlm, ModelKind::kRnnlmRole}) {
    Config c = toy::config(3, 3);
    c.model.kind = kind;
    auto m = make_model(c, d.vocab.size());
    toy::zero_params(m->params());
    CHECK(perplexity(*m, d.docs, EvalOptions{}) == doctest::Approx(static_cast<double>(d.vocab.size())));
  }
}

TEST_CASE("perplexity pools tokens across documents") {
  Data d;
  auto m = random_model(d.vocab);
  EvalOptions o;
  std::vector<EncodedDocument> two{d.docs[0], d.docs[1]};
  DocumentScores s = score_documents(*m, two, o);
  const double tokens = static_cast<double>(two[0].tokens.size() + two[1].tokens.size());
  CHECK(perplexity(*m, two, o) == doctest::Approx(std::exp((s.nll[0] + s.nll[1]) / tokens)).epsilon(1e-14));
  // Pooling is not the mean of per-document perplexities in general.
  CHECK(s.tokens == two[0].tokens.size() + two[1].tokens.size());
}

TEST_CASE("evaluation is read-only and repeatable") {
  Data d;
  auto m = random_model(d.vocab);
  const auto before = values(*m);
  EvalOptions o;
  const double a = perplexity(*m, d.docs, o);
  const auto p1 = predict_frames(*m, d.docs, o);
  CHECK(values(*m) == before);
  CHECK(perplexity(*m, d.docs, o) == a);
  CHECK(predict_frames(*m, d.docs, o) == p1);
  o.seed = 8;
  CHECK(perplexity(*m, d.docs, o) != a);
}

TEST_CASE("batch size and thread count do not change results") {
  Data d;
  auto m = random_model(d.vocab);
  EvalOptions base;
  base.chains = 2;
  const DocumentScores ref = score_documents(*m, d.docs, base);
  for (size_t batch : {1, 7, 100}) {
    for (size_t threads : {1, 3}) {
      EvalOptions o = base;
      o.batch = batch;
      o.threads = threads;
      const DocumentScores s = score_documents(*m, d.docs, o);
      REQUIRE(s.nll.size() == ref.nll.size());
      for (size_t i = 0; i < s.nll.size(); ++i) CHECK(std::abs(s.nll[i] - ref.nll[i]) < 1e-12);
    }
  }
}

TEST_CASE("inverse narrative cloze scoring") {
  SUBCASE("hand example with a tie") {
    std::vector<std::array<double, kIncOptions>> scores{
        {3.0, 1.0, 2.0, 4.0, 5.0, 6.0},
        {1.0, 2.0, 0.5, 0.5, 3.0, 3.0},
        {2.0, 2.0, 2.0, 2.0, 2.0, 2.0},
    };
    const std::vector<size_t> gold{1, 3, 0};
    IncResult r = score_inc(scores, gold);
    CHECK(r.predictions == std::vector<size_t>{1, 2, 0});
    CHECK(r.correct == 2);
    CHECK(r.ties == 2);
    CHECK(r.accuracy == doctest::Approx(2.0 / 3.0));
  }
  SUBCASE("oracle and random scorers") {
    Rng rng(3);
    std::vector<std::array<double, kIncOptions>> oracle, random;
    std::vector<size_t> gold;
    for (int i = 0; i < 2000; ++i) {
      const size_t g = rng.below(kIncOptions);
      gold.push_back(g);
      std::array<double, kIncOptions> o{}, r{};
      for (size_t k = 0; k < kIncOptions; ++k) {
        o[k] = k == g ? 0.0 : 1.0;
        r[k] = rng.uniform();
      }
      oracle.push_back(o);
      random.push_back(r);
    }
    CHECK(score_inc(oracle, gold).accuracy == 1.0);
    CHECK(std::abs(score_inc(random, gold).accuracy - 1.0 / 6.0) < 0.02);
  }
  CHECK_THROWS_AS(score_inc({}, std::vector<size_t>{1}), ContractError);
}

TEST_CASE("model-based cloze runs over option documents") {
  Data d;
  auto m = random_model(d.vocab);
  SyntheticSpec s = toy::spec(3, 6);
  Rng rng(4);
  auto samples = build_inc(synth_documents(s, "inc", 40, 6), 30, rng);
  IncResult r = inc_accuracy(*m, d.vocab, samples, EvalOptions{});
  CHECK(r.total == 30);
  CHECK(r.predictions.size() == 30);
  CHECK(r.accuracy >= 0.0);
  CHECK(r.accuracy <= 1.0);
  CHECK(inc_accuracy(*m, d.vocab, samples, EvalOptions{}).predictions == r.predictions);
}

TEST_CASE("classification metrics") {
  const std::vector<int> pred{1, 2, 2}, gold{1, 1, 2};
  ClassificationMetrics m = classification_metrics(pred, gold);
  CHECK(m.accuracy == doctest::Approx(2.0 / 3.0));
  CHECK(m.macro_precision == doctest::Approx(0.75));
  CHECK(m.macro_recall == doctest::Approx(0.75));
  CHECK(m.macro_f1 == doctest::Approx(2.0 / 3.0));
  CHECK(m.classes == 2);

  ClassificationMetrics perfect = classification_metrics(gold, gold);
  CHECK(perfect.accuracy == 1.0);
  CHECK(perfect.macro_f1 == 1.0);
  const std::vector<int> one{4, 4, 4};
  CHECK(classification_metrics(one, one).macro_f1 == 1.0);
  CHECK_THROWS_AS(classification_metrics(one, std::vector<int>{1}), ContractError);
}

TEST_CASE("frame predictions come from posteriors or heads") {
  Data d;
  auto vae = random_model(d.vocab);
  for (int f : predict_frames(*vae, d.docs, EvalOptions{})) {
    CHECK(f >= 0);
    CHECK(f < 3);
  }
  auto lm = random_model(d.vocab, ModelKind::kRnnlm);
  CHECK_THROWS_AS(predict_frames(*lm, d.docs, EvalOptions{}), ContractError);
}

TEST_CASE("top-k ordering") {
  const std::vector<double> s{0.1, 0.5, 0.5, 0.9, 0.2};
  auto t = top_k(s, 3);
  REQUIRE(t.size() == 3);
  CHECK(t[0].index == 3);
  CHECK(t[1].index == 1);
  CHECK(t[2].index == 2);
  CHECK(top_k(s, 10).size() == 5);
}

TEST_CASE("cluster report") {
  Data d;
  auto m = random_model(d.vocab);
  auto& vae = dynamic_cast<FrameVae&>(*m);
  ClusterReport r = cluster_report(vae, d.vocab, d.docs, 2, false, EvalOptions{});
  std::set<int> seen;
  for (const auto& doc : d.docs) seen.insert(doc.tokens.begin(), doc.tokens.end());
  CHECK(r.token_frames.size() == seen.size());
  for (const auto& row : r.token_frames) {
    CHECK(row.top.size() == 2);
    CHECK(row.top[0].score >= row.top[1].score);
    CHECK(std::isfinite(row.top[0].score));
  }
  CHECK(!r.frame_tokens.empty());
  for (const auto& row : r.frame_tokens) CHECK(row.top.size() == 2);

  toy::zero_params(m->params());
  ClusterReport flat = cluster_report(vae, d.vocab, d.docs, 3, true, EvalOptions{});
  for (const auto& row : flat.token_frames) {
    CHECK(row.top[0].score == 0.0);
    CHECK(row.top[0].index == 0);
  }
  CHECK_THROWS_AS(cluster_report(vae, d.vocab, d.docs, 0, false, EvalOptions{}), ContractError);

  std::ostringstream out;
  write_cluster_rows(out, {{"eat", 4, {{1, 0.25}, {0, 0.125}}}}, {"F0", "F1"});
  CHECK(out.str() == "eat\tF1:0.25\tF0:0.125\n");
}

TEST_CASE("metric lines") {
  std::ostringstream out;
  write_metrics(out, {{"ppl", 12.5}, {"inc_acc", 1.0 / 3.0}});
  CHECK(out.str() == "ppl\t12.5\ninc_acc\t0.3333333333\n");
}
