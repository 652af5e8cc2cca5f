// SPDX-License-Identifier: Apache-2.0

#include "ssdvae/eval.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <map>
#include <mutex>
#include <ostream>
#include <thread>

#include "ssdvae/baselines.h"
#include "ssdvae/gumbel.h"
#include "ssdvae/ops.h"

namespace ssdvae {

namespace {

// Batches of documents sharing a layout; order within a layout is preserved.
std::vector<std::vector<size_t>> layout_batches(const std::vector<EncodedDocument>& docs, size_t batch) {
  std::map<std::pair<size_t, size_t>, std::vector<size_t>> groups;
  std::vector<std::pair<size_t, size_t>> order;
  for (size_t i = 0; i < docs.size(); ++i) {
    const auto key = std::make_pair(docs[i].tokens.size(), docs[i].num_events);
    auto [it, inserted] = groups.try_emplace(key);
    if (inserted) order.push_back(key);
    it->second.push_back(i);
  }
  std::vector<std::vector<size_t>> out;
  for (const auto& key : order) {
    const auto& ids = groups[key];
    for (size_t s = 0; s < ids.size(); s += batch) {
      out.emplace_back(ids.begin() + static_cast<std::ptrdiff_t>(s),
                       ids.begin() + static_cast<std::ptrdiff_t>(std::min(ids.size(), s + batch)));
    }
  }
  return out;
}

template <typename Fn>
void run_jobs(size_t jobs, size_t threads, Fn fn) {
  if (threads <= 1 || jobs <= 1) {
    for (size_t j = 0; j < jobs; ++j) fn(j);
    return;
  }
  std::atomic<size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (size_t w = 0; w < std::min(threads, jobs); ++w) {
    pool.emplace_back([&] {
      for (size_t j = next++; j < jobs; j = next++) {
        try {
          fn(j);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

int argmax(const Matrix& row) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < row.cols(); ++i) {
    if (row(0, i) > row(0, best)) best = i;
  }
  return static_cast<int>(best);
}

}  // namespace

EvalOptions eval_options(const Config& config) {
  EvalOptions o;
  o.seed = config.eval.seed;
  o.chains = std::max<size_t>(1, config.eval.samples);
  o.batch = std::max<size_t>(1, config.eval.batch);
  if (const char* env = std::getenv("SSDVAE_THREADS")) {
    const long n = std::strtol(env, nullptr, 10);
    o.threads = n > 0 ? static_cast<size_t>(n) : 1;
  }
  return o;
}

std::vector<std::vector<Matrix>> eval_noise(uint64_t seed, uint64_t doc_index, size_t chains, size_t events,
                                            size_t frames) {
  Rng rng(seed, "eval-gumbel", doc_index);
  std::vector<std::vector<Matrix>> out(chains);
  for (auto& chain : out) {
    for (size_t m = 0; m < events; ++m) chain.push_back(gumbel_noise_matrix(1, static_cast<Eigen::Index>(frames), rng));
  }
  return out;
}

DocumentScores score_documents(const SequenceModel& model, const std::vector<EncodedDocument>& docs,
                               const EvalOptions& options, uint64_t first_index) {
  if (docs.empty()) throw ContractError("evaluation corpus is empty");
  DocumentScores out;
  out.nll.assign(docs.size(), 0.0);
  out.normalized.resize(docs.size());
  out.head_logits.resize(docs.size());
  const auto batches = layout_batches(docs, std::max<size_t>(1, options.batch));
  const size_t frames = model.num_frames();
  const size_t chains = std::max<size_t>(1, options.chains);
  run_jobs(batches.size(), options.threads, [&](size_t j) {
    const auto& ids = batches[j];
    const auto rows = static_cast<Eigen::Index>(ids.size());
    const size_t events = docs[ids[0]].num_events;
    BatchInputs in;
    in.tau = model.config().train.tau;
    for (size_t id : ids) in.docs.push_back(&docs[id]);
    if (model.uses_noise()) {
      in.noise.assign(chains, std::vector<Matrix>(events, Matrix(rows, static_cast<Eigen::Index>(frames))));
      for (Eigen::Index b = 0; b < rows; ++b) {
        const auto noise = eval_noise(options.seed, first_index + ids[static_cast<size_t>(b)], chains, events, frames);
        for (size_t s = 0; s < chains; ++s) {
          for (size_t m = 0; m < events; ++m) in.noise[s][m].row(b) = noise[s][m].row(0);
        }
      }
    }
    Graph g(false);
    BatchOutput res = model.batch_loss(g, in);
    for (Eigen::Index b = 0; b < rows; ++b) {
      const size_t id = ids[static_cast<size_t>(b)];
      out.nll[id] = res.doc_nll[static_cast<size_t>(b)];
      for (const Matrix& m : res.normalized) out.normalized[id].push_back(m.row(b));
      if (res.head_logits.size() > 0) out.head_logits[id] = res.head_logits.row(b);
    }
  });
  for (size_t i = 0; i < docs.size(); ++i) {
    out.total_nll += out.nll[i];
    out.tokens += docs[i].tokens.size();
  }
  return out;
}

double perplexity(const SequenceModel& model, const std::vector<EncodedDocument>& docs, const EvalOptions& options) {
  const DocumentScores s = score_documents(model, docs, options);
  return std::exp(s.total_nll / static_cast<double>(s.tokens));
}

IncResult score_inc(const std::vector<std::array<double, kIncOptions>>& option_scores,
                    std::span<const size_t> gold) {
  if (option_scores.size() != gold.size()) throw ContractError("score_inc: one gold index per sample required");
  IncResult r;
  for (size_t i = 0; i < option_scores.size(); ++i) {
    const auto& s = option_scores[i];
    size_t best = 0;
    bool tie = false;
    for (size_t o = 1; o < kIncOptions; ++o) {
      if (s[o] < s[best]) {
        best = o;
        tie = false;
      } else if (s[o] == s[best]) {
        tie = true;
      }
    }
    r.predictions.push_back(best);
    if (tie) ++r.ties;
    if (best == gold[i]) ++r.correct;
  }
  r.total = option_scores.size();
  r.accuracy = r.total == 0 ? 0.0 : static_cast<double>(r.correct) / static_cast<double>(r.total);
  return r;
}

IncResult inc_accuracy(const SequenceModel& model, const Vocabulary& vocab, const std::vector<IncSample>& samples,
                       const EvalOptions& options) {
  if (samples.empty()) throw ContractError("inc_accuracy: no samples");
  const Layout layout{model.config().model.tuple_separator};
  std::vector<EncodedDocument> docs;
  std::vector<size_t> gold;
  for (const auto& s : samples) {
    for (const auto& o : s.options) docs.push_back(encode_document(option_document(o), vocab, layout));
    gold.push_back(s.gold);
  }
  const DocumentScores scores = score_documents(model, docs, options);
  std::vector<std::array<double, kIncOptions>> per(samples.size());
  for (size_t i = 0; i < samples.size(); ++i) {
    for (size_t o = 0; o < kIncOptions; ++o) {
      const size_t d = i * kIncOptions + o;
      per[i][o] = scores.nll[d] / static_cast<double>(docs[d].tokens.size());
    }
  }
  return score_inc(per, gold);
}

ClassificationMetrics classification_metrics(std::span<const int> predicted, std::span<const int> gold) {
  if (predicted.size() != gold.size()) throw ContractError("classification_metrics: length mismatch");
  ClassificationMetrics m;
  m.count = gold.size();
  if (gold.empty()) return m;
  std::map<int, size_t> tp, pred_count, gold_count;
  size_t correct = 0;
  for (size_t i = 0; i < gold.size(); ++i) {
    ++gold_count[gold[i]];
    ++pred_count[predicted[i]];
    if (predicted[i] == gold[i]) {
      ++correct;
      ++tp[gold[i]];
    }
  }
  m.accuracy = static_cast<double>(correct) / static_cast<double>(gold.size());
  for (const auto& [c, n] : gold_count) {
    const double t = static_cast<double>(tp[c]);
    const double p = pred_count[c] == 0 ? 0.0 : t / static_cast<double>(pred_count[c]);
    const double r = t / static_cast<double>(n);
    m.macro_precision += p;
    m.macro_recall += r;
    m.macro_f1 += (p + r) > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
  }
  m.classes = gold_count.size();
  const double k = static_cast<double>(m.classes);
  m.macro_precision /= k;
  m.macro_recall /= k;
  m.macro_f1 /= k;
  return m;
}

std::vector<int> predict_frames(const SequenceModel& model, const std::vector<EncodedDocument>& docs,
                                const EvalOptions& options) {
  const DocumentScores s = score_documents(model, docs, options);
  std::vector<int> out;
  out.reserve(docs.size());
  for (size_t i = 0; i < docs.size(); ++i) {
    if (!s.normalized[i].empty()) {
      out.push_back(argmax(s.normalized[i][0]));
    } else if (s.head_logits[i].size() > 0) {
      out.push_back(argmax(s.head_logits[i]));
    } else {
      throw ContractError("predict_frames: model exposes neither frame posteriors nor a classification head");
    }
  }
  return out;
}

std::vector<ClusterEntry> top_k(std::span<const double> scores, size_t k) {
  std::vector<ClusterEntry> all;
  all.reserve(scores.size());
  for (size_t i = 0; i < scores.size(); ++i) all.push_back({static_cast<int>(i), scores[i]});
  const size_t n = std::min(k, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n), all.end(),
                    [](const ClusterEntry& a, const ClusterEntry& b) {
                      return a.score != b.score ? a.score > b.score : a.index < b.index;
                    });
  all.resize(n);
  return all;
}

ClusterReport cluster_report(const FrameVae& model, const Vocabulary& vocab, const std::vector<EncodedDocument>& docs,
                             size_t k, bool use_max, const EvalOptions& options) {
  if (k == 0) throw ContractError("cluster_report: k must be at least 1");
  const size_t frames = model.num_frames();
  const size_t v = model.vocab_size();
  const Matrix& w_out = model.encoder().w_out->value();
  const Matrix& dec_out = model.decoder().w_out->value();
  const Matrix& frame_table = model.encoder().frames.weights->value();
  std::vector<Vector> token_acc(v);
  std::vector<size_t> token_n(v, 0);
  std::vector<Vector> frame_acc(frames);
  std::vector<size_t> frame_n(frames, 0);
  auto accumulate = [use_max](Vector& acc, size_t& n, const auto& col) {
    if (n == 0) acc = col;
    else if (use_max) acc = acc.cwiseMax(col);
    else acc += col;
    ++n;
  };
  for (size_t d = 0; d < docs.size(); ++d) {
    const auto& doc = docs[d];
    const Matrix h = model.encode_tokens(doc.tokens);
    const Matrix beta = beta_enc(h, w_out);
    for (size_t t = 0; t < doc.tokens.size(); ++t) {
      const auto tok = static_cast<size_t>(doc.tokens[t]);
      accumulate(token_acc[tok], token_n[tok], Vector(beta.col(static_cast<Eigen::Index>(t))));
    }
    Graph g(false);
    Matrix flat = Eigen::Map<const Matrix>(h.data(), 1, h.size());
    const auto noise = eval_noise(options.seed, d, 1, doc.num_events, frames);
    std::vector<Matrix> observed(doc.num_events, Matrix::Zero(1, static_cast<Eigen::Index>(frames)));
    const auto chain = encode_frames(model.encoder(), g.constant(flat), observed, noise[0], model.config().train.tau);
    for (const auto& st : chain) {
      const Matrix& f = st.sample.value();
      const Vector e = (f * frame_table).row(0).transpose();
      const Vector col = dec_out * e.array().tanh().matrix();
      const auto k_frame = static_cast<size_t>(argmax(f));
      accumulate(frame_acc[k_frame], frame_n[k_frame], col);
    }
  }
  ClusterReport r;
  for (size_t t = 0; t < v; ++t) {
    if (token_n[t] == 0) continue;
    Vector s = use_max ? token_acc[t] : Vector(token_acc[t] / static_cast<double>(token_n[t]));
    r.token_frames.push_back({vocab.token(static_cast<int>(t)), static_cast<int>(t),
                              top_k(std::span<const double>(s.data(), static_cast<size_t>(s.size())), k)});
  }
  for (size_t f = 0; f < frames; ++f) {
    if (frame_n[f] == 0) continue;
    Vector s = use_max ? frame_acc[f] : Vector(frame_acc[f] / static_cast<double>(frame_n[f]));
    const std::string key = f < vocab.num_frame_labels() ? vocab.frame_label(static_cast<int>(f))
                                                         : "#" + std::to_string(f);
    r.frame_tokens.push_back({key, static_cast<int>(f),
                              top_k(std::span<const double>(s.data(), static_cast<size_t>(s.size())), k)});
  }
  return r;
}

void write_cluster_rows(std::ostream& out, const std::vector<ClusterRow>& rows, const std::vector<std::string>& names) {
  char buf[64];
  for (const auto& row : rows) {
    out << row.key;
    for (const auto& e : row.top) {
      std::snprintf(buf, sizeof(buf), "%.6g", e.score);
      const auto idx = static_cast<size_t>(e.index);
      out << '\t' << (idx < names.size() ? names[idx] : "#" + std::to_string(idx)) << ':' << buf;
    }
    out << '\n';
  }
}

void write_metrics(std::ostream& out, const std::vector<std::pair<std::string, double>>& metrics) {
  char buf[64];
  for (const auto& [name, value] : metrics) {
    std::snprintf(buf, sizeof(buf), "%.10g", value);
    out << name << '\t' << buf << '\n';
  }
}

}  // namespace ssdvae
