// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end. Every dotted config key is also a flag
// (`--train.epsilon 0.7`); precedence is flags > --config file > defaults, and
// --seed overrides train.seed.

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "ssdvae/baselines.h"
#include "ssdvae/checkpoint.h"
#include "ssdvae/config.h"
#include "ssdvae/corpus.h"
#include "ssdvae/eval.h"
#include "ssdvae/gumbel.h"
#include "ssdvae/inc.h"
#include "ssdvae/model.h"
#include "ssdvae/optim.h"
#include "ssdvae/synth.h"
#include "ssdvae/trainer.h"

namespace fs = std::filesystem;
using namespace ssdvae;

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Common {
  std::string config_path;
  long long seed = -1;
  std::vector<std::string> extras;
};

void apply_overrides(Config& c, const std::vector<std::string>& extras) {
  for (size_t i = 0; i < extras.size(); ++i) {
    std::string key = extras[i];
    if (key.rfind("--", 0) != 0) throw UsageError("unexpected argument '" + key + "'");
    key = key.substr(2);
    std::string value;
    const auto eq = key.find('=');
    if (eq != std::string::npos) {
      value = key.substr(eq + 1);
      key = key.substr(0, eq);
    } else {
      if (i + 1 >= extras.size()) throw UsageError("flag --" + key + " needs a value");
      value = extras[++i];
    }
    if (!Config::is_key(key)) throw ConfigError("unknown flag --" + key);
    c.set(key, value);
  }
}

Config load_config(const Common& o, Config base = {}) {
  Config c = std::move(base);
  if (!o.config_path.empty()) c.apply_file(o.config_path);
  apply_overrides(c, o.extras);
  if (o.seed >= 0) c.train.seed = static_cast<uint64_t>(o.seed);
  return c;
}

std::vector<EventDocument> read_documents(const std::string& path, const Vocabulary* frames = nullptr) {
  ParsedCorpus p = parse_corpus(path, frames);
  for (const auto& d : p.diagnostics) std::cerr << path << ":" << d.line << ": " << d.message << "\n";
  return std::move(p.documents);
}

struct Loaded {
  Checkpoint ckpt;
  Config config;
  std::unique_ptr<SequenceModel> model;
};

Loaded load_model(const std::string& ckpt_path, const Common& o) {
  Loaded l;
  l.ckpt = load_checkpoint(ckpt_path);
  l.model = restore_model(l.ckpt);
  Common no_seed = o;
  if (o.seed >= 0) {
    // At evaluation the seed selects the evaluation stream.
    no_seed.seed = -1;
  }
  l.config = load_config(no_seed, Config::from_text(l.ckpt.config_text));
  if (o.seed >= 0) l.config.eval.seed = static_cast<uint64_t>(o.seed);
  return l;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  return out;
}

void emit(const std::string& out_path, const std::string& text) {
  if (out_path.empty()) {
    std::cout << text;
  } else {
    auto out = open_out(out_path);
    out << text;
  }
}

int cmd_train(const Common& o, const std::string& out_dir) {
  const Config c = load_config(o);
  if (c.data.train.empty() || c.data.valid.empty()) throw UsageError("train needs data.train and data.valid");
  const auto train_docs = read_documents(c.data.train);
  const Vocabulary vocab = build_vocab(train_docs, c.model.vocab, c.model.frames);
  const auto valid_docs = read_documents(c.data.valid, &vocab);
  const Layout layout{c.model.tuple_separator};
  const auto train = encode_corpus(train_docs, vocab, layout);
  const auto valid = encode_corpus(valid_docs, vocab, layout);
  auto model = make_model(c, vocab.size());
  if (!c.model.pretrained.empty()) {
    const size_t n = load_pretrained_embeddings(c.model.pretrained, vocab, model->token_embeddings());
    std::cerr << "loaded " << n << " pretrained vectors\n";
  }
  fs::create_directories(out_dir);
  auto log = open_out((fs::path(out_dir) / "train.log").string());
  Trainer trainer(*model, vocab);
  const Checkpoint best = trainer.fit(train, valid, &log);
  save_checkpoint(best, (fs::path(out_dir) / "model.ckpt").string());
  std::cerr << "best validation metric " << best.best_metric << " at epoch " << best.epoch << "\n";
  return 0;
}

int cmd_eval_ppl(const Common& o, const std::string& ckpt, const std::string& corpus, const std::string& out) {
  Loaded l = load_model(ckpt, o);
  const auto docs = encode_corpus(read_documents(corpus), l.ckpt.vocab, Layout{l.config.model.tuple_separator});
  const double ppl = perplexity(*l.model, docs, eval_options(l.config));
  std::ostringstream s;
  write_metrics(s, {{"ppl", ppl}});
  emit(out, s.str());
  return 0;
}

int cmd_eval_inc(const Common& o, const std::string& ckpt, const std::string& inc_path, const std::string& out) {
  Loaded l = load_model(ckpt, o);
  ParsedInc parsed = read_inc(inc_path);
  for (const auto& d : parsed.diagnostics) std::cerr << inc_path << ":" << d.line << ": skipped: " << d.message << "\n";
  IncResult r = inc_accuracy(*l.model, l.ckpt.vocab, parsed.samples, eval_options(l.config));
  r.skipped = parsed.diagnostics.size();
  std::ostringstream s;
  write_metrics(s, {{"accuracy", r.accuracy},
                    {"samples", static_cast<double>(r.total)},
                    {"ties", static_cast<double>(r.ties)},
                    {"skipped", static_cast<double>(r.skipped)}});
  emit(out, s.str());
  return 0;
}

int cmd_eval_frames(const Common& o, const std::string& ckpt, const std::string& corpus, const std::string& out) {
  Loaded l = load_model(ckpt, o);
  const auto docs = encode_corpus(read_documents(corpus), l.ckpt.vocab, Layout{l.config.model.tuple_separator});
  std::vector<EncodedDocument> labeled;
  std::vector<int> gold;
  for (const auto& d : docs) {
    if (d.num_events != 1) throw UsageError("eval-frames expects single-event documents");
    if (d.frames[0] < 0) continue;
    labeled.push_back(d);
    gold.push_back(d.frames[0]);
  }
  if (labeled.empty()) throw UsageError("eval-frames: no document carries a known frame label");
  const auto pred = predict_frames(*l.model, labeled, eval_options(l.config));
  const ClassificationMetrics m = classification_metrics(pred, gold);
  std::ostringstream s;
  write_metrics(s, {{"accuracy", m.accuracy},
                    {"macro_precision", m.macro_precision},
                    {"macro_f1", m.macro_f1},
                    {"macro_recall", m.macro_recall},
                    {"documents", static_cast<double>(m.count)}});
  emit(out, s.str());
  return 0;
}

int cmd_generate(const Common& o, const std::string& ckpt, const std::string& seed_event, const std::string& out) {
  Loaded l = load_model(ckpt, o);
  auto* vae = dynamic_cast<FrameVae*>(l.model.get());
  if (vae == nullptr) throw UsageError("generate needs a frame model checkpoint");
  std::istringstream in(seed_event);
  std::array<int, kSlotsPerEvent> seed{};
  std::array<std::string, kSlotsPerEvent> words;
  for (size_t s = 0; s < kSlotsPerEvent; ++s) {
    if (!(in >> words[s])) throw UsageError("--event needs exactly 4 tokens");
    seed[s] = l.ckpt.vocab.find(words[s]);
    if (seed[s] < 0) throw UsageError("seed token '" + words[s] + "' is not in the vocabulary");
  }
  std::string extra;
  if (in >> extra) throw UsageError("--event needs exactly 4 tokens");
  Rng rng(l.config.eval.seed, "generate");
  const Script script = generate_script(*vae, seed, l.config.eval.gen_events, l.config.eval.gen_temperature, rng);
  const Vocabulary& v = l.ckpt.vocab;
  auto frame_name = [&](int k) {
    return k < static_cast<int>(v.num_frame_labels()) ? v.frame_label(k) : "#" + std::to_string(k);
  };
  std::ostringstream s;
  s << "[" << frame_name(script.seed_frame) << "]";
  for (const auto& w : words) s << ' ' << w;
  s << '\n';
  for (const auto& ev : script.events) {
    s << "[" << frame_name(ev.frame) << "]";
    for (int t : ev.tokens) s << ' ' << v.token(t);
    s << '\n';
  }
  emit(out, s.str());
  return 0;
}

int cmd_synth(const Common& o, const std::string& out_dir) {
  const Config c = load_config(o);
  const SyntheticSpec spec = SyntheticSpec::from_config(c.synth, c.train.seed);
  fs::create_directories(out_dir);
  const fs::path dir(out_dir);
  const SyntheticCorpus corpus = synth_generate(spec);
  write_corpus((dir / "train.txt").string(), corpus.train);
  write_corpus((dir / "valid.txt").string(), corpus.valid);
  write_corpus((dir / "test.txt").string(), corpus.test);
  write_corpus((dir / "inc_source.txt").string(),
               synth_documents(spec, "inc", c.synth.inc_docs, c.synth.inc_events));
  auto cfg = open_out((dir / "spec.cfg").string());
  cfg << c.to_text();
  std::ostringstream s;
  write_metrics(s, {{"oracle_ppl_valid", hmm_oracle_ppl(spec, corpus.valid)},
                    {"oracle_ppl_test", hmm_oracle_ppl(spec, corpus.test)}});
  auto report = open_out((dir / "oracle.txt").string());
  report << s.str();
  return 0;
}

int cmd_build_inc(const Common& o, const std::string& corpus, const std::string& out) {
  const Config c = load_config(o);
  const auto docs = read_documents(corpus);
  Rng rng(c.train.seed, "build-inc");
  write_inc(out, build_inc(docs, c.eval.inc_samples, rng));
  return 0;
}

int cmd_clusters(const Common& o, const std::string& ckpt, const std::string& corpus, const std::string& out) {
  Loaded l = load_model(ckpt, o);
  auto* vae = dynamic_cast<FrameVae*>(l.model.get());
  if (vae == nullptr) throw UsageError("clusters needs a frame model checkpoint");
  const Vocabulary& v = l.ckpt.vocab;
  const auto docs = encode_corpus(read_documents(corpus), v, Layout{l.config.model.tuple_separator});
  const ClusterReport r =
      cluster_report(*vae, v, docs, l.config.eval.cluster_k, l.config.eval.cluster_max, eval_options(l.config));
  std::vector<std::string> frame_names, token_names;
  for (size_t k = 0; k < vae->num_frames(); ++k) {
    frame_names.push_back(k < v.num_frame_labels() ? v.frame_label(static_cast<int>(k)) : "#" + std::to_string(k));
  }
  for (size_t t = 0; t < v.size(); ++t) token_names.push_back(v.token(static_cast<int>(t)));
  if (out.empty()) {
    write_cluster_rows(std::cout, r.token_frames, frame_names);
    write_cluster_rows(std::cout, r.frame_tokens, token_names);
  } else {
    auto a = open_out(out + ".tokens.tsv");
    write_cluster_rows(a, r.token_frames, frame_names);
    auto b = open_out(out + ".frames.tsv");
    write_cluster_rows(b, r.frame_tokens, token_names);
  }
  return 0;
}

// Finite-difference check of the full objective on a random toy problem.
int cmd_gradcheck(const Common& o, const std::string& out) {
  Config base;
  base.model.frames = 5;
  base.model.vocab = 20;
  base.model.events = 3;
  base.model.embed_dim = 8;
  base.model.frame_dim = 8;
  base.model.enc_hidden = 4;
  base.model.dec_hidden = 8;
  base.model.enc_layers = 1;
  base.model.dec_layers = 1;
  base.model.role_dim = 4;
  const Config c = load_config(o, base);
  Rng rng(c.train.seed, "gradcheck");
  const size_t v = c.model.vocab;
  std::vector<EncodedDocument> docs(2);
  std::vector<ObservationMask> masks;
  for (auto& d : docs) {
    d.num_events = c.model.events;
    for (size_t t = 0; t < Layout{c.model.tuple_separator}.tokens_for(d.num_events); ++t) {
      d.tokens.push_back(static_cast<int>(Vocabulary::kReserved + rng.below(v - Vocabulary::kReserved)));
    }
    for (size_t m = 0; m < d.num_events; ++m) d.frames.push_back(static_cast<int>(rng.below(c.model.frames)));
    masks.push_back(mask_frames(d.frames, 0.5, rng));
  }
  auto model = make_model(c, v);
  randomize_parameters(model->params(), 1.0, rng);
  BatchInputs in;
  in.tau = c.train.tau;
  for (const auto& d : docs) in.docs.push_back(&d);
  in.masks = masks;
  if (model->uses_noise()) {
    in.noise.resize(std::max<size_t>(1, c.train.samples));
    for (auto& chain : in.noise) {
      for (size_t m = 0; m < c.model.events; ++m) {
        chain.push_back(gumbel_noise_matrix(2, static_cast<Eigen::Index>(c.model.frames), rng));
      }
    }
  }
  const GradCheckReport report = finite_difference_check(
      [&](Graph& g) { return model->batch_loss(g, in).loss; }, model->params(), 1e-5);
  std::ostringstream s;
  for (const auto& e : report.entries) s << e.name << '\t' << e.max_relative_error << '\t' << e.checked << '\n';
  s << "max\t" << report.max_relative_error() << '\n';
  emit(out, s.str());
  return report.max_relative_error() < 1e-4 ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semi-supervised frame VAE for event scripts"};
  app.require_subcommand(1);
  Common common;
  std::string out, ckpt, corpus, inc_path, event;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config_path, "config file of key = value lines");
    sub->add_option("--seed", common.seed, "overrides train.seed (eval.seed for evaluation commands)");
    sub->allow_extras();
  };

  auto* train = app.add_subcommand("train", "train a model; writes OUT/model.ckpt and OUT/train.log");
  add_common(train);
  train->add_option("--out", out, "output directory")->required();

  auto* eval_ppl = app.add_subcommand("eval-ppl", "per-word perplexity of a corpus");
  add_common(eval_ppl);
  eval_ppl->add_option("--ckpt", ckpt)->required();
  eval_ppl->add_option("--corpus", corpus)->required();
  eval_ppl->add_option("--out", out, "report file (default stdout)");

  auto* eval_inc = app.add_subcommand("eval-inc", "inverse narrative cloze accuracy");
  add_common(eval_inc);
  eval_inc->add_option("--ckpt", ckpt)->required();
  eval_inc->add_option("--inc", inc_path)->required();
  eval_inc->add_option("--out", out, "report file (default stdout)");

  auto* eval_frames = app.add_subcommand("eval-frames", "single-event frame classification metrics");
  add_common(eval_frames);
  eval_frames->add_option("--ckpt", ckpt)->required();
  eval_frames->add_option("--corpus", corpus)->required();
  eval_frames->add_option("--out", out, "report file (default stdout)");

  auto* generate = app.add_subcommand("generate", "generate a script from a seed event");
  add_common(generate);
  generate->add_option("--ckpt", ckpt)->required();
  generate->add_option("--event", event, "seed event: verb subject object modifier")->required();
  generate->add_option("--out", out, "script file (default stdout)");

  auto* synth = app.add_subcommand("synth", "write a synthetic corpus from synth.* keys");
  add_common(synth);
  synth->add_option("--out", out, "output directory")->required();

  auto* build = app.add_subcommand("build-inc", "build cloze samples from a corpus");
  add_common(build);
  build->add_option("--corpus", corpus)->required();
  build->add_option("--out", out)->required();

  auto* clusters = app.add_subcommand("clusters", "token-to-frame and frame-to-token cluster report");
  add_common(clusters);
  clusters->add_option("--ckpt", ckpt)->required();
  clusters->add_option("--corpus", corpus)->required();
  clusters->add_option("--out", out, "output prefix (default stdout)");

  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference check of the objective on a toy model");
  add_common(gradcheck);
  gradcheck->add_option("--out", out, "report file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    common.extras = sub->remaining();
    const std::string name = sub->get_name();
    if (name == "train") return cmd_train(common, out);
    if (name == "eval-ppl") return cmd_eval_ppl(common, ckpt, corpus, out);
    if (name == "eval-inc") return cmd_eval_inc(common, ckpt, inc_path, out);
    if (name == "eval-frames") return cmd_eval_frames(common, ckpt, corpus, out);
    if (name == "generate") return cmd_generate(common, ckpt, event, out);
    if (name == "synth") return cmd_synth(common, out);
    if (name == "build-inc") return cmd_build_inc(common, corpus, out);
    if (name == "clusters") return cmd_clusters(common, ckpt, corpus, out);
    if (name == "gradcheck") return cmd_gradcheck(common, out);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const ContractError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const CorpusError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
