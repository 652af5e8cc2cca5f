// SPDX-License-Identifier: Apache-2.0

#include "ssdvae/config.h"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

namespace ssdvae {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  }
}

uint64_t parse_uint(const std::string& key, const std::string& v) {
  uint64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

struct Entry {
  const char* key;
  const char* doc;
  std::function<void(Config&, const std::string&, const std::string&)> set;
  std::function<std::string(const Config&)> get;
};

template <typename Member>
Entry size_entry(const char* key, const char* doc, Member m) {
  return {key, doc, [m](Config& c, const std::string& k, const std::string& v) { m(c) = parse_uint(k, v); },
          [m](const Config& c) { return std::to_string(m(const_cast<Config&>(c))); }};
}

template <typename Member>
Entry double_entry(const char* key, const char* doc, Member m) {
  return {key, doc, [m](Config& c, const std::string& k, const std::string& v) { m(c) = parse_double(k, v); },
          [m](const Config& c) { return fmt_double(m(const_cast<Config&>(c))); }};
}

template <typename Member>
Entry bool_entry(const char* key, const char* doc, Member m) {
  return {key, doc, [m](Config& c, const std::string& k, const std::string& v) { m(c) = parse_bool(k, v); },
          [m](const Config& c) { return std::string(m(const_cast<Config&>(c)) ? "true" : "false"); }};
}

template <typename Member>
Entry string_entry(const char* key, const char* doc, Member m) {
  return {key, doc, [m](Config& c, const std::string&, const std::string& v) { m(c) = v; },
          [m](const Config& c) { return m(const_cast<Config&>(c)); }};
}

#define FIELD(path) [](Config& c) -> auto& { return c.path; }

const std::vector<Entry>& table() {
  static const std::vector<Entry> entries = {
      {"model.kind", "vae | rnnlm | rnnlm_role (default vae)",
       [](Config& c, const std::string& k, const std::string& v) {
         if (v == "vae") c.model.kind = ModelKind::kVae;
         else if (v == "rnnlm") c.model.kind = ModelKind::kRnnlm;
         else if (v == "rnnlm_role") c.model.kind = ModelKind::kRnnlmRole;
         else throw ConfigError(k + ": unknown model kind '" + v + "'");
       },
       [](const Config& c) { return to_string(c.model.kind); }},
      size_entry("model.frames", "number of frames F (default 500)", FIELD(model.frames)),
      size_entry("model.vocab", "vocabulary size V including reserved tokens (default 40000)", FIELD(model.vocab)),
      size_entry("model.events", "events per document M (default 5)", FIELD(model.events)),
      size_entry("model.embed_dim", "token embedding width (default 300)", FIELD(model.embed_dim)),
      size_entry("model.frame_dim", "frame embedding width d_e (default 300)", FIELD(model.frame_dim)),
      size_entry("model.enc_layers", "encoder bidirectional GRU layers (default 2)", FIELD(model.enc_layers)),
      size_entry("model.enc_hidden", "encoder hidden size per direction (default 512)", FIELD(model.enc_hidden)),
      size_entry("model.dec_layers", "decoder / language-model GRU layers (default 2)", FIELD(model.dec_layers)),
      size_entry("model.dec_hidden", "decoder / language-model hidden size (default 512)", FIELD(model.dec_hidden)),
      size_entry("model.role_dim", "role embedding width for rnnlm_role (default 300)", FIELD(model.role_dim)),
      {"model.attention", "additive | concat combination in both attentions (default additive)",
       [](Config& c, const std::string& k, const std::string& v) {
         if (v == "additive") c.model.attention = AttentionCombine::kAdditive;
         else if (v == "concat") c.model.attention = AttentionCombine::kConcat;
         else throw ConfigError(k + ": unknown attention '" + v + "'");
       },
       [](const Config& c) { return to_string(c.model.attention); }},
      bool_entry("model.tuple_separator", "insert <tup> between events (default false)", FIELD(model.tuple_separator)),
      string_entry("model.pretrained", "pretrained token embedding text file (default none)", FIELD(model.pretrained)),
      double_entry("train.epsilon", "frame observation probability epsilon (default 0.5)", FIELD(train.epsilon)),
      double_entry("train.alpha_q", "entropy weight alpha_q (default 0.1)", FIELD(train.alpha_q)),
      double_entry("train.alpha_c", "classification weight alpha_c (default 0.1)", FIELD(train.alpha_c)),
      size_entry("train.samples", "sampled frame chains S per document (default 1)", FIELD(train.samples)),
      double_entry("train.tau", "Gumbel-Softmax temperature (default 0.5)", FIELD(train.tau)),
      double_entry("train.tau_decay", "per-epoch temperature factor, 1 disables (default 1)", FIELD(train.tau_decay)),
      double_entry("train.tau_min", "temperature floor when decaying (default 0.5)", FIELD(train.tau_min)),
      double_entry("train.lr", "Adam learning rate (default 0.001)", FIELD(train.lr)),
      double_entry("train.clip", "global gradient norm clip (default 5)", FIELD(train.clip)),
      size_entry("train.batch", "documents per batch (default 100)", FIELD(train.batch)),
      size_entry("train.patience", "epochs without validation improvement before stopping (default 10)",
                 FIELD(train.patience)),
      size_entry("train.max_epochs", "hard epoch cap (default 100)", FIELD(train.max_epochs)),
      size_entry("train.seed", "master seed (default 1)", FIELD(train.seed)),
      {"train.task", "lm | frames; frames trains baseline classifier heads (default lm)",
       [](Config& c, const std::string& k, const std::string& v) {
         if (v == "lm") c.train.task = TrainTask::kLm;
         else if (v == "frames") c.train.task = TrainTask::kFrames;
         else throw ConfigError(k + ": unknown task '" + v + "'");
       },
       [](const Config& c) { return to_string(c.train.task); }},
      bool_entry("train.mask_fixed", "draw observation masks once, not per epoch (default false)",
                 FIELD(train.mask_fixed)),
      double_entry("train.dropout", "logit dropout of classifier heads (default 0.15)", FIELD(train.dropout)),
      string_entry("data.train", "training corpus path", FIELD(data.train)),
      string_entry("data.valid", "validation corpus path", FIELD(data.valid)),
      string_entry("data.test", "test corpus path", FIELD(data.test)),
      size_entry("synth.frames", "synthetic frame count (default 10)", FIELD(synth.frames)),
      size_entry("synth.slot_vocab", "tokens per slot (default 50)", FIELD(synth.slot_vocab)),
      size_entry("synth.home_size", "preferred tokens per frame and slot (default 5)", FIELD(synth.home_size)),
      double_entry("synth.home_mass", "probability mass on a frame's preferred tokens (default 0.8)",
                   FIELD(synth.home_mass)),
      double_entry("synth.self_loop", "frame self-transition probability (default 0.6)", FIELD(synth.self_loop)),
      string_entry("synth.successors", "comma-separated successor offsets sharing the rest (default 1,3)",
                   FIELD(synth.successors)),
      size_entry("synth.train_docs", "training documents (default 5000)", FIELD(synth.train_docs)),
      size_entry("synth.valid_docs", "validation documents (default 500)", FIELD(synth.valid_docs)),
      size_entry("synth.test_docs", "test documents (default 500)", FIELD(synth.test_docs)),
      size_entry("synth.events", "events per document (default 5)", FIELD(synth.events)),
      size_entry("synth.inc_docs", "documents in the cloze source corpus (default 500)", FIELD(synth.inc_docs)),
      size_entry("synth.inc_events", "events per cloze source document (default 6)", FIELD(synth.inc_events)),
      size_entry("eval.seed", "evaluation seed (default 7)", FIELD(eval.seed)),
      size_entry("eval.samples", "frame chains averaged per document at evaluation (default 1)", FIELD(eval.samples)),
      size_entry("eval.batch", "documents per evaluation batch (default 100)", FIELD(eval.batch)),
      size_entry("eval.cluster_k", "entries per cluster-report row (default 5)", FIELD(eval.cluster_k)),
      bool_entry("eval.cluster_max", "aggregate token-to-frame scores by max (default false = mean)",
                 FIELD(eval.cluster_max)),
      size_entry("eval.inc_samples", "cloze samples built by build-inc (default 2000)", FIELD(eval.inc_samples)),
      double_entry("eval.gen_temperature", "sampling temperature for generate (default 1)",
                   FIELD(eval.gen_temperature)),
      size_entry("eval.gen_events", "events generated after the seed (default 3)", FIELD(eval.gen_events)),
  };
  return entries;
}

#undef FIELD

const Entry& find_entry(const std::string& key) {
  for (const auto& e : table()) {
    if (key == e.key) return e;
  }
  throw ConfigError("unknown config key '" + key + "'");
}

}  // namespace

std::string to_string(ModelKind k) {
  switch (k) {
    case ModelKind::kVae: return "vae";
    case ModelKind::kRnnlm: return "rnnlm";
    case ModelKind::kRnnlmRole: return "rnnlm_role";
  }
  return "vae";
}

std::string to_string(AttentionCombine a) {
  return a == AttentionCombine::kAdditive ? "additive" : "concat";
}

std::string to_string(TrainTask t) { return t == TrainTask::kLm ? "lm" : "frames"; }

void Config::set(const std::string& key, const std::string& value) {
  find_entry(key).set(*this, key, trim(value));
}

std::string Config::get(const std::string& key) const { return find_entry(key).get(*this); }

bool Config::is_key(const std::string& key) {
  for (const auto& e : table()) {
    if (key == e.key) return true;
  }
  return false;
}

std::vector<std::string> Config::keys() {
  std::vector<std::string> out;
  for (const auto& e : table()) out.emplace_back(e.key);
  return out;
}

std::string Config::describe(const std::string& key) { return find_entry(key).doc; }

void Config::apply_text(std::istream& in, const std::string& source) {
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(source + ":" + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    try {
      set(key, line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(source + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

void Config::apply_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  apply_text(in, path);
}

std::string Config::to_text() const {
  std::string out;
  for (const auto& e : table()) {
    out += e.key;
    out += " = ";
    out += e.get(*this);
    out += '\n';
  }
  return out;
}

Config Config::from_text(const std::string& text) {
  Config c;
  std::istringstream in(text);
  c.apply_text(in, "<embedded>");
  return c;
}

}  // namespace ssdvae
