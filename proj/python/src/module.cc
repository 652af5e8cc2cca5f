// SPDX-License-Identifier: Apache-2.0
//
// Python bindings: configs, synthetic corpora, training, evaluation and
// generation. Corpora cross the boundary as lists of text lines in the
// on-disk format.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "ssdvae/checkpoint.h"
#include "ssdvae/config.h"
#include "ssdvae/corpus.h"
#include "ssdvae/eval.h"
#include "ssdvae/gumbel.h"
#include "ssdvae/inc.h"
#include "ssdvae/synth.h"
#include "ssdvae/trainer.h"

namespace py = pybind11;
using namespace ssdvae;

namespace {

std::vector<std::string> to_lines(const std::vector<EventDocument>& docs) {
  std::vector<std::string> out;
  out.reserve(docs.size());
  for (const auto& d : docs) out.push_back(serialize_document(d));
  return out;
}

std::vector<EventDocument> from_lines(const std::vector<std::string>& lines) {
  std::vector<EventDocument> out;
  out.reserve(lines.size());
  for (const auto& l : lines) out.push_back(parse_document_line(l));
  return out;
}

Config config_from(const py::dict& overrides, const std::string& text) {
  Config c = text.empty() ? Config{} : Config::from_text(text);
  for (const auto& [k, v] : overrides) c.set(py::str(k), py::str(v));
  return c;
}

// A trained or restored model together with its vocabulary.
struct PyModel {
  Checkpoint ckpt;
  std::unique_ptr<SequenceModel> model;

  std::vector<EncodedDocument> encode(const std::vector<std::string>& lines) const {
    return encode_corpus(from_lines(lines), ckpt.vocab, Layout{model->config().model.tuple_separator});
  }
};

PyModel restore(Checkpoint c) {
  PyModel m;
  m.model = restore_model(c);
  m.ckpt = std::move(c);
  return m;
}

py::dict epoch_dict(const EpochStats& s) {
  py::dict d;
  d["epoch"] = s.epoch;
  d["j"] = s.mean_j;
  d["l_w"] = s.mean_l_w;
  d["l_q"] = s.mean_l_q;
  d["l_c"] = s.mean_l_c;
  d["valid"] = s.valid_ppl;
  d["seconds"] = s.seconds;
  return d;
}

}  // namespace

PYBIND11_MODULE(_ssdvae, m) {
  m.doc() = "Semi-supervised frame VAE for event scripts";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<CorpusError>(m, "CorpusError", PyExc_ValueError);
  py::register_exception<ContractError>(m, "ContractError", PyExc_ValueError);
  py::register_exception<CheckpointError>(m, "CheckpointError", PyExc_IOError);

  m.def("config_keys", &Config::keys, "All dotted config keys in documented order.");
  m.def("describe_key", &Config::describe);
  m.def(
      "config_text", [](const py::dict& overrides, const std::string& base) {
        return config_from(overrides, base).to_text();
      },
      py::arg("overrides") = py::dict(), py::arg("base") = "",
      "Canonical config text after applying `overrides` to `base` (or the defaults).");

  m.def(
      "synth",
      [](const std::string& config_text) {
        const Config c = Config::from_text(config_text);
        const SyntheticSpec spec = SyntheticSpec::from_config(c.synth, c.train.seed);
        const SyntheticCorpus corpus = synth_generate(spec);
        py::dict out;
        out["train"] = to_lines(corpus.train);
        out["valid"] = to_lines(corpus.valid);
        out["test"] = to_lines(corpus.test);
        out["inc_source"] = to_lines(synth_documents(spec, "inc", c.synth.inc_docs, c.synth.inc_events));
        out["oracle_ppl_valid"] = hmm_oracle_ppl(spec, corpus.valid);
        out["oracle_ppl_test"] = hmm_oracle_ppl(spec, corpus.test);
        return out;
      },
      py::arg("config_text"), "Synthetic splits as corpus lines plus the oracle perplexities.");

  m.def(
      "build_inc",
      [](const std::vector<std::string>& lines, size_t samples, uint64_t seed) {
        Rng rng(seed, "build-inc");
        std::vector<std::string> out;
        for (const auto& s : build_inc(from_lines(lines), samples, rng)) out.push_back(serialize_inc_sample(s));
        return out;
      },
      py::arg("corpus"), py::arg("samples"), py::arg("seed") = 1);

  m.def(
      "gumbel_softmax",
      [](const std::vector<double>& logits, double tau, const std::vector<double>& noise) {
        return gumbel_softmax_sample(logits, tau, noise);
      },
      py::arg("logits"), py::arg("tau"), py::arg("noise"));
  m.def("entropy", [](const std::vector<double>& p) { return entropy(p); });

  py::class_<PyModel>(m, "Model")
      .def_static("load", [](const std::string& path) { return restore(load_checkpoint(path)); })
      .def("save", [](const PyModel& self, const std::string& path) { save_checkpoint(self.ckpt, path); })
      .def_property_readonly("config_text", [](const PyModel& self) { return self.ckpt.config_text; })
      .def_property_readonly("best_metric", [](const PyModel& self) { return self.ckpt.best_metric; })
      .def_property_readonly("epoch", [](const PyModel& self) { return self.ckpt.epoch; })
      .def_property_readonly("vocab_size", [](const PyModel& self) { return self.ckpt.vocab.size(); })
      .def(
          "perplexity",
          [](const PyModel& self, const std::vector<std::string>& lines, uint64_t seed) {
            EvalOptions o = eval_options(self.model->config());
            o.seed = seed;
            py::gil_scoped_release nogil;
            return perplexity(*self.model, self.encode(lines), o);
          },
          py::arg("corpus"), py::arg("seed") = 7)
      .def(
          "inc_accuracy",
          [](const PyModel& self, const std::vector<std::string>& inc_lines, uint64_t seed) {
            std::vector<IncSample> samples;
            for (const auto& l : inc_lines) samples.push_back(parse_inc_line(l));
            EvalOptions o = eval_options(self.model->config());
            o.seed = seed;
            IncResult r;
            {
              py::gil_scoped_release nogil;
              r = inc_accuracy(*self.model, self.ckpt.vocab, samples, o);
            }
            py::dict d;
            d["accuracy"] = r.accuracy;
            d["ties"] = r.ties;
            d["predictions"] = r.predictions;
            return d;
          },
          py::arg("samples"), py::arg("seed") = 7)
      .def(
          "predict_frames",
          [](const PyModel& self, const std::vector<std::string>& lines, uint64_t seed) {
            EvalOptions o = eval_options(self.model->config());
            o.seed = seed;
            return predict_frames(*self.model, self.encode(lines), o);
          },
          py::arg("corpus"), py::arg("seed") = 7)
      .def(
          "generate",
          [](const PyModel& self, const std::vector<std::string>& event, size_t n, double temperature,
             uint64_t seed) {
            const auto* vae = dynamic_cast<const FrameVae*>(self.model.get());
            if (vae == nullptr) throw ContractError("generate needs a frame model");
            if (event.size() != kSlotsPerEvent) throw ContractError("seed event needs 4 tokens");
            std::array<int, kSlotsPerEvent> ids{};
            for (size_t s = 0; s < kSlotsPerEvent; ++s) {
              ids[s] = self.ckpt.vocab.find(event[s]);
              if (ids[s] < 0) throw ContractError("seed token '" + event[s] + "' is not in the vocabulary");
            }
            Rng rng(seed, "generate");
            const Script script = generate_script(*vae, ids, n, temperature, rng);
            py::list out;
            for (const auto& ev : script.events) {
              std::vector<std::string> toks;
              for (int t : ev.tokens) toks.push_back(self.ckpt.vocab.token(t));
              out.append(py::make_tuple(ev.frame, toks));
            }
            return out;
          },
          py::arg("event"), py::arg("n") = 3, py::arg("temperature") = 1.0, py::arg("seed") = 7);

  m.def(
      "train",
      [](const std::string& config_text, const std::vector<std::string>& train_lines,
         const std::vector<std::string>& valid_lines) {
        const Config c = Config::from_text(config_text);
        const auto train_docs = from_lines(train_lines);
        const Vocabulary vocab = build_vocab(train_docs, c.model.vocab, c.model.frames);
        const Layout layout{c.model.tuple_separator};
        const auto train = encode_corpus(train_docs, vocab, layout);
        const auto valid = encode_corpus(from_lines(valid_lines), vocab, layout);
        auto model = make_model(c, vocab.size());
        Trainer trainer(*model, vocab);
        Checkpoint best;
        {
          py::gil_scoped_release nogil;
          best = trainer.fit(train, valid);
        }
        py::list history;
        for (const auto& s : trainer.history()) history.append(epoch_dict(s));
        PyModel out;
        out.ckpt = std::move(best);
        out.model = std::move(model);
        return py::make_tuple(std::move(out), history);
      },
      py::arg("config_text"), py::arg("train"), py::arg("valid"),
      "Trains to early stopping; returns (best model, per-epoch history).");
}
