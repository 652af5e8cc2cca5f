// SPDX-License-Identifier: Apache-2.0

#include "ssdvae/checkpoint.h"

#include <zlib.h>

#include <cstring>
#include <fstream>
#include <sstream>

namespace ssdvae {

namespace {

constexpr char kMagic[8] = {'S', 'S', 'D', 'V', 'A', 'E', 'C', 'K'};
constexpr size_t kHeaderBytes = sizeof(kMagic) + 4 + 8 + 4;

class Writer {
 public:
  template <typename T>
  void pod(const T& v) {
    const char* p = reinterpret_cast<const char*>(&v);
    out_.append(p, sizeof(T));
  }
  void str(const std::string& s) {
    pod<uint64_t>(s.size());
    out_ += s;
  }
  void matrix(const Matrix& m) {
    pod<uint64_t>(static_cast<uint64_t>(m.rows()));
    pod<uint64_t>(static_cast<uint64_t>(m.cols()));
    out_.append(reinterpret_cast<const char*>(m.data()), sizeof(double) * static_cast<size_t>(m.size()));
  }
  std::string& bytes() { return out_; }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(const std::string& in) : in_(in) {}
  template <typename T>
  T pod() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, in_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string str() {
    const auto n = pod<uint64_t>();
    need(n);
    std::string s = in_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  Matrix matrix() {
    const auto rows = pod<uint64_t>();
    const auto cols = pod<uint64_t>();
    if (rows > (1ULL << 32) || cols > (1ULL << 32)) throw CheckpointError("checkpoint matrix shape is implausible");
    const size_t n = static_cast<size_t>(rows * cols);
    need(n * sizeof(double));
    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    std::memcpy(m.data(), in_.data() + pos_, n * sizeof(double));
    pos_ += n * sizeof(double);
    return m;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  void need(size_t n) const {
    if (in_.size() - pos_ < n) throw CheckpointError("checkpoint payload is truncated");
  }
  const std::string& in_;
  size_t pos_ = 0;
};

uint32_t crc_of(const std::string& s) {
  return static_cast<uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(s.data()), static_cast<uInt>(s.size())));
}

}  // namespace

std::string encode_checkpoint(const Checkpoint& c) {
  Writer p;
  p.str(c.config_text);
  std::ostringstream vocab;
  c.vocab.write(vocab);
  p.str(vocab.str());
  p.str(c.rng_state);
  p.pod<uint64_t>(c.epoch);
  p.pod<double>(c.best_metric);
  p.pod<uint64_t>(c.params.size());
  for (const auto& nm : c.params) {
    p.str(nm.name);
    p.matrix(nm.value);
  }
  const OptimizerState& o = c.optimizer;
  p.pod<uint64_t>(o.step);
  p.pod<double>(o.learning_rate);
  p.pod<double>(o.beta1);
  p.pod<double>(o.beta2);
  p.pod<double>(o.epsilon);
  p.pod<uint64_t>(o.first_moment.size());
  for (size_t i = 0; i < o.first_moment.size(); ++i) {
    p.matrix(o.first_moment[i]);
    p.matrix(o.second_moment[i]);
  }

  Writer h;
  h.bytes().append(kMagic, sizeof(kMagic));
  h.pod<uint32_t>(c.version);
  h.pod<uint64_t>(p.bytes().size());
  h.pod<uint32_t>(crc_of(p.bytes()));
  return h.bytes() + p.bytes();
}

Checkpoint decode_checkpoint(const std::string& bytes) {
  if (bytes.size() < kHeaderBytes || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw CheckpointError("not a checkpoint file (bad magic)");
  }
  Reader h(bytes);
  for (size_t i = 0; i < sizeof(kMagic); ++i) h.pod<char>();
  const auto version = h.pod<uint32_t>();
  if (version != kCheckpointVersion) {
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version) + " (expected " +
                          std::to_string(kCheckpointVersion) + ")");
  }
  const auto length = h.pod<uint64_t>();
  const auto crc = h.pod<uint32_t>();
  if (bytes.size() - kHeaderBytes != length) throw CheckpointError("checkpoint length mismatch");
  const std::string payload = bytes.substr(kHeaderBytes);
  if (crc_of(payload) != crc) throw CheckpointError("checkpoint checksum mismatch");

  Reader p(payload);
  Checkpoint c;
  c.version = version;
  c.config_text = p.str();
  std::istringstream vocab(p.str());
  c.vocab = Vocabulary::read(vocab);
  c.rng_state = p.str();
  c.epoch = p.pod<uint64_t>();
  c.best_metric = p.pod<double>();
  const auto n = p.pod<uint64_t>();
  for (uint64_t i = 0; i < n; ++i) {
    NamedMatrix nm;
    nm.name = p.str();
    nm.value = p.matrix();
    c.params.push_back(std::move(nm));
  }
  OptimizerState& o = c.optimizer;
  o.step = p.pod<uint64_t>();
  o.learning_rate = p.pod<double>();
  o.beta1 = p.pod<double>();
  o.beta2 = p.pod<double>();
  o.epsilon = p.pod<double>();
  const auto moments = p.pod<uint64_t>();
  for (uint64_t i = 0; i < moments; ++i) {
    o.first_moment.push_back(p.matrix());
    o.second_moment.push_back(p.matrix());
  }
  if (!p.done()) throw CheckpointError("trailing bytes in checkpoint payload");
  return c;
}

void save_checkpoint(const Checkpoint& c, const std::string& path) {
  const std::string bytes = encode_checkpoint(c);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot write checkpoint: " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw CheckpointError("failed writing checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return decode_checkpoint(buf.str());
}

Checkpoint snapshot(const SequenceModel& model, const Vocabulary& vocab, const OptimizerState& optimizer,
                    uint64_t epoch, double best_metric, const std::string& rng_state) {
  Checkpoint c;
  c.config_text = model.config().to_text();
  c.vocab = vocab;
  const ParameterSet& ps = model.params();
  for (size_t i = 0; i < ps.size(); ++i) c.params.push_back({ps.name(i), ps.at(i).value()});
  c.optimizer = optimizer;
  c.epoch = epoch;
  c.best_metric = best_metric;
  c.rng_state = rng_state;
  return c;
}

void load_parameters(SequenceModel& model, const std::vector<NamedMatrix>& params) {
  ParameterSet& ps = model.params();
  if (params.size() != ps.size()) throw CheckpointError("checkpoint parameter count differs from the model");
  for (size_t i = 0; i < ps.size(); ++i) {
    if (params[i].name != ps.name(i)) {
      throw CheckpointError("checkpoint parameter '" + params[i].name + "' where '" + ps.name(i) + "' was expected");
    }
    Matrix& dst = ps.at(i).value();
    if (dst.rows() != params[i].value.rows() || dst.cols() != params[i].value.cols()) {
      throw CheckpointError("checkpoint parameter '" + params[i].name + "' has the wrong shape");
    }
    dst = params[i].value;
  }
}

std::unique_ptr<SequenceModel> restore_model(const Checkpoint& c) {
  const Config config = Config::from_text(c.config_text);
  auto model = make_model(config, c.vocab.size());
  load_parameters(*model, c.params);
  return model;
}

}  // namespace ssdvae
