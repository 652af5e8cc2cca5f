// SPDX-License-Identifier: Apache-2.0

#include "ssdvae/ops.h"

#include <cmath>
#include <string>

namespace ssdvae {

namespace {

Graph& graph_of(Var a) {
  if (!a.valid()) throw ContractError("unbound Var");
  return *a.graph();
}

Graph& graph_of(Var a, Var b) {
  Graph& g = graph_of(a);
  if (b.graph() != &g) throw ContractError("Vars belong to different graphs");
  return g;
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ContractError(std::string(op) + ": shape mismatch (" + std::to_string(a.rows()) + "x" +
                        std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                        std::to_string(b.cols()) + ")");
  }
}

Matrix softmax_of(const Matrix& a) {
  Matrix out(a.rows(), a.cols());
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    const double m = a.row(r).maxCoeff();
    out.row(r) = (a.row(r).array() - m).exp().matrix();
    out.row(r) /= out.row(r).sum();
  }
  return out;
}

}  // namespace

Var matmul(Var a, Var b) {
  Graph& g = graph_of(a, b);
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  if (av.cols() != bv.rows()) throw ContractError("matmul: inner dimensions differ");
  const int ia = a.id(), ib = b.id();
  return g.record(av * bv, {ia, ib}, [ia, ib](Graph& g, int self) {
    const Matrix& gs = g.grad(self);
    if (g.needs_grad(ia)) g.grad_buffer(ia).noalias() += gs * g.value(ib).transpose();
    if (g.needs_grad(ib)) g.grad_buffer(ib).noalias() += g.value(ia).transpose() * gs;
  }, "matmul");
}

Var linear(Var x, Var w) {
  Graph& g = graph_of(x, w);
  const Matrix& xv = x.value();
  const Matrix& wv = w.value();
  if (xv.cols() != wv.cols()) throw ContractError("linear: input width does not match weight columns");
  const int ix = x.id(), iw = w.id();
  return g.record(xv * wv.transpose(), {ix, iw}, [ix, iw](Graph& g, int self) {
    const Matrix& gs = g.grad(self);
    if (g.needs_grad(ix)) g.grad_buffer(ix).noalias() += gs * g.value(iw);
    if (g.needs_grad(iw)) g.grad_buffer(iw).noalias() += gs.transpose() * g.value(ix);
  }, "linear");
}

Var add(Var a, Var b) {
  Graph& g = graph_of(a, b);
  require_same_shape(a.value(), b.value(), "add");
  const int ia = a.id(), ib = b.id();
  return g.record(a.value() + b.value(), {ia, ib}, [ia, ib](Graph& g, int self) {
    if (g.needs_grad(ia)) g.grad_buffer(ia) += g.grad(self);
    if (g.needs_grad(ib)) g.grad_buffer(ib) += g.grad(self);
  }, "add");
}

Var sub(Var a, Var b) {
  Graph& g = graph_of(a, b);
  require_same_shape(a.value(), b.value(), "sub");
  const int ia = a.id(), ib = b.id();
  return g.record(a.value() - b.value(), {ia, ib}, [ia, ib](Graph& g, int self) {
    if (g.needs_grad(ia)) g.grad_buffer(ia) += g.grad(self);
    if (g.needs_grad(ib)) g.grad_buffer(ib) -= g.grad(self);
  }, "sub");
}

Var cmul(Var a, Var b) {
  Graph& g = graph_of(a, b);
  require_same_shape(a.value(), b.value(), "cmul");
  const int ia = a.id(), ib = b.id();
  return g.record(a.value().cwiseProduct(b.value()), {ia, ib}, [ia, ib](Graph& g, int self) {
    const Matrix& gs = g.grad(self);
    if (g.needs_grad(ia)) g.grad_buffer(ia) += gs.cwiseProduct(g.value(ib));
    if (g.needs_grad(ib)) g.grad_buffer(ib) += gs.cwiseProduct(g.value(ia));
  }, "cmul");
}

Var add_row(Var x, Var row) {
  Graph& g = graph_of(x, row);
  const Matrix& rv = row.value();
  if (rv.rows() != 1 || rv.cols() != x.cols()) throw ContractError("add_row: row must be 1 x cols(x)");
  const int ix = x.id(), ir = row.id();
  Matrix out = x.value();
  out.rowwise() += rv.row(0);
  return g.record(std::move(out), {ix, ir}, [ix, ir](Graph& g, int self) {
    const Matrix& gs = g.grad(self);
    if (g.needs_grad(ix)) g.grad_buffer(ix) += gs;
    if (g.needs_grad(ir)) g.grad_buffer(ir) += gs.colwise().sum();
  }, "add_row");
}

Var scale(Var a, double c) {
  Graph& g = graph_of(a);
  const int ia = a.id();
  return g.record(a.value() * c, {ia}, [ia, c](Graph& g, int self) {
    g.grad_buffer(ia) += g.grad(self) * c;
  }, "scale");
}

Var add_scalar(Var a, double c) {
  Graph& g = graph_of(a);
  const int ia = a.id();
  return g.record((a.value().array() + c).matrix(), {ia}, [ia](Graph& g, int self) {
    g.grad_buffer(ia) += g.grad(self);
  }, "add_scalar");
}

Var tanh(Var a) {
  Graph& g = graph_of(a);
  const int ia = a.id();
  return g.record(a.value().array().tanh().matrix(), {ia}, [ia](Graph& g, int self) {
    const Matrix& v = g.value(self);
    g.grad_buffer(ia).array() += g.grad(self).array() * (1.0 - v.array().square());
  }, "tanh");
}

Var sigmoid(Var a) {
  Graph& g = graph_of(a);
  const int ia = a.id();
  Matrix out = (1.0 / (1.0 + (-a.value().array()).exp())).matrix();
  return g.record(std::move(out), {ia}, [ia](Graph& g, int self) {
    const Matrix& v = g.value(self);
    g.grad_buffer(ia).array() += g.grad(self).array() * v.array() * (1.0 - v.array());
  }, "sigmoid");
}

Var exp(Var a) {
  Graph& g = graph_of(a);
  const int ia = a.id();
  return g.record(a.value().array().exp().matrix(), {ia}, [ia](Graph& g, int self) {
    g.grad_buffer(ia).array() += g.grad(self).array() * g.value(self).array();
  }, "exp");
}

Var log(Var a) {
  Graph& g = graph_of(a);
  if ((a.value().array() <= 0.0).any()) throw NumericError("log of a non-positive value");
  const int ia = a.id();
  return g.record(a.value().array().log().matrix(), {ia}, [ia](Graph& g, int self) {
    g.grad_buffer(ia).array() += g.grad(self).array() / g.value(ia).array();
  }, "log");
}

Var softplus(Var a) {
  Graph& g = graph_of(a);
  const int ia = a.id();
  const Matrix& av = a.value();
  Matrix out = av.unaryExpr([](double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); });
  return g.record(std::move(out), {ia}, [ia](Graph& g, int self) {
    const Matrix& x = g.value(ia);
    g.grad_buffer(ia).array() += g.grad(self).array() * (1.0 / (1.0 + (-x.array()).exp()));
  }, "softplus");
}

Var softmax_rows(Var a) {
  Graph& g = graph_of(a);
  const int ia = a.id();
  return g.record(softmax_of(a.value()), {ia}, [ia](Graph& g, int self) {
    const Matrix& v = g.value(self);
    const Matrix& gs = g.grad(self);
    Vector dots = gs.cwiseProduct(v).rowwise().sum();
    Matrix contrib = gs;
    contrib.colwise() -= dots;
    g.grad_buffer(ia) += contrib.cwiseProduct(v);
  }, "softmax_rows");
}

Var log_softmax_rows(Var a) {
  Graph& g = graph_of(a);
  const int ia = a.id();
  const Matrix& av = a.value();
  Matrix out(av.rows(), av.cols());
  for (Eigen::Index r = 0; r < av.rows(); ++r) {
    const double m = av.row(r).maxCoeff();
    const double lse = m + std::log((av.row(r).array() - m).exp().sum());
    out.row(r) = (av.row(r).array() - lse).matrix();
  }
  return g.record(std::move(out), {ia}, [ia](Graph& g, int self) {
    const Matrix& v = g.value(self);
    const Matrix& gs = g.grad(self);
    Vector totals = gs.rowwise().sum();
    Matrix p = v.array().exp().matrix();
    Matrix contrib = gs;
    for (Eigen::Index r = 0; r < p.rows(); ++r) contrib.row(r) -= totals(r) * p.row(r);
    g.grad_buffer(ia) += contrib;
  }, "log_softmax_rows");
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw ContractError("concat_cols: no inputs");
  Graph& g = graph_of(parts[0]);
  const Eigen::Index rows = parts[0].rows();
  Eigen::Index cols = 0;
  std::vector<int> ids;
  std::vector<Eigen::Index> offsets;
  for (const Var& p : parts) {
    if (p.graph() != &g) throw ContractError("concat_cols: mixed graphs");
    if (p.rows() != rows) throw ContractError("concat_cols: row counts differ");
    ids.push_back(p.id());
    offsets.push_back(cols);
    cols += p.cols();
  }
  Matrix out(rows, cols);
  for (size_t i = 0; i < parts.size(); ++i) out.middleCols(offsets[i], parts[i].cols()) = parts[i].value();
  std::vector<int> inputs = ids;
  return g.record(std::move(out), std::move(inputs), [ids, offsets](Graph& g, int self) {
    const Matrix& gs = g.grad(self);
    for (size_t i = 0; i < ids.size(); ++i) {
      if (!g.needs_grad(ids[i])) continue;
      Matrix& gi = g.grad_buffer(ids[i]);
      gi += gs.middleCols(offsets[i], gi.cols());
    }
  }, "concat_cols");
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw ContractError("concat_rows: no inputs");
  Graph& g = graph_of(parts[0]);
  const Eigen::Index cols = parts[0].cols();
  Eigen::Index rows = 0;
  std::vector<int> ids;
  std::vector<Eigen::Index> offsets;
  for (const Var& p : parts) {
    if (p.graph() != &g) throw ContractError("concat_rows: mixed graphs");
    if (p.cols() != cols) throw ContractError("concat_rows: column counts differ");
    ids.push_back(p.id());
    offsets.push_back(rows);
    rows += p.rows();
  }
  Matrix out(rows, cols);
  for (size_t i = 0; i < parts.size(); ++i) out.middleRows(offsets[i], parts[i].rows()) = parts[i].value();
  std::vector<int> inputs = ids;
  return g.record(std::move(out), std::move(inputs), [ids, offsets](Graph& g, int self) {
    const Matrix& gs = g.grad(self);
    for (size_t i = 0; i < ids.size(); ++i) {
      if (!g.needs_grad(ids[i])) continue;
      Matrix& gi = g.grad_buffer(ids[i]);
      gi += gs.middleRows(offsets[i], gi.rows());
    }
  }, "concat_rows");
}

Var slice_cols(Var a, Eigen::Index start, Eigen::Index len) {
  Graph& g = graph_of(a);
  if (start < 0 || len <= 0 || start + len > a.cols()) throw ContractError("slice_cols: out of range");
  const int ia = a.id();
  return g.record(a.value().middleCols(start, len), {ia}, [ia, start, len](Graph& g, int self) {
    g.grad_buffer(ia).middleCols(start, len) += g.grad(self);
  }, "slice_cols");
}

Var slice_rows(Var a, Eigen::Index start, Eigen::Index len) {
  Graph& g = graph_of(a);
  if (start < 0 || len <= 0 || start + len > a.rows()) throw ContractError("slice_rows: out of range");
  const int ia = a.id();
  return g.record(a.value().middleRows(start, len), {ia}, [ia, start, len](Graph& g, int self) {
    g.grad_buffer(ia).middleRows(start, len) += g.grad(self);
  }, "slice_rows");
}

Var sum(Var a) {
  Graph& g = graph_of(a);
  const int ia = a.id();
  Matrix out(1, 1);
  out(0, 0) = a.value().sum();
  return g.record(std::move(out), {ia}, [ia](Graph& g, int self) {
    g.grad_buffer(ia).array() += g.grad(self)(0, 0);
  }, "sum");
}

Var row_sum(Var a) {
  Graph& g = graph_of(a);
  const int ia = a.id();
  Matrix out = a.value().rowwise().sum();
  return g.record(std::move(out), {ia}, [ia](Graph& g, int self) {
    Matrix& ga = g.grad_buffer(ia);
    ga.colwise() += g.grad(self).col(0);
  }, "row_sum");
}

Var row_norm(Var a) {
  Graph& g = graph_of(a);
  const int ia = a.id();
  Matrix out = a.value().rowwise().norm();
  return g.record(std::move(out), {ia}, [ia](Graph& g, int self) {
    const Matrix& x = g.value(ia);
    const Matrix& n = g.value(self);
    const Matrix& gs = g.grad(self);
    Matrix& ga = g.grad_buffer(ia);
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
      if (n(r, 0) > 0.0) ga.row(r) += (gs(r, 0) / n(r, 0)) * x.row(r);
    }
  }, "row_norm");
}

Var pick(Var a, std::span<const int> index) {
  Graph& g = graph_of(a);
  const Matrix& av = a.value();
  if (static_cast<Eigen::Index>(index.size()) != av.rows()) throw ContractError("pick: one index per row required");
  std::vector<int> idx(index.begin(), index.end());
  Matrix out = Matrix::Zero(av.rows(), 1);
  for (Eigen::Index r = 0; r < av.rows(); ++r) {
    const int k = idx[r];
    if (k >= av.cols()) throw ContractError("pick: index out of range");
    if (k >= 0) out(r, 0) = av(r, k);
  }
  const int ia = a.id();
  return g.record(std::move(out), {ia}, [ia, idx = std::move(idx)](Graph& g, int self) {
    const Matrix& gs = g.grad(self);
    Matrix& ga = g.grad_buffer(ia);
    for (size_t r = 0; r < idx.size(); ++r) {
      if (idx[r] >= 0) ga(static_cast<Eigen::Index>(r), idx[r]) += gs(static_cast<Eigen::Index>(r), 0);
    }
  }, "pick");
}

Var mul_col(Var x, Var s) {
  Graph& g = graph_of(x, s);
  const Matrix& sv = s.value();
  if (sv.cols() != 1 || sv.rows() != x.rows()) throw ContractError("mul_col: scale must be rows x 1");
  const int ix = x.id(), is = s.id();
  Matrix out = x.value();
  for (Eigen::Index r = 0; r < out.rows(); ++r) out.row(r) *= sv(r, 0);
  return g.record(std::move(out), {ix, is}, [ix, is](Graph& g, int self) {
    const Matrix& gs = g.grad(self);
    if (g.needs_grad(ix)) {
      const Matrix& sv = g.value(is);
      Matrix& gx = g.grad_buffer(ix);
      for (Eigen::Index r = 0; r < gx.rows(); ++r) gx.row(r) += sv(r, 0) * gs.row(r);
    }
    if (g.needs_grad(is)) g.grad_buffer(is) += gs.cwiseProduct(g.value(ix)).rowwise().sum();
  }, "mul_col");
}

Var lookup(Var table, std::span<const int> ids) {
  Graph& g = graph_of(table);
  const Matrix& tv = table.value();
  std::vector<int> rows(ids.begin(), ids.end());
  Matrix out(static_cast<Eigen::Index>(rows.size()), tv.cols());
  for (size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || rows[i] >= tv.rows()) {
      throw ContractError("lookup: index " + std::to_string(rows[i]) + " outside table of " +
                          std::to_string(tv.rows()) + " rows");
    }
    out.row(static_cast<Eigen::Index>(i)) = tv.row(rows[i]);
  }
  const int it = table.id();
  return g.record(std::move(out), {it}, [it, rows = std::move(rows)](Graph& g, int self) {
    const Matrix& gs = g.grad(self);
    Matrix& gt = g.grad_buffer(it);
    for (size_t i = 0; i < rows.size(); ++i) gt.row(rows[i]) += gs.row(static_cast<Eigen::Index>(i));
  }, "lookup");
}

Var block_dot(Var blocks, Var query) {
  Graph& g = graph_of(blocks, query);
  const Matrix& bv = blocks.value();
  const Matrix& qv = query.value();
  const Eigen::Index d = qv.cols();
  if (bv.rows() != qv.rows() || d == 0 || bv.cols() % d != 0) throw ContractError("block_dot: shape mismatch");
  const Eigen::Index n = bv.cols() / d;
  Matrix out(bv.rows(), n);
  for (Eigen::Index r = 0; r < bv.rows(); ++r) {
    for (Eigen::Index k = 0; k < n; ++k) out(r, k) = bv.row(r).segment(k * d, d).dot(qv.row(r));
  }
  const int ib = blocks.id(), iq = query.id();
  return g.record(std::move(out), {ib, iq}, [ib, iq, n, d](Graph& g, int self) {
    const Matrix& gs = g.grad(self);
    const Matrix& bv = g.value(ib);
    const Matrix& qv = g.value(iq);
    if (g.needs_grad(ib)) {
      Matrix& gb = g.grad_buffer(ib);
      for (Eigen::Index r = 0; r < bv.rows(); ++r)
        for (Eigen::Index k = 0; k < n; ++k) gb.row(r).segment(k * d, d) += gs(r, k) * qv.row(r);
    }
    if (g.needs_grad(iq)) {
      Matrix& gq = g.grad_buffer(iq);
      for (Eigen::Index r = 0; r < bv.rows(); ++r)
        for (Eigen::Index k = 0; k < n; ++k) gq.row(r) += gs(r, k) * bv.row(r).segment(k * d, d);
    }
  }, "block_dot");
}

Var block_combine(Var blocks, Var weights) {
  Graph& g = graph_of(blocks, weights);
  const Matrix& bv = blocks.value();
  const Matrix& wv = weights.value();
  const Eigen::Index n = wv.cols();
  if (bv.rows() != wv.rows() || n == 0 || bv.cols() % n != 0) throw ContractError("block_combine: shape mismatch");
  const Eigen::Index d = bv.cols() / n;
  Matrix out = Matrix::Zero(bv.rows(), d);
  for (Eigen::Index r = 0; r < bv.rows(); ++r)
    for (Eigen::Index k = 0; k < n; ++k) out.row(r) += wv(r, k) * bv.row(r).segment(k * d, d);
  const int ib = blocks.id(), iw = weights.id();
  return g.record(std::move(out), {ib, iw}, [ib, iw, n, d](Graph& g, int self) {
    const Matrix& gs = g.grad(self);
    const Matrix& bv = g.value(ib);
    const Matrix& wv = g.value(iw);
    if (g.needs_grad(ib)) {
      Matrix& gb = g.grad_buffer(ib);
      for (Eigen::Index r = 0; r < bv.rows(); ++r)
        for (Eigen::Index k = 0; k < n; ++k) gb.row(r).segment(k * d, d) += wv(r, k) * gs.row(r);
    }
    if (g.needs_grad(iw)) {
      Matrix& gw = g.grad_buffer(iw);
      for (Eigen::Index r = 0; r < bv.rows(); ++r)
        for (Eigen::Index k = 0; k < n; ++k) gw(r, k) += bv.row(r).segment(k * d, d).dot(gs.row(r));
    }
  }, "block_combine");
}

}  // namespace ssdvae
