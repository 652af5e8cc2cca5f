// SPDX-License-Identifier: Apache-2.0
//
// Differentiable primitives. Every op takes and returns Var handles on the
// same Graph. Row-batched layout: one document (or sample) per row.

#ifndef SSDVAE_OPS_H_
#define SSDVAE_OPS_H_

#include <span>
#include <vector>

#include "ssdvae/graph.h"

namespace ssdvae {

Var matmul(Var a, Var b);
// x * w^T, with weights stored as (out, in).
Var linear(Var x, Var w);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var cmul(Var a, Var b);
// Adds a 1 x n row to every row of x.
Var add_row(Var x, Var row);
Var scale(Var a, double c);
Var add_scalar(Var a, double c);

Var tanh(Var a);
Var sigmoid(Var a);
Var exp(Var a);
Var log(Var a);
Var softplus(Var a);

Var softmax_rows(Var a);
Var log_softmax_rows(Var a);

Var concat_cols(std::span<const Var> parts);
Var concat_rows(std::span<const Var> parts);
Var slice_cols(Var a, Eigen::Index start, Eigen::Index len);
Var slice_rows(Var a, Eigen::Index start, Eigen::Index len);

// Sum of all entries, 1x1.
Var sum(Var a);
// Per-row sums, rows x 1.
Var row_sum(Var a);
// Per-row L2 norm, rows x 1. The gradient at a zero row is taken as zero.
Var row_norm(Var a);
// out[b] = a[b, index[b]]; a negative index yields 0 with no gradient.
Var pick(Var a, std::span<const int> index);
// Scales row b of x by s[b] (s is rows x 1).
Var mul_col(Var x, Var s);

// Row gather from an embedding table.
Var lookup(Var table, std::span<const int> ids);

// Blocked attention helpers. `blocks` is B x (N*d), holding N vectors of width
// d per row. block_dot gives B x N scores <blocks[b,n,:], query[b,:]>;
// block_combine gives B x d sums sum_n weights[b,n] * blocks[b,n,:].
Var block_dot(Var blocks, Var query);
Var block_combine(Var blocks, Var weights);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }

}  // namespace ssdvae

#endif  // SSDVAE_OPS_H_
