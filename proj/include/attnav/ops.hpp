#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <utility>

#include "attnav/graph.hpp"

namespace attnav {

// y = W x (+ b) for W [m x n], x [n], b [m].
Var affine(Var W, Var x, std::optional<Var> b = std::nullopt);

// Row-wise projection: A [r x k] times W^T for W [m x k], giving [r x m].
// A 1x1 convolution over a grid of feature vectors.
Var project_rows(Var A, Var W);

// Adds bias [m] to every row of A [r x m].
Var add_row_bias(Var A, Var b);

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double factor);

Var sigmoid(Var a);
Var tanh(Var a);
Var exp(Var a);
// log(a + eps), elementwise.
Var log_eps(Var a, double eps);

// Max-subtracted softmax over all entries (shape preserved). Throws
// NumericError on NaN input.
Var softmax_flat(Var phi);
Var log_softmax_flat(Var phi);

Var sum(Var a);
Var dot(Var a, Var b);

// Flat views; the result is rank 1 unless a shape is given.
Var slice(Var a, std::size_t offset, std::size_t length);
Var concat(std::span<const Var> parts);
Var reshape(Var a, Shape shape);

// Each row divided by max(||row||, eps). A rank-1 input is one row.
Var normalize_rows(Var A, double eps);

// out[r, :] = p[r] * V[r, :] for p [r], V [r x k].
Var scale_rows(Var p, Var V);

// a * s[index], broadcasting one entry of s over a.
Var scale_by(Var a, Var s, std::size_t index);

// s[index] as a [1] tensor.
Var pick(Var a, std::size_t index);

// Same value as a constant leaf; stops gradient flow.
Var detach(Var a);

struct LstmWeights {
  Var W_ih;  // [4*hidden x input], gate order i, f, g, o
  Var W_hh;  // [4*hidden x hidden]
  Var bias;  // [4*hidden]
};

// Standard LSTM cell: i, f, o = sigmoid, g = tanh, c' = f*c + i*g,
// h' = o * tanh(c'). Returns (h', c').
std::pair<Var, Var> lstm_step(const LstmWeights& w, Var x, Var h, Var c);

}  // namespace attnav
