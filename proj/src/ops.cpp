#include "attnav/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "attnav/errors.hpp"

namespace attnav {

namespace {

Graph& graph_of(Var a) {
  if (a.graph == nullptr) throw ContractError("operation on a detached Var");
  return *a.graph;
}

void same_graph(Var a, Var b) {
  if (a.graph != b.graph) throw ContractError("operands live on different graphs");
}

[[noreturn]] void mismatch(const char* op, const Shape& a, const Shape& b) {
  throw DimensionError(std::string(op) + ": incompatible shapes " + shape_string(a) + " and " +
                       shape_string(b));
}

std::vector<double> copy_data(const Tensor& t) { return {t.data().begin(), t.data().end()}; }

template <typename Fwd, typename Deriv>
Var unary(Var a, Fwd fwd, Deriv deriv) {
  const Tensor& x = a.value();
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(x[i]);
  Tensor value(x.shape(), std::move(out));
  return graph_of(a).record(std::move(value), {a.id}, [a, deriv](Graph& g, std::size_t self) {
    auto go = g.grad_out(self);
    auto gi = g.grad_in(a.id);
    const Tensor& x = g.value(a.id);
    const Tensor& y = g.value(self);
    for (std::size_t i = 0; i < go.size(); ++i) gi[i] += go[i] * deriv(x[i], y[i]);
  });
}

}  // namespace

Var affine(Var W, Var x, std::optional<Var> b) {
  same_graph(W, x);
  const Tensor& w = W.value();
  const Tensor& xv = x.value();
  if (w.rank() != 2 || xv.size() != w.dim(1)) mismatch("affine", w.shape(), xv.shape());
  const std::size_t m = w.dim(0), n = w.dim(1);
  std::vector<double> out(m, 0.0);
  if (b) {
    same_graph(W, *b);
    if (b->size() != m) mismatch("affine bias", w.shape(), b->shape());
    const auto bv = b->value().data();
    std::copy(bv.begin(), bv.end(), out.begin());
  }
  const auto wd = w.data();
  const auto xd = xv.data();
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = wd.data() + i * n;
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) acc += row[j] * xd[j];
    out[i] += acc;
  }
  std::vector<std::size_t> parents{W.id, x.id};
  if (b) parents.push_back(b->id);
  const std::size_t bid = b ? b->id : 0;
  const bool has_bias = b.has_value();
  return graph_of(W).record(
      Tensor({m}, std::move(out)), std::move(parents),
      [W, x, bid, has_bias, m, n](Graph& g, std::size_t self) {
        auto go = g.grad_out(self);
        const auto wd = g.value(W.id).data();
        const auto xd = g.value(x.id).data();
        auto gw = g.grad_in(W.id);
        if (!gw.empty()) {
          for (std::size_t i = 0; i < m; ++i) {
            const double gi = go[i];
            double* row = gw.data() + i * n;
            for (std::size_t j = 0; j < n; ++j) row[j] += gi * xd[j];
          }
        }
        auto gx = g.grad_in(x.id);
        if (!gx.empty()) {
          for (std::size_t i = 0; i < m; ++i) {
            const double gi = go[i];
            const double* row = wd.data() + i * n;
            for (std::size_t j = 0; j < n; ++j) gx[j] += gi * row[j];
          }
        }
        if (has_bias) {
          auto gb = g.grad_in(bid);
          for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += go[i];
        }
      });
}

Var project_rows(Var A, Var W) {
  same_graph(A, W);
  const Tensor& a = A.value();
  const Tensor& w = W.value();
  if (a.rank() != 2 || w.rank() != 2 || a.dim(1) != w.dim(1)) {
    mismatch("project_rows", a.shape(), w.shape());
  }
  const std::size_t r = a.dim(0), k = a.dim(1), m = w.dim(0);
  std::vector<double> out(r * m);
  const auto ad = a.data();
  const auto wd = w.data();
  for (std::size_t row = 0; row < r; ++row) {
    const double* ar = ad.data() + row * k;
    for (std::size_t o = 0; o < m; ++o) {
      const double* wr = wd.data() + o * k;
      double acc = 0.0;
      for (std::size_t j = 0; j < k; ++j) acc += ar[j] * wr[j];
      out[row * m + o] = acc;
    }
  }
  return graph_of(A).record(
      Tensor({r, m}, std::move(out)), {A.id, W.id}, [A, W, r, k, m](Graph& g, std::size_t self) {
        auto go = g.grad_out(self);
        const auto ad = g.value(A.id).data();
        const auto wd = g.value(W.id).data();
        auto ga = g.grad_in(A.id);
        auto gw = g.grad_in(W.id);
        for (std::size_t row = 0; row < r; ++row) {
          const double* ar = ad.data() + row * k;
          for (std::size_t o = 0; o < m; ++o) {
            const double gv = go[row * m + o];
            if (gv == 0.0) continue;
            if (!ga.empty()) {
              const double* wr = wd.data() + o * k;
              double* gar = ga.data() + row * k;
              for (std::size_t j = 0; j < k; ++j) gar[j] += gv * wr[j];
            }
            if (!gw.empty()) {
              double* gwr = gw.data() + o * k;
              for (std::size_t j = 0; j < k; ++j) gwr[j] += gv * ar[j];
            }
          }
        }
      });
}

Var add_row_bias(Var A, Var b) {
  same_graph(A, b);
  const Tensor& a = A.value();
  if (a.rank() != 2 || b.size() != a.dim(1)) mismatch("add_row_bias", a.shape(), b.shape());
  const std::size_t r = a.dim(0), m = a.dim(1);
  std::vector<double> out = copy_data(a);
  const auto bd = b.value().data();
  for (std::size_t row = 0; row < r; ++row) {
    for (std::size_t j = 0; j < m; ++j) out[row * m + j] += bd[j];
  }
  return graph_of(A).record(Tensor(a.shape(), std::move(out)), {A.id, b.id},
                            [A, b, r, m](Graph& g, std::size_t self) {
                              auto go = g.grad_out(self);
                              auto ga = g.grad_in(A.id);
                              for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += go[i];
                              auto gb = g.grad_in(b.id);
                              if (gb.empty()) return;
                              for (std::size_t row = 0; row < r; ++row) {
                                for (std::size_t j = 0; j < m; ++j) gb[j] += go[row * m + j];
                              }
                            });
}

namespace {

template <typename Fwd>
Var binary(const char* name, Var a, Var b, Fwd fwd, int kind) {
  same_graph(a, b);
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  if (x.shape() != y.shape()) mismatch(name, x.shape(), y.shape());
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(x[i], y[i]);
  return graph_of(a).record(
      Tensor(x.shape(), std::move(out)), {a.id, b.id}, [a, b, kind](Graph& g, std::size_t self) {
        auto go = g.grad_out(self);
        const Tensor& x = g.value(a.id);
        const Tensor& y = g.value(b.id);
        auto ga = g.grad_in(a.id);
        if (!ga.empty()) {
          for (std::size_t i = 0; i < go.size(); ++i) ga[i] += kind == 2 ? go[i] * y[i] : go[i];
        }
        auto gb = g.grad_in(b.id);
        if (!gb.empty()) {
          for (std::size_t i = 0; i < go.size(); ++i) {
            gb[i] += kind == 0 ? go[i] : (kind == 1 ? -go[i] : go[i] * x[i]);
          }
        }
      });
}

}  // namespace

Var add(Var a, Var b) { return binary("add", a, b, [](double x, double y) { return x + y; }, 0); }
Var sub(Var a, Var b) { return binary("sub", a, b, [](double x, double y) { return x - y; }, 1); }
Var mul(Var a, Var b) { return binary("mul", a, b, [](double x, double y) { return x * y; }, 2); }

Var scale(Var a, double factor) {
  return unary(
      a, [factor](double x) { return factor * x; }, [factor](double, double) { return factor; });
}

Var sigmoid(Var a) {
  return unary(
      a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
      [](double, double y) { return y * (1.0 - y); });
}

Var tanh(Var a) {
  return unary(
      a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Var exp(Var a) {
  return unary(
      a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Var log_eps(Var a, double eps) {
  return unary(
      a, [eps](double x) { return std::log(x + eps); },
      [eps](double x, double) { return 1.0 / (x + eps); });
}

namespace {

std::vector<double> stable_softmax(const Tensor& phi) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double v : phi.data()) {
    if (std::isnan(v)) throw NumericError("softmax_flat: NaN in input");
    mx = std::max(mx, v);
  }
  if (!std::isfinite(mx)) throw NumericError("softmax_flat: non-finite input");
  std::vector<double> out(phi.size());
  double z = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = std::exp(phi[i] - mx);
    z += out[i];
  }
  for (double& v : out) v /= z;
  return out;
}

}  // namespace

Var softmax_flat(Var phi) {
  const Tensor& x = phi.value();
  return graph_of(phi).record(Tensor(x.shape(), stable_softmax(x)), {phi.id},
                              [phi](Graph& g, std::size_t self) {
                                auto go = g.grad_out(self);
                                const auto p = g.value(self).data();
                                double s = 0.0;
                                for (std::size_t i = 0; i < p.size(); ++i) s += go[i] * p[i];
                                auto gi = g.grad_in(phi.id);
                                for (std::size_t i = 0; i < p.size(); ++i) {
                                  gi[i] += p[i] * (go[i] - s);
                                }
                              });
}

Var log_softmax_flat(Var phi) {
  const Tensor& x = phi.value();
  std::vector<double> p = stable_softmax(x);
  double mx = -std::numeric_limits<double>::infinity();
  for (double v : x.data()) mx = std::max(mx, v);
  double z = 0.0;
  for (double v : x.data()) z += std::exp(v - mx);
  const double lse = mx + std::log(z);
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] - lse;
  return graph_of(phi).record(Tensor(x.shape(), std::move(out)), {phi.id},
                              [phi, p = std::move(p)](Graph& g, std::size_t self) {
                                auto go = g.grad_out(self);
                                double s = 0.0;
                                for (double v : go) s += v;
                                auto gi = g.grad_in(phi.id);
                                for (std::size_t i = 0; i < p.size(); ++i) {
                                  gi[i] += go[i] - p[i] * s;
                                }
                              });
}

Var sum(Var a) {
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  return graph_of(a).record(Tensor::scalar(s), {a.id}, [a](Graph& g, std::size_t self) {
    const double go = g.grad_out(self)[0];
    for (double& v : g.grad_in(a.id)) v += go;
  });
}

Var dot(Var a, Var b) {
  same_graph(a, b);
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  if (x.size() != y.size()) mismatch("dot", x.shape(), y.shape());
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return graph_of(a).record(Tensor::scalar(s), {a.id, b.id}, [a, b](Graph& g, std::size_t self) {
    const double go = g.grad_out(self)[0];
    const Tensor& x = g.value(a.id);
    const Tensor& y = g.value(b.id);
    auto ga = g.grad_in(a.id);
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += go * y[i];
    auto gb = g.grad_in(b.id);
    for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += go * x[i];
  });
}

Var slice(Var a, std::size_t offset, std::size_t length) {
  const Tensor& x = a.value();
  if (length == 0 || offset + length > x.size()) {
    throw DimensionError("slice [" + std::to_string(offset) + ", +" + std::to_string(length) +
                         ") out of range for " + shape_string(x.shape()));
  }
  std::vector<double> out(x.data().begin() + static_cast<std::ptrdiff_t>(offset),
                          x.data().begin() + static_cast<std::ptrdiff_t>(offset + length));
  return graph_of(a).record(Tensor({length}, std::move(out)), {a.id},
                            [a, offset](Graph& g, std::size_t self) {
                              auto go = g.grad_out(self);
                              auto gi = g.grad_in(a.id);
                              for (std::size_t i = 0; i < go.size(); ++i) gi[offset + i] += go[i];
                            });
}

Var concat(std::span<const Var> parts) {
  if (parts.empty()) throw DimensionError("concat of zero tensors");
  std::vector<double> out;
  std::vector<std::size_t> ids;
  for (Var p : parts) {
    same_graph(parts.front(), p);
    const auto d = p.value().data();
    out.insert(out.end(), d.begin(), d.end());
    ids.push_back(p.id);
  }
  const std::size_t n = out.size();
  return graph_of(parts.front())
      .record(Tensor({n}, std::move(out)), ids, [ids](Graph& g, std::size_t self) {
        auto go = g.grad_out(self);
        std::size_t offset = 0;
        for (std::size_t id : ids) {
          const std::size_t len = g.value(id).size();
          auto gi = g.grad_in(id);
          for (std::size_t i = 0; i < gi.size(); ++i) gi[i] += go[offset + i];
          offset += len;
        }
      });
}

Var reshape(Var a, Shape shape) {
  Tensor value = a.value().reshaped(std::move(shape));
  return graph_of(a).record(std::move(value), {a.id}, [a](Graph& g, std::size_t self) {
    auto go = g.grad_out(self);
    auto gi = g.grad_in(a.id);
    for (std::size_t i = 0; i < go.size(); ++i) gi[i] += go[i];
  });
}

Var normalize_rows(Var A, double eps) {
  const Tensor& a = A.value();
  const std::size_t k = a.shape().back();
  const std::size_t r = a.size() / k;
  std::vector<double> out(a.size());
  std::vector<double> norms(r);
  for (std::size_t row = 0; row < r; ++row) {
    double s = 0.0;
    for (std::size_t j = 0; j < k; ++j) s += a[row * k + j] * a[row * k + j];
    norms[row] = std::max(std::sqrt(s), eps);
    for (std::size_t j = 0; j < k; ++j) out[row * k + j] = a[row * k + j] / norms[row];
  }
  return graph_of(A).record(
      Tensor(a.shape(), std::move(out)), {A.id},
      [A, r, k, eps, norms = std::move(norms)](Graph& g, std::size_t self) {
        auto go = g.grad_out(self);
        auto gi = g.grad_in(A.id);
        const auto y = g.value(self).data();
        for (std::size_t row = 0; row < r; ++row) {
          const double n = norms[row];
          if (n <= eps) {
            // Guarded branch: y = x / eps is linear.
            for (std::size_t j = 0; j < k; ++j) gi[row * k + j] += go[row * k + j] / eps;
            continue;
          }
          double gy = 0.0;
          for (std::size_t j = 0; j < k; ++j) gy += go[row * k + j] * y[row * k + j];
          for (std::size_t j = 0; j < k; ++j) {
            gi[row * k + j] += (go[row * k + j] - y[row * k + j] * gy) / n;
          }
        }
      });
}

Var scale_rows(Var p, Var V) {
  same_graph(p, V);
  const Tensor& pv = p.value();
  const Tensor& v = V.value();
  if (v.rank() != 2 || pv.size() != v.dim(0)) mismatch("scale_rows", pv.shape(), v.shape());
  const std::size_t r = v.dim(0), k = v.dim(1);
  std::vector<double> out(v.size());
  for (std::size_t row = 0; row < r; ++row) {
    for (std::size_t j = 0; j < k; ++j) out[row * k + j] = pv[row] * v[row * k + j];
  }
  return graph_of(p).record(Tensor(v.shape(), std::move(out)), {p.id, V.id},
                            [p, V, r, k](Graph& g, std::size_t self) {
                              auto go = g.grad_out(self);
                              const Tensor& pv = g.value(p.id);
                              const Tensor& v = g.value(V.id);
                              auto gp = g.grad_in(p.id);
                              auto gv = g.grad_in(V.id);
                              for (std::size_t row = 0; row < r; ++row) {
                                double acc = 0.0;
                                for (std::size_t j = 0; j < k; ++j) {
                                  acc += go[row * k + j] * v[row * k + j];
                                  if (!gv.empty()) gv[row * k + j] += go[row * k + j] * pv[row];
                                }
                                if (!gp.empty()) gp[row] += acc;
                              }
                            });
}

Var scale_by(Var a, Var s, std::size_t index) {
  same_graph(a, s);
  if (index >= s.size()) mismatch("scale_by", a.shape(), s.shape());
  const Tensor& x = a.value();
  const double factor = s.value()[index];
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = factor * x[i];
  return graph_of(a).record(Tensor(x.shape(), std::move(out)), {a.id, s.id},
                            [a, s, index](Graph& g, std::size_t self) {
                              auto go = g.grad_out(self);
                              const Tensor& x = g.value(a.id);
                              const double factor = g.value(s.id)[index];
                              auto ga = g.grad_in(a.id);
                              double acc = 0.0;
                              for (std::size_t i = 0; i < go.size(); ++i) {
                                if (!ga.empty()) ga[i] += go[i] * factor;
                                acc += go[i] * x[i];
                              }
                              auto gs = g.grad_in(s.id);
                              if (!gs.empty()) gs[index] += acc;
                            });
}

Var pick(Var a, std::size_t index) { return slice(a, index, 1); }

Var detach(Var a) { return graph_of(a).constant(a.value()); }

std::pair<Var, Var> lstm_step(const LstmWeights& w, Var x, Var h, Var c) {
  const std::size_t hidden = h.size();
  if (c.size() != hidden || w.W_ih.value().rank() != 2 || w.W_ih.shape()[0] != 4 * hidden ||
      w.W_hh.value().rank() != 2 || w.W_hh.shape()[0] != 4 * hidden ||
      w.W_hh.shape()[1] != hidden) {
    throw DimensionError("lstm_step: weights " + shape_string(w.W_ih.shape()) + "/" +
                         shape_string(w.W_hh.shape()) + " do not match state " +
                         shape_string(h.shape()));
  }
  Var gates = add(affine(w.W_ih, x, w.bias), affine(w.W_hh, h));
  Var i = sigmoid(slice(gates, 0, hidden));
  Var f = sigmoid(slice(gates, hidden, hidden));
  Var g = tanh(slice(gates, 2 * hidden, hidden));
  Var o = sigmoid(slice(gates, 3 * hidden, hidden));
  Var c_next = add(mul(f, c), mul(i, g));
  Var h_next = mul(o, tanh(c_next));
  return {h_next, c_next};
}

}  // namespace attnav
