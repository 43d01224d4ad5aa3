#include "attnav/optimizer.hpp"

#include <cmath>

#include "attnav/errors.hpp"

namespace attnav {

std::vector<Tensor> optimizer_step(OptimizerKind kind, std::span<const Tensor> params,
                                   std::span<const Tensor> grads, double lr, OptimizerState& state,
                                   const AdamHyper& hyper) {
  if (params.size() != grads.size()) throw DimensionError("optimizer: parameter/gradient count mismatch");
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (params[k].shape() != grads[k].shape()) {
      throw DimensionError("optimizer: parameter " + shape_string(params[k].shape()) +
                           " vs gradient " + shape_string(grads[k].shape()));
    }
    if (!grads[k].all_finite()) throw NumericError("optimizer: non-finite gradient");
  }

  std::vector<Tensor> out;
  out.reserve(params.size());
  if (kind == OptimizerKind::PlainGradient) {
    for (std::size_t k = 0; k < params.size(); ++k) {
      std::vector<double> v(params[k].size());
      for (std::size_t i = 0; i < v.size(); ++i) v[i] = params[k][i] - lr * grads[k][i];
      out.emplace_back(params[k].shape(), std::move(v));
    }
    return out;
  }

  if (state.m.empty()) {
    for (const Tensor& p : params) {
      state.m.emplace_back(p.shape(), 0.0);
      state.v.emplace_back(p.shape(), 0.0);
    }
  }
  ++state.step;
  const double c1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(state.step));
  for (std::size_t k = 0; k < params.size(); ++k) {
    const std::size_t n = params[k].size();
    std::vector<double> m(n), v(n), p(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double g = grads[k][i];
      m[i] = hyper.beta1 * state.m[k][i] + (1.0 - hyper.beta1) * g;
      v[i] = hyper.beta2 * state.v[k][i] + (1.0 - hyper.beta2) * g * g;
      const double m_hat = m[i] / c1;
      const double v_hat = v[i] / c2;
      p[i] = params[k][i] - lr * m_hat / (std::sqrt(v_hat) + hyper.eps);
    }
    state.m[k] = Tensor(params[k].shape(), std::move(m));
    state.v[k] = Tensor(params[k].shape(), std::move(v));
    out.emplace_back(params[k].shape(), std::move(p));
  }
  return out;
}

std::vector<Tensor> average_gradients(std::span<const std::vector<Tensor>> per_worker) {
  if (per_worker.empty()) throw ContractError("average_gradients over zero workers");
  const std::size_t count = per_worker.front().size();
  std::vector<std::vector<double>> acc(count);
  for (std::size_t k = 0; k < count; ++k) acc[k].assign(per_worker.front()[k].size(), 0.0);
  for (const auto& grads : per_worker) {
    if (grads.size() != count) throw DimensionError("average_gradients: ragged worker gradients");
    for (std::size_t k = 0; k < count; ++k) {
      for (std::size_t i = 0; i < acc[k].size(); ++i) acc[k][i] += grads[k][i];
    }
  }
  const double scale = 1.0 / static_cast<double>(per_worker.size());
  std::vector<Tensor> out;
  for (std::size_t k = 0; k < count; ++k) {
    for (double& x : acc[k]) x *= scale;
    out.emplace_back(per_worker.front()[k].shape(), std::move(acc[k]));
  }
  return out;
}

double global_norm(std::span<const Tensor> grads) {
  double s = 0.0;
  for (const Tensor& g : grads) {
    for (double x : g.data()) s += x * x;
  }
  return std::sqrt(s);
}

std::vector<Tensor> clip_by_global_norm(std::span<const Tensor> grads, double max_norm) {
  std::vector<Tensor> out(grads.begin(), grads.end());
  if (max_norm <= 0.0) return out;
  const double norm = global_norm(grads);
  if (norm <= max_norm) return out;
  const double factor = max_norm / norm;
  for (Tensor& g : out) {
    std::vector<double> v(g.data().begin(), g.data().end());
    for (double& x : v) x *= factor;
    g = Tensor(g.shape(), std::move(v));
  }
  return out;
}

}  // namespace attnav
