#include "attnav/attention.hpp"

#include <cmath>

#include "attnav/errors.hpp"
#include "attnav/ops.hpp"

namespace attnav {

namespace {

Tensor uniform_matrix(Rng& rng, int rows, int cols) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(cols));
  std::vector<double> v(static_cast<std::size_t>(rows * cols));
  for (double& x : v) x = (2.0 * uniform_unit(rng) - 1.0) * bound;
  return Tensor::matrix(static_cast<std::size_t>(rows), static_cast<std::size_t>(cols), std::move(v));
}

Tensor zeros2(int rows, int cols) {
  return Tensor({static_cast<std::size_t>(rows), static_cast<std::size_t>(cols)}, 0.0);
}

}  // namespace

AttentionParams AttentionParams::zeros(const AttentionDims& dims) {
  return {zeros2(dims.d, dims.d_v), zeros2(dims.d, dims.d_g),
          zeros2(dims.d, static_cast<int>(kActionDim)), zeros2(dims.d, dims.d_m),
          zeros2(3, dims.d_m), Tensor({3}, 0.0)};
}

AttentionParams AttentionParams::init(const AttentionDims& dims, Rng& rng) {
  AttentionParams p;
  p.W_v = uniform_matrix(rng, dims.d, dims.d_v);
  p.W_g = uniform_matrix(rng, dims.d, dims.d_g);
  p.W_a = uniform_matrix(rng, dims.d, static_cast<int>(kActionDim));
  p.W_m = uniform_matrix(rng, dims.d, dims.d_m);
  p.beta_W = zeros2(3, dims.d_m);
  p.beta_b = Tensor({3}, 1.0);
  return p;
}

AttentionVars bind(Graph& g, const AttentionParams& p, bool requires_grad) {
  return {g.leaf(p.W_v, requires_grad),    g.leaf(p.W_g, requires_grad),
          g.leaf(p.W_a, requires_grad),    g.leaf(p.W_m, requires_grad),
          g.leaf(p.beta_W, requires_grad), g.leaf(p.beta_b, requires_grad)};
}

Var cosine_potential_normalized(Var v_unit, Var W_x, Var u) {
  Var context = normalize_rows(affine(W_x, u), kNormEps);
  return affine(v_unit, context);
}

Var cosine_potential(Var W_v, Var W_x, Var v, Var u) {
  return cosine_potential_normalized(normalize_rows(project_rows(v, W_v), kNormEps), W_x, u);
}

Var attention_distribution(Var phi) { return softmax_flat(phi); }

Var beta_weights(Var beta_W, Var beta_b, Var u_m_prev) { return affine(beta_W, u_m_prev, beta_b); }

Var fuse(std::optional<Var> p_g, std::optional<Var> p_a, std::optional<Var> p_m, Var beta) {
  if (beta.size() != 3) throw DimensionError("fuse: beta must have 3 entries, got " + shape_string(beta.shape()));
  std::optional<Var> logits;
  const std::array<std::optional<Var>, 3> units = {p_g, p_a, p_m};
  for (std::size_t k = 0; k < units.size(); ++k) {
    if (!units[k]) continue;
    Var term = scale_by(log_eps(*units[k], kFuseEps), beta, k);
    logits = logits ? add(*logits, term) : term;
  }
  if (!logits) throw ContractError("fuse needs at least one attention unit");
  return softmax_flat(*logits);
}

Var attend(Var p_fused, Var v) { return scale_rows(p_fused, v); }

AttentionBundleVars full_attention(const AttentionVars& params, Var v, Var u_g, Var u_a_prev,
                                   Var u_m_prev, const AttentionFlags& flags) {
  if (!flags.any_unit()) throw ContractError("full_attention with every unit disabled");
  Graph& g = *v.graph;
  AttentionBundleVars out;
  Var v_unit = normalize_rows(project_rows(v, params.W_v), kNormEps);
  if (flags.use_p_g) {
    out.phi_g = cosine_potential_normalized(v_unit, params.W_g, u_g);
    out.p_g = attention_distribution(*out.phi_g);
  }
  if (flags.use_p_a) {
    out.phi_a = cosine_potential_normalized(v_unit, params.W_a, u_a_prev);
    out.p_a = attention_distribution(*out.phi_a);
  }
  if (flags.use_p_m) {
    out.phi_m = cosine_potential_normalized(v_unit, params.W_m, u_m_prev);
    out.p_m = attention_distribution(*out.phi_m);
  }
  if (flags.fixed_beta_one) {
    out.beta = g.constant(Tensor::vector({flags.use_p_g ? 1.0 : 0.0, flags.use_p_a ? 1.0 : 0.0,
                                          flags.use_p_m ? 1.0 : 0.0}));
  } else {
    out.beta = beta_weights(params.beta_W, params.beta_b, u_m_prev);
  }
  out.p_fused = fuse(out.p_g, out.p_a, out.p_m, out.beta);
  out.v_hat = attend(out.p_fused, v);
  return out;
}

AttentionBundle snapshot(const AttentionBundleVars& vars, int n_v) {
  const Shape grid{static_cast<std::size_t>(n_v), static_cast<std::size_t>(n_v)};
  const double uniform = 1.0 / (n_v * n_v);
  auto value_or = [&](const std::optional<Var>& v, double fill) {
    return v ? v->value().reshaped(grid) : Tensor(grid, fill);
  };
  AttentionBundle b;
  b.phi_g = value_or(vars.phi_g, 0.0);
  b.phi_a = value_or(vars.phi_a, 0.0);
  b.phi_m = value_or(vars.phi_m, 0.0);
  b.p_g = value_or(vars.p_g, uniform);
  b.p_a = value_or(vars.p_a, uniform);
  b.p_m = value_or(vars.p_m, uniform);
  const Tensor& beta = vars.beta.value();
  b.beta = {vars.p_g ? beta[0] : 0.0, vars.p_a ? beta[1] : 0.0, vars.p_m ? beta[2] : 0.0};
  b.p_fused = vars.p_fused.value().reshaped(grid);
  b.v_hat = vars.v_hat.value();
  return b;
}

AttentionBundle full_attention(const AttentionParams& params, const Tensor& v, const Tensor& u_g,
                               const Tensor& u_a_prev, const Tensor& u_m_prev,
                               const AttentionFlags& flags) {
  Graph g;
  const AttentionVars vars = bind(g, params, false);
  const auto bundle = full_attention(vars, g.constant(v), g.constant(u_g), g.constant(u_a_prev),
                                     g.constant(u_m_prev), flags);
  const int n_v = static_cast<int>(std::lround(std::sqrt(static_cast<double>(v.dim(0)))));
  return snapshot(bundle, n_v);
}

Tensor fuse(const Tensor& p_g, const Tensor& p_a, const Tensor& p_m, std::array<double, 3> beta) {
  Graph g;
  Var out = fuse(g.constant(p_g), g.constant(p_a), g.constant(p_m),
                 g.constant(Tensor::vector({beta[0], beta[1], beta[2]})));
  return out.value();
}

}  // namespace attnav
