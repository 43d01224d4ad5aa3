#pragma once

#include <array>
#include <optional>

#include "attnav/graph.hpp"
#include "attnav/rng.hpp"
#include "attnav/tensor.hpp"

namespace attnav {

inline constexpr std::size_t kActionDim = 6;  // d_a
inline constexpr double kNormEps = 1e-8;
inline constexpr double kFuseEps = 1e-12;

struct AttentionDims {
  int n_v = 7;
  int d_v = 32;
  int d_g = 32;
  int d = 64;
  int d_m = 128;
};

// W_v [d x d_v], W_g [d x d_g], W_a [d x 6], W_m [d x d_m], and the beta head
// beta_W [3 x d_m], beta_b [3].
struct AttentionParams {
  Tensor W_v, W_g, W_a, W_m, beta_W, beta_b;

  static AttentionParams zeros(const AttentionDims& dims);
  // Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) projections; beta head starts
  // at zero weights and bias (1, 1, 1).
  static AttentionParams init(const AttentionDims& dims, Rng& rng);
};

// Which units take part in the fusion. A dropped unit contributes exponent 0.
struct AttentionFlags {
  bool use_p_g = true;
  bool use_p_a = true;
  bool use_p_m = true;
  bool fixed_beta_one = false;

  bool any_unit() const { return use_p_g || use_p_a || use_p_m; }
};

struct AttentionVars {
  Var W_v, W_g, W_a, W_m, beta_W, beta_b;
};

AttentionVars bind(Graph& g, const AttentionParams& params, bool requires_grad);

// phi(i,j) = < W_v v_ij / max(|W_v v_ij|, eps), W_x u / max(|W_x u|, eps) >
// for v [n_v^2 x d_v]; returns [n_v^2].
Var cosine_potential(Var W_v, Var W_x, Var v, Var u);
// Same, from already projected-and-normalized sub-windows [n_v^2 x d].
Var cosine_potential_normalized(Var v_unit, Var W_x, Var u);

// Softmax over all sub-windows.
Var attention_distribution(Var phi);

// Raw affine beta = beta_W u_m + beta_b, unconstrained in sign.
Var beta_weights(Var beta_W, Var beta_b, Var u_m_prev);

// p ~ p_g^b_g p_a^b_a p_m^b_m, evaluated as softmax(sum_k b_k log(p_k + 1e-12))
// over the enabled units. Disabled entries may be empty.
Var fuse(std::optional<Var> p_g, std::optional<Var> p_a, std::optional<Var> p_m, Var beta);

// v_hat[i,j] = p(i,j) * v[i,j].
Var attend(Var p_fused, Var v);

struct AttentionBundleVars {
  std::optional<Var> phi_g, phi_a, phi_m;
  std::optional<Var> p_g, p_a, p_m;
  Var beta;
  Var p_fused;
  Var v_hat;
};

AttentionBundleVars full_attention(const AttentionVars& params, Var v, Var u_g, Var u_a_prev,
                                   Var u_m_prev, const AttentionFlags& flags = {});

// Plain values of one attention pass. Distributions are [n_v x n_v]; a
// disabled unit reports zero potentials, a uniform distribution and beta 0.
struct AttentionBundle {
  Tensor phi_g, phi_a, phi_m;
  Tensor p_g, p_a, p_m;
  std::array<double, 3> beta{};
  Tensor p_fused;
  Tensor v_hat;  // [n_v^2 x d_v]
};

AttentionBundle snapshot(const AttentionBundleVars& vars, int n_v);

// Value-level conveniences that run a throwaway graph.
AttentionBundle full_attention(const AttentionParams& params, const Tensor& v, const Tensor& u_g,
                               const Tensor& u_a_prev, const Tensor& u_m_prev,
                               const AttentionFlags& flags = {});
Tensor fuse(const Tensor& p_g, const Tensor& p_a, const Tensor& p_m, std::array<double, 3> beta);

}  // namespace attnav
