#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "attnav/attention.hpp"
#include "attnav/checkpoint.hpp"
#include "attnav/gridworld.hpp"

namespace attnav {

struct ModelConfig {
  int n_v = 7;
  int d_v = 32;
  int d_g = 32;
  int d = 64;     // attention embedding
  int d_p = 16;   // per-sub-window reduction
  int d_in = 128;  // LSTM input
  int d_m = 128;  // LSTM hidden

  AttentionDims attention_dims() const { return {n_v, d_v, d_g, d, d_m}; }
  int policy_input_dim() const { return n_v * n_v * d_p + d_g + static_cast<int>(kActionDim); }
  bool operator==(const ModelConfig&) const = default;
};

// reduce: 1x1 projection d_v -> d_p per sub-window; input: affine into the
// LSTM; lstm: gates i, f, g, o; actor: d_m -> 6 logits; critic: d_m -> 1.
struct PolicyParams {
  Tensor reduce_W, reduce_b;
  Tensor input_W, input_b;
  Tensor lstm_W_ih, lstm_W_hh, lstm_b;
  Tensor actor_W, actor_b;
  Tensor critic_W, critic_b;

  static PolicyParams zeros(const ModelConfig& cfg);
  static PolicyParams init(const ModelConfig& cfg, Rng& rng);
};

struct Model {
  ModelConfig config;
  AttentionParams attn;
  PolicyParams policy;

  static Model zeros(const ModelConfig& cfg);
  static Model init(const ModelConfig& cfg, std::uint64_t seed);
};

// Stable parameter names in canonical order ("attn.W_v", ...,
// "policy.critic.b").
const std::vector<std::string>& parameter_names();
std::vector<Tensor> parameters(const Model& model);
Model with_parameters(const Model& model, std::vector<Tensor> params);
std::size_t parameter_count(const Model& model);

// Checkpoint records for the parameters plus "meta.model_config".
std::vector<NamedTensor> model_records(const Model& model);
// Throws FormatError on missing or mis-shaped records.
Model model_from_records(std::span<const NamedTensor> records);

struct PolicyState {
  Tensor h, c;      // [d_m]; h is u_m
  Tensor u_a_prev;  // previous action distribution, [6]
};

// h = c = 0, u_a_prev uniform.
PolicyState initial_state(const ModelConfig& cfg);

struct ModelVars {
  AttentionVars attn;
  Var reduce_W, reduce_b, input_W, input_b, lstm_W_ih, lstm_W_hh, lstm_b, actor_W, actor_b,
      critic_W, critic_b;
  std::vector<Var> all;  // canonical order
};

ModelVars bind(Graph& g, const Model& model, bool requires_grad);
// Wraps existing nodes given in canonical order.
ModelVars model_vars(std::span<const Var> params);

struct StateVars {
  Var h, c, u_a;
};

StateVars bind(Graph& g, const PolicyState& state);

struct ForwardVars {
  Var logits;
  Var log_probs;
  Var probs;
  Var value;  // [1]
  StateVars next;
  AttentionBundleVars attention;
};

// Attention over v, then x = concat(flatten(reduce(n_v^2 * v_hat)), u_g,
// u_a_prev) -> input affine -> LSTM -> actor softmax / critic.
ForwardVars policy_forward(const ModelVars& params, const ModelConfig& cfg, Var v, Var u_g,
                           const StateVars& state, const AttentionFlags& flags = {});

struct PolicyOutput {
  Tensor probs;
  double value = 0.0;
  PolicyState next;
  AttentionBundle attention;
};

// Forward-only convenience on a throwaway graph.
PolicyOutput policy_forward(const Model& model, const Tensor& v, const Tensor& u_g,
                            const PolicyState& state, const AttentionFlags& flags = {});

struct LossConfig {
  double gamma = 0.99;
  double value_coef = 0.5;
  double entropy_coef = 0.01;
  double entropy_coef_int = 0.01;
};

struct StepVars {
  Action action = Action::Done;
  double reward = 0.0;
  Var log_probs;
  Var probs;
  Var value;
};

// H(pi) = -<pi, log pi> as a [1] node.
Var entropy(Var probs, Var log_probs);

// Discounted returns R_t = r_t + gamma R_{t+1}, R_T = bootstrap.
std::vector<double> discounted_returns(std::span<const StepVars> steps, double gamma,
                                       double bootstrap);

// sum_t [ -A_t log pi(a_t) + value_coef (R_t - V_t)^2 - entropy_coef H(pi_t) ],
// A_t = R_t - V_t taken as a constant. Throws ContractError when empty.
Var nav_loss(std::span<const StepVars> steps, const LossConfig& cfg, double bootstrap = 0.0);
// Same loss with returns and advantages supplied from outside.
Var nav_loss(std::span<const StepVars> steps, const LossConfig& cfg, std::span<const double> returns,
             std::span<const double> advantages);

// (1/k_hat) [ sum_{t>=1} <pi_t, pi_{t-1}> - entropy_coef_int sum_t H(pi_t) ] over
// the first min(k_hat, steps) records.
Var interaction_loss(std::span<const StepVars> prefix, int k_hat, double entropy_coef_int);

// theta - lr * grad, or nullopt when any gradient entry is not finite.
std::optional<std::vector<Tensor>> adapt(std::span<const Tensor> theta,
                                         std::span<const Tensor> grads, double inner_lr);

// Argmax with lowest-index tie-breaking.
std::size_t greedy_action(std::span<const double> probs);
// Inverse-CDF draw from probs.
std::size_t sample_action(std::span<const double> probs, Rng& rng);

}  // namespace attnav
