#include "attnav/policy.hpp"

#include <algorithm>
#include <cmath>

#include "attnav/errors.hpp"
#include "attnav/ops.hpp"

namespace attnav {

namespace {

struct ParamSlot {
  const char* name;
  Tensor AttentionParams::*attn = nullptr;
  Tensor PolicyParams::*policy = nullptr;
};

const std::vector<ParamSlot>& slots() {
  static const std::vector<ParamSlot> table = {
      {"attn.W_v", &AttentionParams::W_v},
      {"attn.W_g", &AttentionParams::W_g},
      {"attn.W_a", &AttentionParams::W_a},
      {"attn.W_m", &AttentionParams::W_m},
      {"attn.beta.W", &AttentionParams::beta_W},
      {"attn.beta.b", &AttentionParams::beta_b},
      {"policy.reduce.W", nullptr, &PolicyParams::reduce_W},
      {"policy.reduce.b", nullptr, &PolicyParams::reduce_b},
      {"policy.input.W", nullptr, &PolicyParams::input_W},
      {"policy.input.b", nullptr, &PolicyParams::input_b},
      {"policy.lstm.W_ih", nullptr, &PolicyParams::lstm_W_ih},
      {"policy.lstm.W_hh", nullptr, &PolicyParams::lstm_W_hh},
      {"policy.lstm.b", nullptr, &PolicyParams::lstm_b},
      {"policy.actor.W", nullptr, &PolicyParams::actor_W},
      {"policy.actor.b", nullptr, &PolicyParams::actor_b},
      {"policy.critic.W", nullptr, &PolicyParams::critic_W},
      {"policy.critic.b", nullptr, &PolicyParams::critic_b},
  };
  return table;
}

const Tensor& slot_ref(const Model& m, const ParamSlot& s) {
  return s.attn ? m.attn.*(s.attn) : m.policy.*(s.policy);
}

Tensor& slot_ref(Model& m, const ParamSlot& s) {
  return s.attn ? m.attn.*(s.attn) : m.policy.*(s.policy);
}

Tensor zeros(int rows, int cols) {
  return Tensor({static_cast<std::size_t>(rows), static_cast<std::size_t>(cols)}, 0.0);
}

Tensor zeros(int n) { return Tensor({static_cast<std::size_t>(n)}, 0.0); }

Tensor uniform(Rng& rng, int rows, int cols, double bound) {
  std::vector<double> v(static_cast<std::size_t>(rows * cols));
  for (double& x : v) x = (2.0 * uniform_unit(rng) - 1.0) * bound;
  return Tensor::matrix(static_cast<std::size_t>(rows), static_cast<std::size_t>(cols), std::move(v));
}

constexpr std::size_t kConfigFields = 7;

}  // namespace

PolicyParams PolicyParams::zeros(const ModelConfig& cfg) {
  const int a = static_cast<int>(kActionDim);
  return {attnav::zeros(cfg.d_p, cfg.d_v),        attnav::zeros(cfg.d_p),
          attnav::zeros(cfg.d_in, cfg.policy_input_dim()), attnav::zeros(cfg.d_in),
          attnav::zeros(4 * cfg.d_m, cfg.d_in),   attnav::zeros(4 * cfg.d_m, cfg.d_m),
          attnav::zeros(4 * cfg.d_m),             attnav::zeros(a, cfg.d_m),
          attnav::zeros(a),                       attnav::zeros(1, cfg.d_m),
          attnav::zeros(1)};
}

PolicyParams PolicyParams::init(const ModelConfig& cfg, Rng& rng) {
  PolicyParams p = zeros(cfg);
  p.reduce_W = uniform(rng, cfg.d_p, cfg.d_v, 1.0 / std::sqrt(cfg.d_v));
  p.input_W = uniform(rng, cfg.d_in, cfg.policy_input_dim(),
                      1.0 / std::sqrt(static_cast<double>(cfg.policy_input_dim())));
  const double lstm_bound = 1.0 / std::sqrt(static_cast<double>(cfg.d_m));
  p.lstm_W_ih = uniform(rng, 4 * cfg.d_m, cfg.d_in, lstm_bound);
  p.lstm_W_hh = uniform(rng, 4 * cfg.d_m, cfg.d_m, lstm_bound);
  std::vector<double> bias(static_cast<std::size_t>(4 * cfg.d_m), 0.0);
  // Forget gate starts open.
  std::fill(bias.begin() + cfg.d_m, bias.begin() + 2 * cfg.d_m, 1.0);
  p.lstm_b = Tensor::vector(std::move(bias));
  p.actor_W = uniform(rng, static_cast<int>(kActionDim), cfg.d_m, 0.01 * lstm_bound);
  p.critic_W = uniform(rng, 1, cfg.d_m, lstm_bound);
  return p;
}

Model Model::zeros(const ModelConfig& cfg) {
  return {cfg, AttentionParams::zeros(cfg.attention_dims()), PolicyParams::zeros(cfg)};
}

Model Model::init(const ModelConfig& cfg, std::uint64_t seed) {
  Rng rng = make_rng(seed, "model-init");
  Model m{cfg, AttentionParams::init(cfg.attention_dims(), rng), {}};
  m.policy = PolicyParams::init(cfg, rng);
  // Stored at float precision so checkpoints reproduce the model exactly.
  std::vector<Tensor> params = parameters(m);
  for (Tensor& t : params) t = round_to_float(t);
  return with_parameters(m, std::move(params));
}

const std::vector<std::string>& parameter_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& s : slots()) out.emplace_back(s.name);
    return out;
  }();
  return names;
}

std::vector<Tensor> parameters(const Model& model) {
  std::vector<Tensor> out;
  for (const auto& s : slots()) out.push_back(slot_ref(model, s));
  return out;
}

Model with_parameters(const Model& model, std::vector<Tensor> params) {
  if (params.size() != slots().size()) throw DimensionError("wrong number of parameter tensors");
  Model out = model;
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& dst = slot_ref(out, slots()[i]);
    if (dst.shape() != params[i].shape()) {
      throw DimensionError(std::string(slots()[i].name) + ": expected " +
                           shape_string(dst.shape()) + ", got " + shape_string(params[i].shape()));
    }
    dst = std::move(params[i]);
  }
  return out;
}

std::size_t parameter_count(const Model& model) {
  std::size_t n = 0;
  for (const Tensor& t : parameters(model)) n += t.size();
  return n;
}

std::vector<NamedTensor> model_records(const Model& model) {
  std::vector<NamedTensor> out;
  const ModelConfig& c = model.config;
  out.push_back({"meta.model_config",
                 Tensor::vector({static_cast<double>(c.n_v), static_cast<double>(c.d_v),
                                 static_cast<double>(c.d_g), static_cast<double>(c.d),
                                 static_cast<double>(c.d_p), static_cast<double>(c.d_in),
                                 static_cast<double>(c.d_m)})});
  for (const auto& s : slots()) out.push_back({s.name, slot_ref(model, s)});
  return out;
}

Model model_from_records(std::span<const NamedTensor> records) {
  auto find = [&](const std::string& name) -> const Tensor& {
    for (const auto& r : records) {
      if (r.name == name) return r.tensor;
    }
    throw FormatError("checkpoint is missing record '" + name + "'");
  };
  const Tensor& meta = find("meta.model_config");
  if (meta.size() != kConfigFields) throw FormatError("meta.model_config has wrong size");
  ModelConfig cfg;
  cfg.n_v = static_cast<int>(meta[0]);
  cfg.d_v = static_cast<int>(meta[1]);
  cfg.d_g = static_cast<int>(meta[2]);
  cfg.d = static_cast<int>(meta[3]);
  cfg.d_p = static_cast<int>(meta[4]);
  cfg.d_in = static_cast<int>(meta[5]);
  cfg.d_m = static_cast<int>(meta[6]);
  Model model = Model::zeros(cfg);
  std::vector<Tensor> params;
  for (const auto& s : slots()) params.push_back(find(s.name));
  try {
    return with_parameters(model, std::move(params));
  } catch (const DimensionError& e) {
    throw FormatError(std::string("checkpoint shape mismatch: ") + e.what());
  }
}

PolicyState initial_state(const ModelConfig& cfg) {
  return {Tensor({static_cast<std::size_t>(cfg.d_m)}, 0.0),
          Tensor({static_cast<std::size_t>(cfg.d_m)}, 0.0),
          Tensor({kActionDim}, 1.0 / static_cast<double>(kActionDim))};
}

ModelVars bind(Graph& g, const Model& model, bool requires_grad) {
  std::vector<Var> leaves;
  for (const Tensor& t : parameters(model)) leaves.push_back(g.leaf(t, requires_grad));
  return model_vars(leaves);
}

ModelVars model_vars(std::span<const Var> params) {
  if (params.size() != parameter_names().size()) {
    throw DimensionError("model_vars: expected " + std::to_string(parameter_names().size()) +
                         " parameters, got " + std::to_string(params.size()));
  }
  ModelVars v;
  v.all.assign(params.begin(), params.end());
  const auto& a = v.all;
  v.attn = {a[0], a[1], a[2], a[3], a[4], a[5]};
  v.reduce_W = a[6];
  v.reduce_b = a[7];
  v.input_W = a[8];
  v.input_b = a[9];
  v.lstm_W_ih = a[10];
  v.lstm_W_hh = a[11];
  v.lstm_b = a[12];
  v.actor_W = a[13];
  v.actor_b = a[14];
  v.critic_W = a[15];
  v.critic_b = a[16];
  return v;
}

StateVars bind(Graph& g, const PolicyState& state) {
  return {g.constant(state.h), g.constant(state.c), g.constant(state.u_a_prev)};
}

ForwardVars policy_forward(const ModelVars& p, const ModelConfig& cfg, Var v, Var u_g,
                           const StateVars& state, const AttentionFlags& flags) {
  ForwardVars out;
  out.attention = full_attention(p.attn, v, u_g, state.u_a, state.h, flags);
  // Rescaled so that uniform attention passes v through unchanged.
  Var v_hat = scale(out.attention.v_hat, static_cast<double>(cfg.n_v * cfg.n_v));
  Var reduced = add_row_bias(project_rows(v_hat, p.reduce_W), p.reduce_b);
  const std::array<Var, 3> parts = {reshape(reduced, {reduced.size()}), u_g, state.u_a};
  Var x = affine(p.input_W, concat(parts), p.input_b);
  auto [h, c] = lstm_step({p.lstm_W_ih, p.lstm_W_hh, p.lstm_b}, x, state.h, state.c);
  out.logits = affine(p.actor_W, h, p.actor_b);
  out.log_probs = log_softmax_flat(out.logits);
  out.probs = softmax_flat(out.logits);
  out.value = affine(p.critic_W, h, p.critic_b);
  out.next = {h, c, out.probs};
  return out;
}

PolicyOutput policy_forward(const Model& model, const Tensor& v, const Tensor& u_g,
                            const PolicyState& state, const AttentionFlags& flags) {
  Graph g;
  const ModelVars vars = bind(g, model, false);
  const ForwardVars f =
      policy_forward(vars, model.config, g.constant(v), g.constant(u_g), bind(g, state), flags);
  return {f.probs.value(), f.value.item(),
          PolicyState{f.next.h.value(), f.next.c.value(), f.next.u_a.value()},
          snapshot(f.attention, model.config.n_v)};
}

Var entropy(Var probs, Var log_probs) { return scale(dot(probs, log_probs), -1.0); }

std::vector<double> discounted_returns(std::span<const StepVars> steps, double gamma,
                                       double bootstrap) {
  std::vector<double> returns(steps.size());
  double running = bootstrap;
  for (std::size_t t = steps.size(); t-- > 0;) {
    running = steps[t].reward + gamma * running;
    returns[t] = running;
  }
  return returns;
}

Var nav_loss(std::span<const StepVars> steps, const LossConfig& cfg, double bootstrap) {
  if (steps.empty()) throw ContractError("nav_loss on an empty trajectory");
  const std::vector<double> returns = discounted_returns(steps, cfg.gamma, bootstrap);
  std::vector<double> advantages(steps.size());
  for (std::size_t t = 0; t < steps.size(); ++t) advantages[t] = returns[t] - steps[t].value.item();
  return nav_loss(steps, cfg, returns, advantages);
}

Var nav_loss(std::span<const StepVars> steps, const LossConfig& cfg, std::span<const double> returns,
             std::span<const double> advantages) {
  if (steps.empty()) throw ContractError("nav_loss on an empty trajectory");
  if (returns.size() != steps.size() || advantages.size() != steps.size()) {
    throw DimensionError("nav_loss: " + std::to_string(steps.size()) + " steps but " +
                         std::to_string(returns.size()) + " returns and " +
                         std::to_string(advantages.size()) + " advantages");
  }
  Graph& g = *steps.front().value.graph;
  std::optional<Var> total;
  for (std::size_t t = 0; t < steps.size(); ++t) {
    const StepVars& s = steps[t];
    Var log_pi = pick(s.log_probs, static_cast<std::size_t>(s.action));
    Var policy_term = scale(log_pi, -advantages[t]);
    Var err = sub(g.constant(Tensor::scalar(returns[t])), s.value);
    Var value_term = scale(mul(err, err), cfg.value_coef);
    Var term = add(policy_term, value_term);
    if (cfg.entropy_coef != 0.0) {
      term = sub(term, scale(entropy(s.probs, s.log_probs), cfg.entropy_coef));
    }
    total = total ? add(*total, term) : term;
  }
  return *total;
}

Var interaction_loss(std::span<const StepVars> prefix, int k_hat, double entropy_coef_int) {
  if (prefix.empty()) throw ContractError("interaction_loss on an empty prefix");
  if (k_hat <= 0) throw ContractError("k_hat must be positive");
  const std::size_t n = std::min(prefix.size(), static_cast<std::size_t>(k_hat));
  std::optional<Var> total;
  for (std::size_t t = 0; t < n; ++t) {
    Var term = scale(entropy(prefix[t].probs, prefix[t].log_probs), -entropy_coef_int);
    if (t >= 1) term = add(term, dot(prefix[t].probs, prefix[t - 1].probs));
    total = total ? add(*total, term) : term;
  }
  return scale(*total, 1.0 / k_hat);
}

std::optional<std::vector<Tensor>> adapt(std::span<const Tensor> theta,
                                         std::span<const Tensor> grads, double inner_lr) {
  if (theta.size() != grads.size()) throw DimensionError("adapt: parameter/gradient count mismatch");
  for (const Tensor& g : grads) {
    if (!g.all_finite()) return std::nullopt;
  }
  if (inner_lr == 0.0) return std::vector<Tensor>(theta.begin(), theta.end());
  std::vector<Tensor> out;
  out.reserve(theta.size());
  for (std::size_t k = 0; k < theta.size(); ++k) {
    if (theta[k].shape() != grads[k].shape()) {
      throw DimensionError("adapt: " + shape_string(theta[k].shape()) + " vs " +
                           shape_string(grads[k].shape()));
    }
    std::vector<double> v(theta[k].size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = theta[k][i] - inner_lr * grads[k][i];
    out.emplace_back(theta[k].shape(), std::move(v));
  }
  return out;
}

std::size_t greedy_action(std::span<const double> probs) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < probs.size(); ++i) {
    if (probs[i] > probs[best]) best = i;
  }
  return best;
}

std::size_t sample_action(std::span<const double> probs, Rng& rng) {
  const double u = uniform_unit(rng);
  double cdf = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    cdf += probs[i];
    if (u < cdf) return i;
  }
  // Rounding left u above the final partial sum; take the last non-zero entry.
  for (std::size_t i = probs.size(); i-- > 0;) {
    if (probs[i] > 0.0) return i;
  }
  return probs.size() - 1;
}

}  // namespace attnav
