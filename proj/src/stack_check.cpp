#include "attnav/stack_check.hpp"

#include <cmath>

#include "attnav/ops.hpp"

namespace attnav {

namespace {

Tensor gaussian(Rng& rng, Shape shape, double scale) {
  std::normal_distribution<double> n(0.0, scale);
  std::vector<double> v(shape_size(shape));
  for (double& x : v) x = n(rng);
  return Tensor(std::move(shape), std::move(v));
}

struct Unrolled {
  std::vector<StepVars> steps;
};

Unrolled unroll(Graph& g, const ModelVars& vars, const StackInstance& inst) {
  Unrolled u;
  StateVars state = bind(g, initial_state(inst.config));
  const Var u_g = g.constant(inst.u_g);
  for (std::size_t t = 0; t < inst.views.size(); ++t) {
    const ForwardVars f = policy_forward(vars, inst.config, g.constant(inst.views[t]), u_g, state, inst.flags);
    u.steps.push_back({inst.actions[t], inst.rewards[t], f.log_probs, f.probs, f.value});
    state = f.next;
  }
  return u;
}

}  // namespace

ModelConfig gradcheck_model_config() {
  ModelConfig c;
  c.n_v = 7;
  c.d_v = 8;
  c.d_g = 8;
  c.d = 16;
  c.d_p = 4;
  c.d_in = 16;
  c.d_m = 16;
  return c;
}

StackInstance make_stack_instance(std::uint64_t seed, const ModelConfig& cfg, int steps) {
  StackInstance inst;
  inst.config = cfg;
  inst.model = Model::init(cfg, seed);
  Rng rng = make_rng(seed, "stack-instance");
  // Random beta head and larger actor weights so every path carries signal.
  std::vector<Tensor> params = parameters(inst.model);
  params[4] = gaussian(rng, params[4].shape(), 0.5);
  params[13] = gaussian(rng, params[13].shape(), 0.3);
  params[15] = gaussian(rng, params[15].shape(), 0.3);
  inst.model = with_parameters(inst.model, std::move(params));
  const auto n2 = static_cast<std::size_t>(cfg.n_v * cfg.n_v);
  for (int t = 0; t < steps; ++t) {
    inst.views.push_back(gaussian(rng, {n2, static_cast<std::size_t>(cfg.d_v)}, 1.0));
    inst.actions.push_back(action_from_index(uniform_index(rng, kActionDim)));
    inst.rewards.push_back(uniform_unit(rng) < 0.3 ? kSuccessReward : kStepPenalty);
  }
  Tensor g = gaussian(rng, {static_cast<std::size_t>(cfg.d_g)}, 1.0);
  double norm = 0.0;
  for (double x : g.data()) norm += x * x;
  std::vector<double> unit(g.data().begin(), g.data().end());
  for (double& x : unit) x /= std::sqrt(norm);
  inst.u_g = Tensor(g.shape(), std::move(unit));
  return inst;
}

Objective stack_objective(const StackInstance& inst) {
  // Returns and advantages come from the unperturbed parameters.
  Graph base;
  const Unrolled ref = unroll(base, bind(base, inst.model, false), inst);
  const std::vector<double> returns = discounted_returns(ref.steps, inst.loss.gamma, 0.0);
  std::vector<double> advantages(returns.size());
  for (std::size_t t = 0; t < returns.size(); ++t) advantages[t] = returns[t] - ref.steps[t].value.item();

  return [inst, returns, advantages](Graph& g, std::span<const Var> params) {
    const Unrolled u = unroll(g, model_vars(params), inst);
    return nav_loss(u.steps, inst.loss, returns, advantages);
  };
}

GradCheckResult check_stack(const StackInstance& inst, double eps) {
  const auto theta = parameters(inst.model);
  return grad_check(stack_objective(inst), theta, eps);
}

}  // namespace attnav
