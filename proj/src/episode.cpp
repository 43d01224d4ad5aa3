#include "attnav/episode.hpp"

#include <cmath>
#include <memory>

#include "attnav/errors.hpp"
#include "attnav/observe.hpp"
#include "attnav/ops.hpp"

namespace attnav {

namespace {

double mask_mass(const std::vector<bool>& mask, std::span<const double> p, bool& any) {
  double mass = 0.0;
  any = false;
  for (std::size_t k = 0; k < mask.size(); ++k) {
    if (!mask[k]) continue;
    any = true;
    mass += p[k];
  }
  return mass;
}

}  // namespace

EpisodeRun run_episode(const Model& model, const Scene& scene, const Task& task,
                       const EpisodeOptions& options, Rng* rng) {
  if (!options.greedy && rng == nullptr) throw ContractError("sampling rollout needs an rng");
  if (!valid_pose(scene, task.start)) throw ContractError("task start pose is invalid");
  const ModelConfig& cfg = model.config;
  const Tensor u_g = target_embedding(task.target, cfg.d_g).u_g;

  // One tape per episode when gradients are needed (for the loss or for the
  // adaptation step); otherwise a fresh tape per step.
  const bool taped = options.compute_gradients || options.adaptation.enabled;
  auto graph = std::make_unique<Graph>();
  ModelVars vars = bind(*graph, model, taped);
  std::optional<ModelVars> adapted;
  StateVars state = bind(*graph, initial_state(cfg));
  PolicyState plain_state = initial_state(cfg);

  EpisodeRun run;
  run.task = task;
  std::vector<StepVars> trace;
  AgentPose pose = task.start;
  int steps_used = 0;
  bool done = false;

  while (!done) {
    if (!taped) {
      graph = std::make_unique<Graph>();
      vars = bind(*graph, model, false);
      state = bind(*graph, plain_state);
    }
    Graph& g = *graph;
    const FeatureMap view = render(scene, pose, cfg.n_v, cfg.d_v);
    const ModelVars& active = adapted ? *adapted : vars;
    const ForwardVars f = policy_forward(active, cfg, g.constant(view.values), g.constant(u_g),
                                         state, options.flags);
    const auto probs = f.probs.value().data();
    const std::size_t a =
        options.greedy ? greedy_action(probs) : sample_action(probs, *rng);
    const Action action = action_from_index(a);
    const StepOutcome out = step(scene, pose, action, task.target, steps_used, options.cap);

    StepLog log;
    log.pose = pose;
    log.action = action;
    log.reward = out.reward;
    log.log_prob = f.log_probs.value()[a];
    log.value = f.value.item();
    log.entropy = entropy(f.probs, f.log_probs).item();
    const AttentionBundle bundle = snapshot(f.attention, cfg.n_v);
    log.beta = bundle.beta;
    log.p_fused.assign(bundle.p_fused.data().begin(), bundle.p_fused.data().end());
    log.target_mass = mask_mass(target_visible_mask(scene, pose, task.target, cfg.n_v),
                                log.p_fused, log.target_visible);
    if (options.keep_bundles) log.bundle = bundle;
    run.steps.push_back(std::move(log));
    run.total_reward += out.reward;
    if (action != Action::Done) ++run.path_length;

    trace.push_back({action, out.reward, f.log_probs, f.probs, f.value});
    state = f.next;
    if (!taped) {
      plain_state = {f.next.h.value(), f.next.c.value(), f.next.u_a.value()};
    }
    pose = out.pose;
    steps_used = out.steps_used;
    done = out.done;
    run.success = out.success;

    if (options.adaptation.enabled && !adapted &&
        steps_used == options.adaptation.k_hat && !done) {
      Var l_int = interaction_loss(trace, options.adaptation.k_hat, options.loss.entropy_coef_int);
      g.backward(l_int);
      std::vector<Tensor> grads;
      for (Var v : vars.all) grads.push_back(g.grad(v));
      const auto theta_prime = adapt(parameters(model), grads, options.adaptation.inner_lr);
      if (theta_prime) {
        adapted = bind(g, with_parameters(model, *theta_prime), true);
        ++run.adapt_calls;
      } else {
        run.adapt_skipped = true;
      }
    }
  }
  run.terminal = pose;

  if (options.compute_gradients) {
    Graph& g = *graph;
    Var loss = nav_loss(trace, options.loss, 0.0);
    run.loss = loss.item();
    g.backward(loss);
    for (std::size_t k = 0; k < vars.all.size(); ++k) {
      Tensor grad = g.grad(vars.all[k]);
      if (adapted) {
        const Tensor extra = g.grad(adapted->all[k]);
        std::vector<double> sum(grad.data().begin(), grad.data().end());
        for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += extra[i];
        grad = Tensor(grad.shape(), std::move(sum));
      }
      run.grads.push_back(std::move(grad));
    }
  }
  return run;
}

}  // namespace attnav
