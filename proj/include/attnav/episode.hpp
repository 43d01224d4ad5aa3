#pragma once

#include <array>
#include <optional>
#include <vector>

#include "attnav/policy.hpp"

namespace attnav {

struct AdaptationConfig {
  bool enabled = false;
  int k_hat = 6;
  double inner_lr = 1e-2;
};

struct EpisodeOptions {
  int cap = kTrainStepCap;
  bool greedy = false;
  bool compute_gradients = false;
  bool keep_bundles = false;
  AttentionFlags flags;
  LossConfig loss;
  AdaptationConfig adaptation;
};

struct StepLog {
  AgentPose pose;  // before the action
  Action action = Action::Done;
  double reward = 0.0;
  double log_prob = 0.0;
  double value = 0.0;
  double entropy = 0.0;
  std::array<double, 3> beta{};
  double target_mass = 0.0;  // fused attention on bins showing the target
  bool target_visible = false;
  std::vector<double> p_fused;
  std::optional<AttentionBundle> bundle;
};

struct EpisodeRun {
  Task task;
  std::vector<StepLog> steps;
  bool success = false;
  int path_length = 0;  // actions excluding Done
  AgentPose terminal;
  double total_reward = 0.0;
  double loss = 0.0;             // nav loss, when gradients were requested
  std::vector<Tensor> grads;     // canonical parameter order
  int adapt_calls = 0;
  bool adapt_skipped = false;
};

// Rolls the policy out on one task. Actions are sampled from pi with rng
// unless options.greedy. With compute_gradients the whole episode is one tape
// and grads holds d(nav_loss)/d(theta); with adaptation on, steps after k_hat
// run on theta' = theta - inner_lr grad L_int and their gradients are folded
// back onto theta (first-order).
EpisodeRun run_episode(const Model& model, const Scene& scene, const Task& task,
                       const EpisodeOptions& options, Rng* rng = nullptr);

}  // namespace attnav
