#pragma once

#include <cstdint>

#include "attnav/gradcheck.hpp"
#include "attnav/policy.hpp"

namespace attnav {

// Small model used for finite-difference checks of the whole stack.
ModelConfig gradcheck_model_config();

// Random observations, target embedding, actions and rewards for a short
// unrolled episode; the objective is the navigation loss with returns and
// advantages frozen at theta, so its exact gradient is what training uses.
struct StackInstance {
  ModelConfig config;
  Model model;
  std::vector<Tensor> views;  // [n_v^2 x d_v] per step
  Tensor u_g;
  std::vector<Action> actions;
  std::vector<double> rewards;
  AttentionFlags flags;
  LossConfig loss;
};

StackInstance make_stack_instance(std::uint64_t seed, const ModelConfig& cfg, int steps = 3);
Objective stack_objective(const StackInstance& instance);
GradCheckResult check_stack(const StackInstance& instance, double eps = 1e-5);

}  // namespace attnav
