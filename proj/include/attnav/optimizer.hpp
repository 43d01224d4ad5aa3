#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "attnav/tensor.hpp"

namespace attnav {

enum class OptimizerKind { AdaptiveMoment, PlainGradient };

struct AdamHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct OptimizerState {
  std::vector<Tensor> m;  // first moments, lazily sized on the first step
  std::vector<Tensor> v;  // second moments
  std::int64_t step = 0;
};

// Adaptive-moment (bias-corrected) or plain gradient descent. Throws
// NumericError on non-finite gradients and DimensionError on shape mismatch.
std::vector<Tensor> optimizer_step(OptimizerKind kind, std::span<const Tensor> params,
                                   std::span<const Tensor> grads, double lr, OptimizerState& state,
                                   const AdamHyper& hyper = {});

// Elementwise mean over workers, summed in worker order.
std::vector<Tensor> average_gradients(std::span<const std::vector<Tensor>> per_worker);

double global_norm(std::span<const Tensor> grads);
// Scales grads so their global norm is at most max_norm (no-op when <= 0).
std::vector<Tensor> clip_by_global_norm(std::span<const Tensor> grads, double max_norm);

}  // namespace attnav
