#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "attnav/graph.hpp"

namespace attnav {

// Scalar objective built on a fresh graph from one leaf per parameter.
using Objective = std::function<Var(Graph&, std::span<const Var> params)>;

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t worst_param = 0;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t coordinates = 0;
};

// Compares reverse-mode gradients against central differences, coordinate by
// coordinate: |analytic - numeric| / max(1, |analytic|, |numeric|).
// Throws NumericError when f is not finite at theta.
GradCheckResult grad_check(const Objective& f, std::span<const Tensor> theta, double eps = 1e-5);

// Forward-only evaluation of f at theta.
double evaluate_objective(const Objective& f, std::span<const Tensor> theta);

// Analytic gradients of f at theta, one tensor per parameter.
std::vector<Tensor> objective_gradients(const Objective& f, std::span<const Tensor> theta);

}  // namespace attnav
