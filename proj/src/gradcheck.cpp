#include "attnav/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "attnav/errors.hpp"

namespace attnav {

namespace {

double run(const Objective& f, std::span<const Tensor> theta, bool with_grad, Graph& g,
           std::vector<Var>& leaves) {
  leaves.clear();
  for (const Tensor& t : theta) leaves.push_back(g.leaf(t, with_grad));
  Var root = f(g, leaves);
  const double value = root.item();
  if (!std::isfinite(value)) throw NumericError("objective is not finite at theta");
  if (with_grad) g.backward(root);
  return value;
}

}  // namespace

double evaluate_objective(const Objective& f, std::span<const Tensor> theta) {
  Graph g;
  std::vector<Var> leaves;
  return run(f, theta, false, g, leaves);
}

std::vector<Tensor> objective_gradients(const Objective& f, std::span<const Tensor> theta) {
  Graph g;
  std::vector<Var> leaves;
  run(f, theta, true, g, leaves);
  std::vector<Tensor> grads;
  for (Var v : leaves) grads.push_back(g.grad(v));
  return grads;
}

GradCheckResult grad_check(const Objective& f, std::span<const Tensor> theta, double eps) {
  if (!(eps > 0.0)) throw ContractError("grad_check: eps must be positive");
  const std::vector<Tensor> analytic = objective_gradients(f, theta);

  std::vector<Tensor> probe(theta.begin(), theta.end());
  GradCheckResult result;
  for (std::size_t p = 0; p < probe.size(); ++p) {
    const Tensor base = probe[p];
    std::vector<double> values(base.data().begin(), base.data().end());
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double x0 = values[i];
      values[i] = x0 + eps;
      probe[p] = Tensor(base.shape(), values);
      const double up = evaluate_objective(f, probe);
      values[i] = x0 - eps;
      probe[p] = Tensor(base.shape(), values);
      const double down = evaluate_objective(f, probe);
      values[i] = x0;

      const double numeric = (up - down) / (2.0 * eps);
      const double a = analytic[p][i];
      const double err =
          std::abs(a - numeric) / std::max({1.0, std::abs(a), std::abs(numeric)});
      ++result.coordinates;
      if (result.coordinates == 1 || err > result.max_rel_error) {
        result.max_rel_error = err;
        result.worst_param = p;
        result.worst_index = i;
        result.analytic = a;
        result.numeric = numeric;
      }
    }
    probe[p] = base;
  }
  return result;
}

}  // namespace attnav
