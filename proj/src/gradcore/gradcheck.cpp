#include <algorithm>
#include <cmath>

#include "mcdgln/gradcore.hpp"

namespace mcdgln::grad {
namespace {

double rel_err(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max({1.0, std::abs(analytic), std::abs(numeric)});
}

void require_scalar(Var out) {
  if (!out.value().is_scalar()) {
    throw ShapeError("grad_check: program output must be scalar, got " + shape_str(out.shape()));
  }
}

Tensor perturbed(const Tensor& t, std::size_t i, double delta) {
  std::vector<double> v(t.values().begin(), t.values().end());
  v[i] += delta;
  return Tensor(t.rows(), t.cols(), std::move(v));
}

double eval_program(const Program& f, std::span<const Tensor> inputs) {
  Tape tape;
  std::vector<Var> vars;
  for (const auto& t : inputs) vars.push_back(tape.constant(t));
  Var out = f(tape, vars);
  require_scalar(out);
  return out.value().item();
}

}  // namespace

double grad_check(const Program& f, std::span<const Tensor> inputs, double eps) {
  Tape tape;
  std::vector<Var> leaves;
  for (const auto& t : inputs) leaves.push_back(tape.leaf(t));
  Var out = f(tape, leaves);
  require_scalar(out);
  tape.backward(out);

  double worst = 0.0;
  std::vector<Tensor> work(inputs.begin(), inputs.end());
  for (std::size_t k = 0; k < work.size(); ++k) {
    const Tensor analytic = tape.grad(leaves[k]);
    const Tensor original = work[k];
    for (std::size_t i = 0; i < original.size(); ++i) {
      work[k] = perturbed(original, i, eps);
      const double up = eval_program(f, work);
      work[k] = perturbed(original, i, -eps);
      const double down = eval_program(f, work);
      const double numeric = (up - down) / (2.0 * eps);
      if (!std::isfinite(numeric)) throw NumericalError("grad_check: non-finite finite difference");
      worst = std::max(worst, rel_err(analytic[i], numeric));
    }
    work[k] = original;
  }
  return worst;
}

double grad_check_params(const ParamProgram& f, ParamSet& params, double eps) {
  params.zero_grad();
  {
    Tape tape;
    Var out = f(tape, params);
    require_scalar(out);
    tape.backward(out);
  }
  std::vector<std::vector<double>> analytic;
  for (const auto& e : params.entries()) analytic.push_back(e.grad);

  auto eval = [&] {
    Tape tape;
    Var out = f(tape, params);
    return out.value().item();
  };

  double worst = 0.0;
  for (std::size_t k = 0; k < params.entries().size(); ++k) {
    const Tensor original = params.entries()[k].value;
    for (std::size_t i = 0; i < original.size(); ++i) {
      params.entries()[k].value = perturbed(original, i, eps);
      const double up = eval();
      params.entries()[k].value = perturbed(original, i, -eps);
      const double down = eval();
      const double numeric = (up - down) / (2.0 * eps);
      if (!std::isfinite(numeric)) throw NumericalError("grad_check: non-finite finite difference");
      worst = std::max(worst, rel_err(analytic[k][i], numeric));
    }
    params.entries()[k].value = original;
  }
  params.zero_grad();
  return worst;
}

}  // namespace mcdgln::grad
