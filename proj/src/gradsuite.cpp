#include "mcdgln/gradsuite.hpp"

#include <algorithm>
#include <random>

namespace mcdgln::gradsuite {
namespace {

using grad::Program;
using grad::Tape;
using grad::Tensor;
using grad::Var;

Tensor random_tensor(std::size_t r, std::size_t c, double lo, double hi, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> d(lo, hi);
  std::vector<double> v(r * c);
  for (auto& x : v) x = d(rng);
  return Tensor(r, c, std::move(v));
}

// Reduces a primitive's output to a scalar through a fixed random weighting,
// so every output entry contributes a distinct gradient.
Var weighted_sum(Var out, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Var w = out.tape().constant(random_tensor(out.rows(), out.cols(), -1.0, 1.0, rng));
  return grad::sum(grad::multiply(out, w));
}

}  // namespace

std::vector<Entry> check_primitives(std::uint64_t seed, double eps) {
  std::mt19937_64 rng(seed);
  auto rnd = [&](std::size_t r, std::size_t c, double lo = -1.0, double hi = 1.0) {
    return random_tensor(r, c, lo, hi, rng);
  };
  const std::uint64_t ws = seed + 17;

  struct Case {
    std::string name;
    Program program;
    std::vector<Tensor> inputs;
  };
  using Vars = std::span<const Var>;
  std::vector<Case> cases = {
      {"add", [&](Tape&, Vars v) { return weighted_sum(grad::add(v[0], v[1]), ws); }, {rnd(3, 4), rnd(3, 4)}},
      {"add_broadcast", [&](Tape&, Vars v) { return weighted_sum(grad::add(v[0], v[1]), ws); }, {rnd(3, 1), rnd(1, 4)}},
      {"subtract", [&](Tape&, Vars v) { return weighted_sum(grad::subtract(v[0], v[1]), ws); }, {rnd(3, 4), rnd(1, 4)}},
      {"elementwise_multiply", [&](Tape&, Vars v) { return weighted_sum(grad::multiply(v[0], v[1]), ws); },
       {rnd(3, 4), rnd(3, 4)}},
      {"divide", [&](Tape&, Vars v) { return weighted_sum(grad::divide(v[0], v[1]), ws); },
       {rnd(3, 4), rnd(3, 4, 0.5, 1.5)}},
      {"matmul", [&](Tape&, Vars v) { return weighted_sum(grad::matmul(v[0], v[1]), ws); }, {rnd(3, 5), rnd(5, 2)}},
      {"scalar_multiply", [&](Tape&, Vars v) { return weighted_sum(grad::scale(v[0], -1.7), ws); }, {rnd(2, 3)}},
      {"add_scalar", [&](Tape&, Vars v) { return weighted_sum(grad::add_scalar(v[0], 0.3), ws); }, {rnd(2, 3)}},
      {"transpose", [&](Tape&, Vars v) { return weighted_sum(grad::transpose(v[0]), ws); }, {rnd(3, 5)}},
      {"concat_rows", [&](Tape&, Vars v) { return weighted_sum(grad::concat({v[0], v[1]}, 0), ws); },
       {rnd(2, 3), rnd(4, 3)}},
      {"concat_cols", [&](Tape&, Vars v) { return weighted_sum(grad::concat({v[0], v[1]}, 1), ws); },
       {rnd(3, 2), rnd(3, 4)}},
      {"reshape", [&](Tape&, Vars v) { return weighted_sum(grad::reshape(v[0], 2, 6), ws); }, {rnd(3, 4)}},
      {"sum", [&](Tape&, Vars v) { return grad::scale(grad::sum(v[0]), 0.7); }, {rnd(3, 4)}},
      {"mean", [&](Tape&, Vars v) { return grad::mean(grad::multiply(v[0], v[0])); }, {rnd(3, 4)}},
      {"row_sums", [&](Tape&, Vars v) { return weighted_sum(grad::row_sums(v[0]), ws); }, {rnd(3, 4)}},
      {"col_sums", [&](Tape&, Vars v) { return weighted_sum(grad::col_sums(v[0]), ws); }, {rnd(3, 4)}},
      {"col_means", [&](Tape&, Vars v) { return weighted_sum(grad::col_means(v[0]), ws); }, {rnd(3, 4)}},
      {"row_max", [&](Tape&, Vars v) { return weighted_sum(grad::row_max(v[0]), ws); }, {rnd(4, 5)}},
      {"global_max", [&](Tape&, Vars v) { return weighted_sum(grad::global_max(v[0]), ws); }, {rnd(5, 3)}},
      {"relu", [&](Tape&, Vars v) { return weighted_sum(grad::relu(v[0]), ws); }, {rnd(4, 4)}},
      {"tanh", [&](Tape&, Vars v) { return weighted_sum(grad::tanh(v[0]), ws); }, {rnd(4, 4)}},
      {"sigmoid", [&](Tape&, Vars v) { return weighted_sum(grad::sigmoid(v[0]), ws); }, {rnd(4, 4)}},
      {"log", [&](Tape&, Vars v) { return weighted_sum(grad::log(v[0]), ws); }, {rnd(3, 3, 0.5, 1.5)}},
      {"clamp", [&](Tape&, Vars v) { return weighted_sum(grad::clamp(v[0], -0.5, 0.5), ws); }, {rnd(4, 4)}},
      {"softmax", [&](Tape&, Vars v) { return weighted_sum(grad::softmax(v[0]), ws); }, {rnd(3, 5)}},
      {"frobenius_norm", [&](Tape&, Vars v) { return grad::frobenius_norm(v[0]); }, {rnd(3, 4)}},
      {"upper_triangle_vectorize",
       [&](Tape&, Vars v) { return weighted_sum(grad::upper_triangle_vectorize(v[0]), ws); }, {rnd(5, 5)}},
  };

  std::vector<Entry> out;
  for (const auto& c : cases) out.push_back({c.name, grad::grad_check(c.program, c.inputs, eps)});
  return out;
}

Toy make_toy(std::uint64_t seed) {
  Toy toy;
  toy.config.window_length = 10;
  toy.config.stride = 10;
  toy.config.hidden = 8;
  toy.config.keep_ratio = 0.5;
  toy.config.sparsify_q = 0.5;
  toy.config.lambda = 0.1;
  toy.config.seed = seed;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int s = 0; s < 2; ++s) {
    std::vector<double> v(4 * 20);
    for (auto& x : v) x = gauss(rng);
    io::BoldSeries series{"toy-" + std::to_string(s), s, Tensor(4, 20, std::move(v))};
    toy.subjects.push_back(model::prepare_subject(series, {toy.config.window_length, toy.config.stride}));
  }
  toy.params = model::init_params(model::shape_for(toy.config, 4, 20), seed + 1);
  return toy;
}

Entry check_full_model(std::uint64_t seed, double eps) {
  Toy toy = make_toy(seed);
  std::vector<const model::SubjectInput*> batch;
  for (const auto& s : toy.subjects) batch.push_back(&s);
  const double err = grad::grad_check_params(
      [&](Tape& tape, grad::ParamSet& ps) { return model::batch_loss(tape, ps, batch, toy.config).total; }, toy.params,
      eps);
  return {"full_model_loss", err};
}

std::vector<Entry> run_all(std::uint64_t seed, double eps) {
  auto out = check_primitives(seed, eps);
  out.push_back(check_full_model(seed, eps));
  return out;
}

}  // namespace mcdgln::gradsuite
