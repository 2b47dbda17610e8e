#include "mcdgln/nn.hpp"

#include <cmath>

namespace mcdgln::nn {

Tensor uniform(std::size_t rows, std::size_t cols, double bound, Rng& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::vector<double> v(rows * cols);
  for (auto& x : v) x = dist(rng);
  return Tensor(rows, cols, std::move(v));
}

Tensor glorot_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  return uniform(fan_in, fan_out, std::sqrt(6.0 / static_cast<double>(fan_in + fan_out)), rng);
}

Var Linear::operator()(Var x) const { return grad::add(grad::matmul(x, weight), bias); }

Var Mlp::operator()(Var x) const {
  for (std::size_t i = 0; i < layers.size(); ++i) {
    x = layers[i](x);
    if (i + 1 < layers.size()) x = grad::relu(x);
  }
  return x;
}

void register_mlp(ParamSet& params, const std::string& prefix, const std::vector<std::size_t>& widths, Rng& rng) {
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    params.add(prefix + ".w" + std::to_string(i), glorot_uniform(widths[i], widths[i + 1], rng));
    params.add(prefix + ".b" + std::to_string(i), Tensor::full(1, widths[i + 1], kBiasInit));
  }
}

Mlp bind_mlp(Tape& tape, ParamSet& params, const std::string& prefix, std::size_t layers) {
  Mlp mlp;
  for (std::size_t i = 0; i < layers; ++i) {
    mlp.layers.push_back({tape.param(params, prefix + ".w" + std::to_string(i)),
                          tape.param(params, prefix + ".b" + std::to_string(i))});
  }
  return mlp;
}

}  // namespace mcdgln::nn
