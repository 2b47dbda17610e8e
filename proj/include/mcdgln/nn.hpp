#pragma once

// Small building blocks shared by the model branches: affine layers and
// ReLU MLPs whose weights live in a ParamSet.

#include <random>
#include <string>
#include <vector>

#include "mcdgln/gradcore.hpp"

namespace mcdgln::nn {

using grad::ParamSet;
using grad::Tape;
using grad::Tensor;
using grad::Var;

using Rng = std::mt19937_64;

Tensor uniform(std::size_t rows, std::size_t cols, double bound, Rng& rng);
Tensor glorot_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng);

/// x W + b with x of shape n x in, W in x out, b 1 x out.
struct Linear {
  Var weight;
  Var bias;

  Var operator()(Var x) const;
};

/// Linear layers with ReLU between them and none after the last.
struct Mlp {
  std::vector<Linear> layers;

  Var operator()(Var x) const;
};

/// Small positive bias so a freshly initialized MLP never emits an exact zero vector.
inline constexpr double kBiasInit = 0.01;

/// Registers <prefix>.w<i> (Glorot) / <prefix>.b<i> (kBiasInit) for each consecutive width pair.
void register_mlp(ParamSet& params, const std::string& prefix, const std::vector<std::size_t>& widths, Rng& rng);

/// Binds the parameters registered by register_mlp onto a tape.
Mlp bind_mlp(Tape& tape, ParamSet& params, const std::string& prefix, std::size_t layers);

}  // namespace mcdgln::nn
