#pragma once

// Weighted edge aggregation: stacked cross-convolution layers over the
// dynamic connectivity stack followed by global fusion with the static
// matrix, producing the task-specific connectivity (tsFC).

#include <span>
#include <string>
#include <vector>

#include "mcdgln/nn.hpp"

namespace mcdgln::wea {

using grad::ParamSet;
using grad::Tape;
using grad::Tensor;
using grad::Var;

inline constexpr double kFusionEps = 1e-12;

std::string weight_name(std::size_t layer, std::size_t channel);

/// One M x M weight per (layer, channel), uniform in [-1/M, 1/M].
void register_params(ParamSet& params, std::size_t layers, std::size_t channels, std::size_t rois, nn::Rng& rng);

/// Row-i plus column-j weighted sums of one channel:
/// out_ij = sum_m e_im w_im + sum_n e_nj w_nj.
Var cross_conv_preactivation(Var edges, Var weight);

/// tanh of the pre-activation, per channel. Channel counts must agree.
std::vector<Var> cross_conv_layer(std::span<const Var> stack, std::span<const Var> weights);

/// Applies `layers` cross-convolution layers whose weights are in `params`.
std::vector<Var> wea_forward(Tape& tape, ParamSet& params, std::span<const Var> stack, std::size_t layers);

struct FusionResult {
  Var tsfc;                       // symmetrized fused matrix
  std::size_t zero_matrices = 0;  // inputs whose Frobenius norm was exactly 0
};

/// sum_k alpha_k c_k + alpha_s s with alpha = mean / (||.||_F + eps), then
/// (X + X^T) / 2. Warns on all-zero inputs.
FusionResult global_fusion(std::span<const Var> updated, Var sfc, double eps = kFusionEps);

}  // namespace mcdgln::wea
