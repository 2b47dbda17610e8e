#pragma once

// Attention-based connection encoder, fusion head and the composite loss.

#include <span>
#include <vector>

#include "mcdgln/nn.hpp"

namespace mcdgln::ace {

using grad::ParamSet;
using grad::Tape;
using grad::Tensor;
using grad::Var;

inline constexpr double kProbEps = 1e-12;
inline constexpr double kNormEps = 1e-12;

/// Encoder E -> d -> d and classifier 2d -> d -> 1.
void register_params(ParamSet& params, std::size_t rois, std::size_t hidden, nn::Rng& rng);
nn::Mlp bind_encoder(Tape& tape, ParamSet& params);
nn::Mlp bind_classifier(Tape& tape, ParamSet& params);

/// y^M = MLP(a (.) upper_triangle(masked sFC)).
Var encode_connections(Var masked_sfc, Var attention, const nn::Mlp& encoder);

/// sigmoid(classifier([y^M, y^G])), a 1 x 1 probability.
Var fuse_and_classify(Var y_conn, Var y_graph, const nn::Mlp& classifier);

/// Mean binary cross-entropy; predictions clamped to [eps, 1 - eps].
Var cross_entropy(std::span<const Var> predictions, std::span<const int> labels);

/// Mean of 1 - cos(z1_i, z2_i) with eps-guarded norms.
Var sim_loss(std::span<const Var> z1, std::span<const Var> z2);

struct LossReport {
  double classification = 0.0;  // L_c
  double similarity = 0.0;      // L_sim
  double total = 0.0;
  double lambda = 0.0;
};

LossReport total_loss(double classification, double similarity, double lambda);
/// Differentiable form of the same composite.
Var total_loss(Var classification, Var similarity, double lambda);

}  // namespace mcdgln::ace
