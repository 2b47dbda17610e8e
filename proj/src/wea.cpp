#include "mcdgln/wea.hpp"

#include <iostream>

namespace mcdgln::wea {

std::string weight_name(std::size_t layer, std::size_t channel) {
  return "wea.l" + std::to_string(layer) + ".c" + std::to_string(channel);
}

void register_params(ParamSet& params, std::size_t layers, std::size_t channels, std::size_t rois, nn::Rng& rng) {
  const double bound = 1.0 / static_cast<double>(rois);
  for (std::size_t l = 0; l < layers; ++l)
    for (std::size_t c = 0; c < channels; ++c) params.add(weight_name(l, c), nn::uniform(rois, rois, bound, rng));
}

Var cross_conv_preactivation(Var edges, Var weight) {
  if (edges.shape() != weight.shape() || edges.rows() != edges.cols()) {
    throw ShapeError("cross_conv_layer: channel " + grad::shape_str(edges.shape()) + " vs weight " +
                     grad::shape_str(weight.shape()));
  }
  Var p = grad::multiply(edges, weight);
  return grad::add(grad::row_sums(p), grad::col_sums(p));  // (M x 1) + (1 x M) broadcast
}

std::vector<Var> cross_conv_layer(std::span<const Var> stack, std::span<const Var> weights) {
  if (stack.size() != weights.size()) {
    throw ShapeError("cross_conv_layer: " + std::to_string(stack.size()) + " channels but " +
                     std::to_string(weights.size()) + " weight matrices");
  }
  std::vector<Var> out;
  out.reserve(stack.size());
  for (std::size_t c = 0; c < stack.size(); ++c) out.push_back(grad::tanh(cross_conv_preactivation(stack[c], weights[c])));
  return out;
}

std::vector<Var> wea_forward(Tape& tape, ParamSet& params, std::span<const Var> stack, std::size_t layers) {
  std::vector<Var> cur(stack.begin(), stack.end());
  for (std::size_t l = 0; l < layers; ++l) {
    std::vector<Var> w;
    for (std::size_t c = 0; c < cur.size(); ++c) {
      const auto name = weight_name(l, c);
      if (!params.contains(name)) {
        throw ShapeError("wea_forward: no weight '" + name + "' for channel " + std::to_string(c));
      }
      w.push_back(tape.param(params, name));
    }
    cur = cross_conv_layer(cur, w);
  }
  return cur;
}

FusionResult global_fusion(std::span<const Var> updated, Var sfc, double eps) {
  FusionResult res;
  auto weighted = [&](Var c) {
    if (c.shape() != sfc.shape()) {
      throw ShapeError("global_fusion: " + grad::shape_str(c.shape()) + " vs sFC " + grad::shape_str(sfc.shape()));
    }
    Var norm = grad::frobenius_norm(c);
    if (norm.value().item() == 0.0) ++res.zero_matrices;
    Var alpha = grad::divide(grad::mean(c), grad::add_scalar(norm, eps));
    return grad::multiply(alpha, c);
  };
  Var fused = weighted(sfc);
  for (const auto& c : updated) fused = grad::add(fused, weighted(c));
  if (res.zero_matrices > 0) {
    std::cerr << "warning: global_fusion: " << res.zero_matrices << " all-zero input matrices\n";
  }
  res.tsfc = grad::scale(grad::add(fused, grad::transpose(fused)), 0.5);
  return res;
}

}  // namespace mcdgln::wea
