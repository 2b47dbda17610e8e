#pragma once

// Hierarchical residual GCN over the tsFC graph, per-block max readout and
// single-head self-attention over the block embeddings.

#include <string>
#include <vector>

#include "mcdgln/nn.hpp"

namespace mcdgln::hgcn {

using grad::ParamSet;
using grad::Tape;
using grad::Tensor;
using grad::Var;

struct Graph {
  Tensor adjacency;  // binary, symmetric, zero diagonal
  Var features;      // node u's features = row u of tsFC
};

Graph build_graph(Var tsfc, double keep_ratio);

/// D^{-1/2} (A + I) D^{-1/2} with D the degree matrix of A + I.
Tensor normalize_adjacency(const Tensor& adjacency);

struct BlockParams {
  Var theta;  // d_in x d_out
  nn::Mlp mlp;  // (d_in + d_out) -> d_out -> d_out
};

struct AttentionParams {
  Var query, key, value;  // d x d
  nn::Mlp output;         // k*d -> d -> d
  nn::Linear edge;        // d -> E
};

/// Registers block and attention parameters. The first block's input width is `rois`.
void register_params(ParamSet& params, std::size_t rois, std::size_t hidden, std::size_t blocks, nn::Rng& rng);

BlockParams bind_block(Tape& tape, ParamSet& params, std::size_t block);
AttentionParams bind_attention(Tape& tape, ParamSet& params);

/// MLP(H (+) ReLU(A_norm H Theta)), concatenated along the feature axis.
Var gcn_block(Var h, Var adj_norm, const BlockParams& p);

/// Column-wise maximum over nodes.
Var readout_max(Var h);

struct AttentionOutput {
  Var embedding;  // y^G, 1 x d
  Var edge_attention;  // a, 1 x E, entries in (0, 1)
  Var weights;  // k x k softmax rows
};

AttentionOutput self_attention(Var tokens, const AttentionParams& p);

struct HgcnOutput {
  AttentionOutput attention;
  Var tokens;  // blocks x d readouts
};

HgcnOutput hgcn_forward(Tape& tape, ParamSet& params, const Graph& graph, std::size_t blocks);

}  // namespace mcdgln::hgcn
