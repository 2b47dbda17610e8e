#include "mcdgln/hgcn.hpp"

#include <cmath>

#include "mcdgln/connectivity.hpp"

namespace mcdgln::hgcn {
namespace {

std::string block_prefix(std::size_t b) { return "hgcn.b" + std::to_string(b); }

}  // namespace

Graph build_graph(Var tsfc, double keep_ratio) {
  return {conn::binarize_adjacency(tsfc.value(), keep_ratio), tsfc};
}

Tensor normalize_adjacency(const Tensor& adjacency) {
  const std::size_t m = adjacency.rows();
  if (adjacency.cols() != m) {
    throw ShapeError("normalize_adjacency: matrix " + grad::shape_str(adjacency.shape()) + " not square");
  }
  std::vector<double> inv_sqrt(m);
  for (std::size_t u = 0; u < m; ++u) {
    double deg = 1.0;
    for (std::size_t w = 0; w < m; ++w)
      if (w != u) deg += adjacency(u, w);
    inv_sqrt[u] = 1.0 / std::sqrt(deg);
  }
  std::vector<double> out(m * m);
  for (std::size_t u = 0; u < m; ++u)
    for (std::size_t w = 0; w < m; ++w) {
      const double a = u == w ? 1.0 : adjacency(u, w);
      out[u * m + w] = inv_sqrt[u] * a * inv_sqrt[w];
    }
  return Tensor(m, m, std::move(out));
}

void register_params(ParamSet& params, std::size_t rois, std::size_t hidden, std::size_t blocks, nn::Rng& rng) {
  std::size_t d_in = rois;
  for (std::size_t b = 0; b < blocks; ++b) {
    params.add(block_prefix(b) + ".theta", nn::glorot_uniform(d_in, hidden, rng));
    nn::register_mlp(params, block_prefix(b) + ".mlp", {d_in + hidden, hidden, hidden}, rng);
    d_in = hidden;
  }
  params.add("sa.query", nn::glorot_uniform(hidden, hidden, rng));
  params.add("sa.key", nn::glorot_uniform(hidden, hidden, rng));
  params.add("sa.value", nn::glorot_uniform(hidden, hidden, rng));
  nn::register_mlp(params, "sa.out", {blocks * hidden, hidden, hidden}, rng);
  const std::size_t edges = rois * (rois - 1) / 2;
  nn::register_mlp(params, "sa.edge", {hidden, edges}, rng);
}

BlockParams bind_block(Tape& tape, ParamSet& params, std::size_t block) {
  return {tape.param(params, block_prefix(block) + ".theta"), nn::bind_mlp(tape, params, block_prefix(block) + ".mlp", 2)};
}

AttentionParams bind_attention(Tape& tape, ParamSet& params) {
  AttentionParams p;
  p.query = tape.param(params, "sa.query");
  p.key = tape.param(params, "sa.key");
  p.value = tape.param(params, "sa.value");
  p.output = nn::bind_mlp(tape, params, "sa.out", 2);
  p.edge = nn::bind_mlp(tape, params, "sa.edge", 1).layers.front();
  return p;
}

Var gcn_block(Var h, Var adj_norm, const BlockParams& p) {
  if (adj_norm.rows() != h.rows() || adj_norm.cols() != h.rows()) {
    throw ShapeError("gcn_block: adjacency " + grad::shape_str(adj_norm.shape()) + " vs features " +
                     grad::shape_str(h.shape()));
  }
  Var message = grad::relu(grad::matmul(grad::matmul(adj_norm, h), p.theta));
  return p.mlp(grad::concat({h, message}, 1));
}

Var readout_max(Var h) { return grad::global_max(h); }

AttentionOutput self_attention(Var tokens, const AttentionParams& p) {
  const std::size_t k = tokens.rows();
  if (k == 0) throw ShapeError("self_attention: no tokens");
  const double d = static_cast<double>(p.query.cols());
  Var q = grad::matmul(tokens, p.query);
  Var kk = grad::matmul(tokens, p.key);
  Var v = grad::matmul(tokens, p.value);
  Var weights = grad::softmax(grad::scale(grad::matmul(q, grad::transpose(kk)), 1.0 / std::sqrt(d)));
  Var attended = grad::matmul(weights, v);
  AttentionOutput out;
  out.weights = weights;
  out.embedding = p.output(grad::reshape(attended, 1, attended.rows() * attended.cols()));
  out.edge_attention = grad::sigmoid(p.edge(grad::col_means(attended)));
  return out;
}

HgcnOutput hgcn_forward(Tape& tape, ParamSet& params, const Graph& graph, std::size_t blocks) {
  if (blocks == 0) throw ShapeError("hgcn_forward: need at least one block");
  Var adj = tape.constant(normalize_adjacency(graph.adjacency));
  Var h = graph.features;
  std::vector<Var> readouts;
  for (std::size_t b = 0; b < blocks; ++b) {
    h = gcn_block(h, adj, bind_block(tape, params, b));
    readouts.push_back(readout_max(h));
  }
  HgcnOutput out;
  out.tokens = grad::concat(readouts, 0);
  out.attention = self_attention(out.tokens, bind_attention(tape, params));
  return out;
}

}  // namespace mcdgln::hgcn
