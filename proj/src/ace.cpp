#include "mcdgln/ace.hpp"

#include <limits>

namespace mcdgln::ace {

void register_params(ParamSet& params, std::size_t rois, std::size_t hidden, nn::Rng& rng) {
  const std::size_t edges = rois * (rois - 1) / 2;
  nn::register_mlp(params, "ace.enc", {edges, hidden, hidden}, rng);
  nn::register_mlp(params, "ace.cls", {2 * hidden, hidden, 1}, rng);
}

nn::Mlp bind_encoder(Tape& tape, ParamSet& params) { return nn::bind_mlp(tape, params, "ace.enc", 2); }
nn::Mlp bind_classifier(Tape& tape, ParamSet& params) { return nn::bind_mlp(tape, params, "ace.cls", 2); }

Var encode_connections(Var masked_sfc, Var attention, const nn::Mlp& encoder) {
  Var v = grad::upper_triangle_vectorize(masked_sfc);
  if (attention.shape() != v.shape()) {
    throw ShapeError("encode_connections: attention " + grad::shape_str(attention.shape()) + " vs edge vector " +
                     grad::shape_str(v.shape()));
  }
  return encoder(grad::multiply(attention, v));
}

Var fuse_and_classify(Var y_conn, Var y_graph, const nn::Mlp& classifier) {
  return grad::sigmoid(classifier(grad::concat({y_conn, y_graph}, 1)));
}

Var cross_entropy(std::span<const Var> predictions, std::span<const int> labels) {
  if (predictions.empty() || predictions.size() != labels.size()) {
    throw ShapeError("cross_entropy: " + std::to_string(predictions.size()) + " predictions vs " +
                     std::to_string(labels.size()) + " labels");
  }
  std::vector<double> y;
  for (int l : labels) {
    if (l != 0 && l != 1) throw DataError("cross_entropy: label " + std::to_string(l) + " not in {0, 1}");
    y.push_back(l);
  }
  Tape& tape = predictions[0].tape();
  Var p = grad::clamp(grad::concat(predictions, 0), kProbEps, 1.0 - kProbEps);
  Var yv = tape.constant(Tensor(y.size(), 1, y));
  Var not_y = tape.constant(Tensor(y.size(), 1, [&] {
    std::vector<double> v;
    for (double x : y) v.push_back(1.0 - x);
    return v;
  }()));
  Var ll = grad::add(grad::multiply(yv, grad::log(p)),
                     grad::multiply(not_y, grad::log(grad::add_scalar(grad::scale(p, -1.0), 1.0))));
  return grad::scale(grad::mean(ll), -1.0);
}

namespace {

Var guarded_norm(Var z) {
  return grad::clamp(grad::frobenius_norm(z), kNormEps, std::numeric_limits<double>::max());
}

}  // namespace

Var sim_loss(std::span<const Var> z1, std::span<const Var> z2) {
  if (z1.empty() || z1.size() != z2.size()) {
    throw ShapeError("sim_loss: batch sizes " + std::to_string(z1.size()) + " and " + std::to_string(z2.size()));
  }
  std::vector<Var> dissim;
  for (std::size_t i = 0; i < z1.size(); ++i) {
    if (z1[i].shape() != z2[i].shape()) {
      throw ShapeError("sim_loss: " + grad::shape_str(z1[i].shape()) + " vs " + grad::shape_str(z2[i].shape()));
    }
    Var dot = grad::sum(grad::multiply(z1[i], z2[i]));
    Var norms = grad::multiply(guarded_norm(z1[i]), guarded_norm(z2[i]));
    dissim.push_back(grad::add_scalar(grad::scale(grad::divide(dot, norms), -1.0), 1.0));
  }
  return grad::mean(grad::concat(dissim, 0));
}

LossReport total_loss(double classification, double similarity, double lambda) {
  return {classification, similarity, classification + lambda * similarity, lambda};
}

Var total_loss(Var classification, Var similarity, double lambda) {
  return grad::add(classification, grad::scale(similarity, lambda));
}

}  // namespace mcdgln::ace
