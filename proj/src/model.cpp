#include "mcdgln/model.hpp"

#include "mcdgln/med.hpp"
#include "mcdgln/wea.hpp"

namespace mcdgln::model {
namespace {

conn::WindowConfig windows_of(const io::RunConfig& cfg) { return {cfg.window_length, cfg.stride}; }

}  // namespace

SubjectInput prepare_subject(const io::BoldSeries& series, const conn::WindowConfig& windows) {
  SubjectInput s;
  s.subject_id = series.subject_id;
  s.label = series.label;
  try {
    s.sfc = conn::static_fc(series.signal).values;
    for (auto& w : conn::dynamic_fc(series.signal, windows).windows) s.dfc.push_back(std::move(w.values));
  } catch (const DataError& e) {
    throw DataError("subject " + series.subject_id + ": " + e.what());
  }
  return s;
}

std::vector<SubjectInput> prepare_dataset(const io::Dataset& data, const io::RunConfig& cfg) {
  std::vector<SubjectInput> out;
  out.reserve(data.subjects.size());
  for (const auto& s : data.subjects) out.push_back(prepare_subject(s, windows_of(cfg)));
  return out;
}

ModelShape shape_for(const io::RunConfig& cfg, std::size_t rois, std::size_t timepoints) {
  return {rois, conn::window_count(timepoints, windows_of(cfg)), cfg.hidden, cfg.wea_layers, cfg.hgcn_blocks};
}

ParamSet init_params(const ModelShape& shape, std::uint64_t seed) {
  if (shape.rois < 2) throw ConfigError("model: need at least 2 ROIs");
  nn::Rng rng(seed);
  ParamSet ps;
  wea::register_params(ps, shape.wea_layers, shape.channels, shape.rois, rng);
  hgcn::register_params(ps, shape.rois, shape.hidden, shape.hgcn_blocks, rng);
  ace::register_params(ps, shape.rois, shape.hidden, rng);
  return ps;
}

void check_params(const ParamSet& params, const ModelShape& shape) {
  const ParamSet expected = init_params(shape, 0);
  if (expected.size() != params.size()) {
    throw CheckpointError("checkpoint has " + std::to_string(params.size()) + " parameters, model expects " +
                          std::to_string(expected.size()));
  }
  for (const auto& e : expected.entries()) {
    if (!params.contains(e.name)) throw CheckpointError("checkpoint lacks parameter '" + e.name + "'");
    const auto got = params.value(e.name).shape();
    if (got != e.value.shape()) {
      throw CheckpointError("checkpoint parameter '" + e.name + "' has shape " + grad::shape_str(got) +
                            ", model expects " + grad::shape_str(e.value.shape()) + " (M = " +
                            std::to_string(shape.rois) + ")");
    }
  }
}

Forward forward(Tape& tape, ParamSet& params, const SubjectInput& subject, const io::RunConfig& cfg) {
  Forward f;
  std::vector<Var> stack;
  for (const auto& w : subject.dfc) stack.push_back(tape.constant(w));
  f.sfc = tape.leaf(subject.sfc);

  const auto updated = wea::wea_forward(tape, params, stack, cfg.wea_layers);
  f.tsfc = wea::global_fusion(updated, f.sfc).tsfc;

  const std::size_t m = subject.sfc.rows();
  f.mask = cfg.use_med ? med::make_mask(med::sparsify(f.tsfc.value(), cfg.sparsify_q)) : med::full_mask(m);

  const auto graph = hgcn::build_graph(f.tsfc, cfg.keep_ratio);
  const auto branch = hgcn::hgcn_forward(tape, params, graph, cfg.hgcn_blocks);
  f.y_graph = branch.attention.embedding;
  f.edge_attention = branch.attention.edge_attention;

  if (cfg.use_ace) {
    Var masked = med::apply_mask(f.sfc, f.mask);
    f.y_conn = ace::encode_connections(masked, f.edge_attention, ace::bind_encoder(tape, params));
  } else {
    f.y_conn = tape.constant(Tensor::zeros(1, f.y_graph.cols()));
  }
  f.prediction = ace::fuse_and_classify(f.y_conn, f.y_graph, ace::bind_classifier(tape, params));
  return f;
}

BatchLoss batch_loss(Tape& tape, ParamSet& params, std::span<const SubjectInput* const> batch,
                     const io::RunConfig& cfg) {
  std::vector<Var> preds, zg, zm;
  std::vector<int> labels;
  for (const auto* s : batch) {
    auto f = forward(tape, params, *s, cfg);
    preds.push_back(f.prediction);
    zg.push_back(f.y_graph);
    zm.push_back(f.y_conn);
    labels.push_back(s->label);
  }
  Var lc = ace::cross_entropy(preds, labels);
  Var ls = ace::sim_loss(zg, zm);
  BatchLoss out;
  out.total = ace::total_loss(lc, ls, cfg.lambda);
  out.report = ace::total_loss(lc.value().item(), ls.value().item(), cfg.lambda);
  return out;
}

std::vector<double> predict(ParamSet& params, std::span<const SubjectInput> subjects, const io::RunConfig& cfg) {
  std::vector<double> out;
  out.reserve(subjects.size());
  for (const auto& s : subjects) {
    Tape tape;
    out.push_back(forward(tape, params, s, cfg).prediction.value().item());
  }
  return out;
}

ace::LossReport evaluate_loss(ParamSet& params, std::span<const SubjectInput> subjects, const io::RunConfig& cfg) {
  std::vector<const SubjectInput*> ptrs;
  for (const auto& s : subjects) ptrs.push_back(&s);
  Tape tape;
  return batch_loss(tape, params, ptrs, cfg).report;
}

Tensor tsfc(ParamSet& params, const SubjectInput& subject, const io::RunConfig& cfg) {
  Tape tape;
  std::vector<Var> stack;
  for (const auto& w : subject.dfc) stack.push_back(tape.constant(w));
  const auto updated = wea::wea_forward(tape, params, stack, cfg.wea_layers);
  return wea::global_fusion(updated, tape.constant(subject.sfc)).tsfc.value();
}

}  // namespace mcdgln::model
