#pragma once

// The full pipeline for one subject: dynamic FC -> WEA -> tsFC -> (graph
// branch, masked static branch) -> prediction, plus batch losses.

#include <cstdint>
#include <span>
#include <vector>

#include "mcdgln/ace.hpp"
#include "mcdgln/connectivity.hpp"
#include "mcdgln/dataio.hpp"
#include "mcdgln/hgcn.hpp"

namespace mcdgln::model {

using grad::ParamSet;
using grad::Tape;
using grad::Tensor;
using grad::Var;

/// Connectivity computed once per subject ahead of training.
struct SubjectInput {
  std::string subject_id;
  int label = 0;
  Tensor sfc;               // M x M
  std::vector<Tensor> dfc;  // K windows, each M x M
};

SubjectInput prepare_subject(const io::BoldSeries& series, const conn::WindowConfig& windows);
std::vector<SubjectInput> prepare_dataset(const io::Dataset& data, const io::RunConfig& cfg);

struct ModelShape {
  std::size_t rois = 0;
  std::size_t channels = 0;  // K
  std::size_t hidden = 32;
  std::size_t wea_layers = 3;
  std::size_t hgcn_blocks = 3;
};

ModelShape shape_for(const io::RunConfig& cfg, std::size_t rois, std::size_t timepoints);

/// Fresh parameters; WEA weights uniform in [-1/M, 1/M], the rest Glorot-uniform.
ParamSet init_params(const ModelShape& shape, std::uint64_t seed);

/// Throws CheckpointError if `params` lacks a parameter of `shape` or has the wrong shape.
void check_params(const ParamSet& params, const ModelShape& shape);

struct Forward {
  Var prediction;  // 1 x 1
  Var y_graph;     // 1 x d
  Var y_conn;      // 1 x d
  Var tsfc;        // M x M
  Var sfc;         // M x M leaf of the static input
  Tensor mask;
  Var edge_attention;
};

Forward forward(Tape& tape, ParamSet& params, const SubjectInput& subject, const io::RunConfig& cfg);

struct BatchLoss {
  Var total;
  ace::LossReport report;
};

BatchLoss batch_loss(Tape& tape, ParamSet& params, std::span<const SubjectInput* const> batch,
                     const io::RunConfig& cfg);

/// Predicted case probability per subject.
std::vector<double> predict(ParamSet& params, std::span<const SubjectInput> subjects, const io::RunConfig& cfg);

/// Total loss over all subjects as one batch, no gradient.
ace::LossReport evaluate_loss(ParamSet& params, std::span<const SubjectInput> subjects, const io::RunConfig& cfg);

/// tsFC values for one subject under the given parameters.
Tensor tsfc(ParamSet& params, const SubjectInput& subject, const io::RunConfig& cfg);

}  // namespace mcdgln::model
