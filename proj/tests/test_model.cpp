#include "doctest.h"
#include "fixtures.hpp"
#include "mcdgln/errors.hpp"
#include "mcdgln/gradsuite.hpp"
#include "mcdgln/med.hpp"
#include "mcdgln/model.hpp"
#include "mcdgln/wea.hpp"

using namespace mcdgln;
using grad::Tensor;

TEST_CASE("subject preparation") {
  std::mt19937_64 rng(1);
  io::BoldSeries series{"s", 1, testing::random_tensor(5, 105, rng)};
  const auto in = model::prepare_subject(series, {30, 10});
  CHECK(in.dfc.size() == 8);
  CHECK(in.sfc.rows() == 5);
  CHECK(in.label == 1);
}

TEST_CASE("parameter layout") {
  const auto cfg = testing::small_config();
  const auto shape = model::shape_for(cfg, 6, 60);
  CHECK(shape.channels == 3);
  auto ps = model::init_params(shape, 3);
  CHECK(ps.entries().front().name == wea::weight_name(0, 0));
  CHECK(ps.contains("hgcn.b1.theta"));
  CHECK(ps.contains("sa.edge.w0"));
  CHECK(ps.value("ace.enc.w0").rows() == 15);
  CHECK(ps.value("ace.cls.w1").cols() == 1);
  CHECK_NOTHROW(model::check_params(ps, shape));

  auto wider = shape;
  wider.rois = 7;
  CHECK_THROWS_AS(model::check_params(ps, wider), CheckpointError);
  auto deeper = shape;
  deeper.wea_layers = 3;
  CHECK_THROWS_AS(model::check_params(ps, deeper), CheckpointError);

  const auto again = model::init_params(shape, 3);
  for (std::size_t i = 0; i < ps.size(); ++i) CHECK(bitwise_equal(ps.entries()[i].value, again.entries()[i].value));
}

TEST_CASE("forward pass") {
  auto toy = gradsuite::make_toy(2);
  for (const auto& s : toy.subjects) {
    grad::Tape t;
    const auto f = model::forward(t, toy.params, s, toy.config);
    const double p = f.prediction.value().item();
    CHECK((p > 0.0 && p < 1.0));
    CHECK(f.y_graph.cols() == toy.config.hidden);
    CHECK(f.y_conn.cols() == toy.config.hidden);
    CHECK(f.edge_attention.cols() == 6);
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = 0; j < 4; ++j) CHECK(f.tsfc.value()(i, j) == f.tsfc.value()(j, i));
  }

  auto cfg = toy.config;
  cfg.use_ace = false;
  grad::Tape t;
  const auto no_ace = model::forward(t, toy.params, toy.subjects[0], cfg);
  CHECK(bitwise_equal(no_ace.y_conn.value(), Tensor::zeros(1, cfg.hidden)));

  cfg = toy.config;
  cfg.use_med = false;
  const auto no_med = model::forward(t, toy.params, toy.subjects[0], cfg);
  CHECK(bitwise_equal(no_med.mask, med::full_mask(4)));
}

TEST_CASE("full model gradient") {
  for (std::uint64_t seed : {1u, 7u, 19u}) CHECK(gradsuite::check_full_model(seed).max_rel_error < 1e-4);
}

TEST_CASE("batch loss report identity") {
  auto toy = gradsuite::make_toy(4);
  std::vector<const model::SubjectInput*> batch;
  for (const auto& s : toy.subjects) batch.push_back(&s);
  grad::Tape t;
  const auto loss = model::batch_loss(t, toy.params, batch, toy.config);
  const auto& r = loss.report;
  CHECK(std::abs(r.total - (r.classification + r.lambda * r.similarity)) <= 1e-12);
  CHECK(loss.total.value().item() == r.total);
  CHECK(r.classification >= 0.0);
  CHECK((r.similarity >= 0.0 && r.similarity <= 2.0));

  const auto scores = model::predict(toy.params, toy.subjects, toy.config);
  CHECK(scores.size() == 2);
  const auto eval = model::evaluate_loss(toy.params, toy.subjects, toy.config);
  CHECK(eval.total == doctest::Approx(r.total).epsilon(1e-14));
}
