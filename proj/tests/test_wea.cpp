#include <cmath>

#include "doctest.h"
#include "mcdgln/errors.hpp"
#include "mcdgln/wea.hpp"
#include "support.hpp"

using namespace mcdgln;
using namespace mcdgln::grad;

namespace {

Tensor oracle_preactivation(const Tensor& e, const Tensor& w) {
  const std::size_t m = e.rows();
  std::vector<double> out(m * m, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < m; ++k) acc += e(i, k) * w(i, k);
      for (std::size_t n = 0; n < m; ++n) acc += e(n, j) * w(n, j);
      out[i * m + j] = acc;
    }
  return Tensor(m, m, std::move(out));
}

Tensor preact(const Tensor& e, const Tensor& w) {
  Tape t;
  return wea::cross_conv_preactivation(t.constant(e), t.constant(w)).value();
}

}  // namespace

TEST_CASE("cross convolution hand example") {
  const Tensor e(2, 2, {1, 2, 3, 4});
  const Tensor p = preact(e, Tensor::full(2, 2, 1.0));
  CHECK(p(0, 0) == 7.0);
  CHECK(p(0, 1) == 9.0);
  CHECK(p(1, 0) == 11.0);
  CHECK(p(1, 1) == 13.0);

  Tape t;
  std::vector<Var> stack{t.constant(e)};
  std::vector<Var> zero{t.constant(Tensor::zeros(2, 2))};
  const auto out = wea::cross_conv_layer(stack, zero);
  CHECK(bitwise_equal(out[0].value(), Tensor::zeros(2, 2)));
}

TEST_CASE("cross convolution matches the quadruple loop oracle") {
  std::mt19937_64 rng(15);
  for (int trial = 0; trial < 100; ++trial) {
    const Tensor e = testing::random_tensor(5, 5, rng), w = testing::random_tensor(5, 5, rng);
    CHECK(max_abs_diff(preact(e, w), oracle_preactivation(e, w)) <= 1e-12);
  }
}

TEST_CASE("cross convolution linearity and symmetry") {
  std::mt19937_64 rng(16);
  for (int trial = 0; trial < 50; ++trial) {
    const Tensor e1 = testing::random_tensor(5, 5, rng), e2 = testing::random_tensor(5, 5, rng);
    const Tensor w = testing::random_tensor(5, 5, rng);
    const double a = 1.3, b = -0.6;
    std::vector<double> mix(25);
    for (std::size_t i = 0; i < 25; ++i) mix[i] = a * e1[i] + b * e2[i];
    const Tensor lhs = preact(Tensor(5, 5, mix), w);
    const Tensor p1 = preact(e1, w), p2 = preact(e2, w);
    for (std::size_t i = 0; i < 25; ++i) CHECK(std::abs(lhs[i] - (a * p1[i] + b * p2[i])) <= 1e-12);

    const Tensor s = testing::random_symmetric(5, rng), ws = testing::random_symmetric(5, rng);
    const Tensor ps = preact(s, ws);
    for (std::size_t i = 0; i < 5; ++i)
      for (std::size_t j = 0; j < 5; ++j) CHECK(std::abs(ps(i, j) - ps(j, i)) <= 1e-12);
  }
}

TEST_CASE("cross convolution shape errors") {
  Tape t;
  std::vector<Var> stack{t.constant(Tensor::zeros(3, 3)), t.constant(Tensor::zeros(3, 3))};
  std::vector<Var> one{t.constant(Tensor::zeros(3, 3))};
  CHECK_THROWS_AS(wea::cross_conv_layer(stack, one), ShapeError);
  CHECK_THROWS_AS(wea::cross_conv_preactivation(stack[0], t.constant(Tensor::zeros(2, 2))), ShapeError);
}

TEST_CASE("wea_forward depth") {
  std::mt19937_64 rng(1);
  nn::Rng prng(2);
  ParamSet ps;
  wea::register_params(ps, 3, 2, 4, prng);
  CHECK(ps.size() == 6);
  CHECK(ps.contains(wea::weight_name(2, 1)));
  for (const auto& e : ps.entries())
    for (double x : e.value.values()) CHECK(std::abs(x) <= 0.25);

  Tape t;
  std::vector<Var> stack{t.constant(testing::random_symmetric(4, rng)), t.constant(testing::random_symmetric(4, rng))};
  const auto same = wea::wea_forward(t, ps, stack, 0);
  CHECK(same[0].id() == stack[0].id());

  const auto one = wea::wea_forward(t, ps, stack, 1);
  std::vector<Var> w0{t.param(ps, wea::weight_name(0, 0)), t.param(ps, wea::weight_name(0, 1))};
  const auto direct = wea::cross_conv_layer(stack, w0);
  CHECK(bitwise_equal(one[1].value(), direct[1].value()));
}

TEST_CASE("gradient through three layers and fusion") {
  std::mt19937_64 rng(4);
  nn::Rng prng(5);
  ParamSet ps;
  wea::register_params(ps, 3, 2, 4, prng);
  const Tensor c0 = testing::random_symmetric(4, rng), c1 = testing::random_symmetric(4, rng);
  const Tensor s = testing::random_symmetric(4, rng);
  auto program = [&](Tape& t, ParamSet& p) {
    std::vector<Var> stack{t.constant(c0), t.constant(c1)};
    const auto out = wea::wea_forward(t, p, stack, 3);
    Var fused = wea::global_fusion(out, t.constant(s)).tsfc;
    return sum(multiply(fused, fused));
  };
  CHECK(grad_check_params(program, ps) < 1e-4);

  ps.zero_grad();
  Tape t;
  t.backward(program(t, ps));
  for (const auto& e : ps.entries()) {
    INFO(e.name);
    for (double g : e.grad) CHECK(g != 0.0);
  }
}

TEST_CASE("global fusion closed forms") {
  Tape t;
  const Tensor ones = Tensor::full(2, 2, 1.0);
  std::vector<Var> c{t.constant(ones)};
  const auto r = wea::global_fusion(c, t.constant(Tensor::zeros(2, 2)));
  CHECK(r.zero_matrices == 1);
  for (double x : r.tsfc.value().values()) CHECK(x == doctest::Approx(0.5).epsilon(1e-12));

  std::vector<Var> z{t.constant(Tensor::zeros(3, 3)), t.constant(Tensor::zeros(3, 3))};
  const auto zr = wea::global_fusion(z, t.constant(Tensor::zeros(3, 3)));
  CHECK(bitwise_equal(zr.tsfc.value(), Tensor::zeros(3, 3)));
  CHECK(zr.zero_matrices == 3);

  std::mt19937_64 rng(3);
  const Tensor s = testing::random_symmetric(4, rng);
  double mean = 0, norm = 0;
  for (double x : s.values()) {
    mean += x / 16.0;
    norm += x * x;
  }
  const double alpha = mean / (std::sqrt(norm) + wea::kFusionEps);
  std::vector<Var> same{t.constant(s)};
  const Tensor f = wea::global_fusion(same, t.constant(s)).tsfc.value();
  for (std::size_t i = 0; i < 16; ++i) CHECK(std::abs(f[i] - 2.0 * alpha * s[i]) <= 1e-12);

  std::vector<Var> bad{t.constant(Tensor::zeros(3, 3))};
  CHECK_THROWS_AS(wea::global_fusion(bad, t.constant(Tensor::zeros(2, 2))), ShapeError);
}

TEST_CASE("global fusion output is exactly symmetric") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    Tape t;
    std::vector<Var> c{t.constant(testing::random_tensor(5, 5, rng)), t.constant(testing::random_tensor(5, 5, rng))};
    const Tensor f = wea::global_fusion(c, t.constant(testing::random_tensor(5, 5, rng))).tsfc.value();
    for (std::size_t i = 0; i < 5; ++i)
      for (std::size_t j = 0; j < 5; ++j) CHECK(f(i, j) == f(j, i));
  }
}
