#include <cmath>

#include "doctest.h"
#include "mcdgln/connectivity.hpp"
#include "mcdgln/errors.hpp"
#include "support.hpp"

using namespace mcdgln;
using namespace mcdgln::conn;
using grad::Tensor;

namespace {

double naive_pcc(const Tensor& s, std::size_t u, std::size_t w, std::size_t begin, std::size_t len) {
  double mu = 0, mw = 0;
  for (std::size_t t = begin; t < begin + len; ++t) {
    mu += s(u, t);
    mw += s(w, t);
  }
  mu /= len;
  mw /= len;
  double num = 0, du = 0, dw = 0;
  for (std::size_t t = begin; t < begin + len; ++t) {
    num += (s(u, t) - mu) * (s(w, t) - mw);
    du += (s(u, t) - mu) * (s(u, t) - mu);
    dw += (s(w, t) - mw) * (s(w, t) - mw);
  }
  return num / (std::sqrt(du) * std::sqrt(dw));
}

std::size_t enumerate_windows(std::size_t t, std::size_t l, std::size_t s) {
  std::size_t k = 0;
  for (std::size_t start = 0; start + l <= t; start += s) ++k;
  return k;
}

std::size_t count_upper(const Tensor& a) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = i + 1; j < a.cols(); ++j) n += a(i, j) != 0.0;
  return n;
}

}  // namespace

TEST_CASE("pcc examples") {
  const std::vector<double> a{1, 2, 3}, b{3, 2, 1};
  CHECK(pcc(a, a) == 1.0);
  CHECK(pcc(a, b) == -1.0);
  const std::vector<double> u{1, 2, 3, 4}, v{1, 3, 2, 4};
  CHECK(pcc(u, v) == doctest::Approx(0.8).epsilon(1e-14));
}

TEST_CASE("pcc errors") {
  const std::vector<double> flat{2, 2, 2}, ramp{1, 2, 3};
  try {
    pcc(ramp, flat);
    FAIL("expected zero variance error");
  } catch (const ZeroVarianceError& e) {
    CHECK(e.index == 1);
  }
  CHECK_THROWS_AS(pcc(flat, ramp), DataError);
  CHECK_THROWS_AS(pcc(std::vector<double>{1}, std::vector<double>{2}), DataError);
  CHECK_THROWS_AS(pcc(ramp, std::vector<double>{1, 2}), ShapeError);
}

TEST_CASE("pcc symmetry and affine maps") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const Tensor s = testing::random_tensor(2, 20, rng);
    std::vector<double> u(s.values().begin(), s.values().begin() + 20);
    std::vector<double> v(s.values().begin() + 20, s.values().end());
    CHECK(pcc(u, v) == doctest::Approx(pcc(v, u)).epsilon(1e-15));
    for (double a : {2.5, -0.3}) {
      std::vector<double> w(u.size());
      for (std::size_t i = 0; i < u.size(); ++i) w[i] = a * u[i] + 1.7;
      CHECK(std::abs(pcc(u, w) - (a > 0 ? 1.0 : -1.0)) < 1e-12);
    }
  }
}

TEST_CASE("static_fc matches the double loop oracle") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t m = 1 + rng() % 8, t = 2 + rng() % 63;
    const Tensor s = testing::random_tensor(m, t, rng);
    const ConnMatrix fc = static_fc(s);
    CHECK(fc.role == ConnRole::Static);
    for (std::size_t u = 0; u < m; ++u) {
      CHECK(fc.values(u, u) == 1.0);
      for (std::size_t w = 0; w < m; ++w) {
        if (u == w) continue;
        CHECK(std::abs(fc.values(u, w) - naive_pcc(s, u, w, 0, t)) <= 1e-12);
        CHECK(fc.values(u, w) == fc.values(w, u));
      }
    }
  }
  CHECK(bitwise_equal(static_fc(Tensor::row({1, 4, 2})).values, Tensor::scalar(1.0)));
}

TEST_CASE("static_fc properties") {
  std::mt19937_64 rng(8);
  const Tensor s = testing::random_tensor(4, 30, rng);
  std::vector<double> v(s.values().begin(), s.values().end());
  for (std::size_t t = 0; t < 30; ++t) v[2 * 30 + t] = 3.0 * v[2 * 30 + t] - 5.0;
  const Tensor scaled(4, 30, v);
  CHECK(max_abs_diff(static_fc(s).values, static_fc(scaled).values) < 1e-12);

  for (std::size_t t = 0; t < 30; ++t) v[3 * 30 + t] = v[t];
  CHECK(static_fc(Tensor(4, 30, v)).values(0, 3) == doctest::Approx(1.0).epsilon(1e-15));

  for (std::size_t t = 0; t < 30; ++t) v[30 + t] = 0.25;
  try {
    static_fc(Tensor(4, 30, v));
    FAIL("expected zero variance error");
  } catch (const ZeroVarianceError& e) {
    CHECK(e.index == 1);
  }
}

TEST_CASE("window counts") {
  CHECK(window_count(200, {30, 10}) == 18);
  CHECK(window_count(100, {100, 7}) == 1);
  CHECK(window_count(105, {30, 10}) == 8);
  CHECK_THROWS_AS(window_count(20, {30, 10}), DataError);
  CHECK_THROWS_AS(window_count(20, {5, 0}), DataError);

  for (std::size_t t = 1; t <= 64; ++t)
    for (std::size_t l = 1; l <= t; ++l)
      for (std::size_t s = 1; s <= 64; ++s) REQUIRE(window_count(t, {l, s}) == enumerate_windows(t, l, s));
}

TEST_CASE("sliding windows cover the expected spans") {
  std::mt19937_64 rng(2);
  const Tensor s = testing::random_tensor(3, 105, rng);
  const auto w = sliding_windows(s, {30, 10});
  REQUIRE(w.size() == 8);
  CHECK(w.back()(1, 0) == s(1, 70));
  CHECK(w.back()(2, 29) == s(2, 99));
  CHECK(w[3].cols() == 30);
}

TEST_CASE("dynamic_fc matches the windowed oracle") {
  std::mt19937_64 rng(33);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t m = 1 + rng() % 8, t = 4 + rng() % 61;
    const std::size_t l = 2 + rng() % (t - 1), s = 1 + rng() % 8;
    const Tensor x = testing::random_tensor(m, t, rng);
    const DynConnStack stack = dynamic_fc(x, {l, s});
    REQUIRE(stack.size() == enumerate_windows(t, l, s));
    for (std::size_t k = 0; k < stack.size(); ++k) {
      CHECK(stack.windows[k].role == ConnRole::Window);
      for (std::size_t u = 0; u < m; ++u)
        for (std::size_t w = 0; w < m; ++w) {
          const double expect = u == w ? 1.0 : naive_pcc(x, u, w, k * s, l);
          CHECK(std::abs(stack.windows[k].values(u, w) - expect) <= 1e-12);
        }
    }
  }
}

TEST_CASE("dynamic_fc special cases") {
  std::mt19937_64 rng(12);
  const Tensor x = testing::random_tensor(5, 40, rng);
  const auto whole = dynamic_fc(x, {40, 3});
  REQUIRE(whole.size() == 1);
  CHECK(bitwise_equal(whole.windows[0].values, static_fc(x).values));

  // Second ROI follows the first, then flips sign halfway.
  std::vector<double> v(2 * 40);
  for (std::size_t t = 0; t < 40; ++t) {
    v[t] = std::sin(0.7 * t) + 0.1 * t;
    v[40 + t] = t < 20 ? v[t] : -v[t];
  }
  const auto flip = dynamic_fc(Tensor(2, 40, v), {20, 20});
  REQUIRE(flip.size() == 2);
  CHECK(flip.windows[0].values(0, 1) > 0.99);
  CHECK(flip.windows[1].values(0, 1) < -0.99);

  std::vector<double> z(2 * 40);
  for (std::size_t t = 0; t < 40; ++t) {
    z[t] = static_cast<double>(t % 7);
    z[40 + t] = t >= 10 && t < 20 ? 1.0 : static_cast<double>(t % 5);
  }
  try {
    dynamic_fc(Tensor(2, 40, z), {10, 10});
    FAIL("expected zero variance error");
  } catch (const ZeroVarianceError& e) {
    CHECK(e.window == 1);
    CHECK(e.index == 1);
  }
}

TEST_CASE("stationary series give similar windows") {
  std::mt19937_64 rng(77);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> v(3 * 4000);
  for (std::size_t t = 0; t < 4000; ++t) {
    const double common = g(rng);
    for (std::size_t u = 0; u < 3; ++u) v[u * 4000 + t] = common + g(rng);
  }
  const auto stack = dynamic_fc(Tensor(3, 4000, v), {1000, 1000});
  for (std::size_t k = 1; k < stack.size(); ++k) CHECK(max_abs_diff(stack.windows[k].values, stack.windows[0].values) < 0.15);
}

TEST_CASE("binarize_adjacency") {
  const Tensor c(3, 3, {1, 0.9, -0.5, 0.9, 1, 0.1, -0.5, 0.1, 1});
  CHECK(bitwise_equal(binarize_adjacency(c, 1.0), Tensor(3, 3, {0, 1, 1, 1, 0, 1, 1, 1, 0})));
  CHECK(bitwise_equal(binarize_adjacency(c, 1.0 / 3.0), Tensor(3, 3, {0, 1, 0, 1, 0, 0, 0, 0, 0})));
  CHECK(bitwise_equal(binarize_adjacency(c, 0.6), Tensor(3, 3, {0, 1, 1, 1, 0, 0, 1, 0, 0})));
  CHECK_THROWS_AS(binarize_adjacency(c, 0.0), ConfigError);
  CHECK_THROWS_AS(binarize_adjacency(c, 1.5), ConfigError);

  // Ties resolve in (row, col) order: E = 6, keep 3.
  const Tensor flat = Tensor::full(4, 4, 0.3);
  const Tensor a = binarize_adjacency(flat, 0.5);
  CHECK(a(0, 1) == 1.0);
  CHECK(a(0, 2) == 1.0);
  CHECK(a(0, 3) == 1.0);
  CHECK(a(1, 2) == 0.0);
  CHECK(count_upper(a) == 3);
}

TEST_CASE("binarize_adjacency keeps ceil(keep * E) symmetric binary edges") {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> ratio(0.01, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t m = 2 + rng() % 9;
    const double keep = ratio(rng);
    const Tensor a = binarize_adjacency(testing::random_symmetric(m, rng), keep);
    const std::size_t e = m * (m - 1) / 2;
    CHECK(count_upper(a) == static_cast<std::size_t>(std::ceil(keep * e - 1e-9)));
    for (std::size_t i = 0; i < m; ++i) {
      CHECK(a(i, i) == 0.0);
      for (std::size_t j = 0; j < m; ++j) {
        CHECK(a(i, j) == a(j, i));
        CHECK((a(i, j) == 0.0 || a(i, j) == 1.0));
      }
    }
  }
}
