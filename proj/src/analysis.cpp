#include "mcdgln/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace mcdgln::stats {
namespace {

// Modified Lentz evaluation of the incomplete beta continued fraction.
double beta_cf(double x, double a, double b) {
  constexpr int kMaxIter = 10000;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) return h;
  }
  throw NumericalError("incomplete_beta: continued fraction did not converge");
}

std::pair<double, double> mean_ss(std::span<const double> x) {
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  return {mean, ss};
}

}  // namespace

double incomplete_beta(double x, double a, double b) {
  if (!(a > 0.0 && b > 0.0)) throw NumericalError("incomplete_beta: a and b must be positive");
  if (!(x >= 0.0 && x <= 1.0)) throw NumericalError("incomplete_beta: x outside [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double front =
      std::exp(std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x));
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_cf(x, a, b) / a;
  return 1.0 - front * beta_cf(1.0 - x, b, a) / b;
}

double student_t_two_sided_p(double t, double df) {
  if (!(df > 0.0)) throw NumericalError("student_t: df must be positive");
  if (std::isinf(t)) return 0.0;
  return std::clamp(incomplete_beta(df / (df + t * t), 0.5 * df, 0.5), 0.0, 1.0);
}

TTest two_sample_t(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) {
    throw DataError("two_sample_t: each group needs at least 2 samples (got " + std::to_string(a.size()) + " and " +
                    std::to_string(b.size()) + ")");
  }
  const auto [ma, ssa] = mean_ss(a);
  const auto [mb, ssb] = mean_ss(b);
  TTest r;
  r.df = static_cast<double>(a.size() + b.size() - 2);
  const double pooled = (ssa + ssb) / r.df;
  if (pooled == 0.0) {
    if (ma == mb) return r;
    r.degenerate = true;
    r.t = std::copysign(std::numeric_limits<double>::infinity(), ma - mb);
    r.p = 0.0;
    return r;
  }
  const double se = std::sqrt(pooled * (1.0 / static_cast<double>(a.size()) + 1.0 / static_cast<double>(b.size())));
  r.t = (ma - mb) / se;
  r.p = student_t_two_sided_p(r.t, r.df);
  return r;
}

std::vector<EdgeTestResult> edge_tests(std::span<const Tensor> group_a, std::span<const Tensor> group_b, double alpha) {
  if (group_a.empty() || group_b.empty()) throw DataError("edge_tests: both groups must be nonempty");
  const std::size_t m = group_a.front().rows();
  for (auto group : {group_a, group_b})
    for (const auto& t : group)
      if (t.rows() != m || t.cols() != m) {
        throw ShapeError("edge_tests: matrix " + grad::shape_str(t.shape()) + " in a group of " +
                         grad::shape_str({m, m}) + " matrices");
      }
  std::vector<EdgeTestResult> out;
  std::vector<double> xa(group_a.size()), xb(group_b.size());
  for (std::size_t u = 0; u < m; ++u)
    for (std::size_t w = u + 1; w < m; ++w) {
      for (std::size_t i = 0; i < group_a.size(); ++i) xa[i] = group_a[i](u, w);
      for (std::size_t i = 0; i < group_b.size(); ++i) xb[i] = group_b[i](u, w);
      const auto tt = two_sample_t(xa, xb);
      out.push_back({{u, w}, tt.t, tt.p, tt.p < alpha, tt.degenerate});
    }
  return out;
}

std::vector<EdgeTestResult> abnormal_edges(std::span<const Tensor> group_a, std::span<const Tensor> group_b,
                                           double alpha) {
  auto all = edge_tests(group_a, group_b, alpha);
  std::erase_if(all, [](const EdgeTestResult& r) { return !r.significant; });
  return all;
}

OverlapReport overlap_stats(std::span<const EdgeTestResult> sig_sfc, std::span<const EdgeTestResult> sig_tsfc) {
  std::set<conn::Edge> a, b;
  for (const auto& r : sig_sfc) a.insert(r.edge);
  for (const auto& r : sig_tsfc) b.insert(r.edge);
  OverlapReport rep;
  for (const auto& e : a) (b.contains(e) ? rep.overlap : rep.sfc_only) += 1;
  for (const auto& e : b) rep.tsfc_only += !a.contains(e);
  return rep;
}

nlohmann::ordered_json edge_tests_json(std::span<const EdgeTestResult> results) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& r : results) {
    nlohmann::ordered_json j;
    j["u"] = r.edge.first;
    j["w"] = r.edge.second;
    j["t"] = std::isfinite(r.t) ? nlohmann::ordered_json(r.t) : nlohmann::ordered_json(r.t > 0 ? "inf" : "-inf");
    j["p"] = r.p;
    j["significant"] = r.significant;
    j["degenerate"] = r.degenerate;
    arr.push_back(std::move(j));
  }
  return arr;
}

nlohmann::ordered_json overlap_json(const OverlapReport& report) {
  return {{"sfc_only", report.sfc_only}, {"tsfc_only", report.tsfc_only}, {"overlap", report.overlap}};
}

}  // namespace mcdgln::stats
