#pragma once

// Per-edge group comparisons of connectivity matrices.

#include <span>
#include <vector>

#include "json.hpp"
#include "mcdgln/connectivity.hpp"

namespace mcdgln::stats {

using grad::Tensor;

/// Regularized incomplete beta I_x(a, b), continued-fraction evaluation.
double incomplete_beta(double x, double a, double b);

/// Two-sided p of Student's t with `df` degrees of freedom.
double student_t_two_sided_p(double t, double df);

struct TTest {
  double t = 0.0;
  double p = 1.0;
  double df = 0.0;
  bool degenerate = false;  // zero pooled variance with unequal means
};

/// Pooled-variance two-sample t-test.
TTest two_sample_t(std::span<const double> a, std::span<const double> b);

struct EdgeTestResult {
  conn::Edge edge;
  double t = 0.0;
  double p = 1.0;
  bool significant = false;
  bool degenerate = false;
};

/// Tests every strict upper-triangle edge across the two groups.
std::vector<EdgeTestResult> edge_tests(std::span<const Tensor> group_a, std::span<const Tensor> group_b, double alpha);

/// Significant edges only (p < alpha, uncorrected).
std::vector<EdgeTestResult> abnormal_edges(std::span<const Tensor> group_a, std::span<const Tensor> group_b,
                                           double alpha);

struct OverlapReport {
  std::size_t sfc_only = 0;
  std::size_t tsfc_only = 0;
  std::size_t overlap = 0;
};

OverlapReport overlap_stats(std::span<const EdgeTestResult> sig_sfc, std::span<const EdgeTestResult> sig_tsfc);

nlohmann::ordered_json edge_tests_json(std::span<const EdgeTestResult> results);
nlohmann::ordered_json overlap_json(const OverlapReport& report);

}  // namespace mcdgln::stats
