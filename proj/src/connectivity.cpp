#include "mcdgln/connectivity.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mcdgln::conn {
namespace {

// Centers a series and returns (deviations, root sum of squares).
std::pair<std::vector<double>, double> centered(std::span<const double> x) {
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
  std::vector<double> d(x.size());
  double ss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    d[i] = x[i] - mean;
    ss += d[i] * d[i];
  }
  return {std::move(d), ss};
}

double correlate(const std::vector<double>& du, double nu, const std::vector<double>& dv, double nv) {
  double dot = 0.0;
  for (std::size_t i = 0; i < du.size(); ++i) dot += du[i] * dv[i];
  return std::clamp(dot / std::sqrt(nu * nv), -1.0, 1.0);
}

}  // namespace

double pcc(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) {
    throw ShapeError("pcc: series lengths differ (" + std::to_string(u.size()) + " vs " +
                     std::to_string(v.size()) + ")");
  }
  if (u.size() < 2) throw DataError("pcc: series need at least 2 timepoints");
  auto [du, nu] = centered(u);
  auto [dv, nv] = centered(v);
  if (nu == 0.0) throw ZeroVarianceError("pcc: series 0 has zero variance", 0);
  if (nv == 0.0) throw ZeroVarianceError("pcc: series 1 has zero variance", 1);
  return correlate(du, nu, dv, nv);
}

ConnMatrix static_fc(const Tensor& series) {
  const std::size_t m = series.rows(), t = series.cols();
  if (t < 2) throw DataError("static_fc: need at least 2 timepoints, got " + std::to_string(t));
  std::vector<std::vector<double>> dev(m);
  std::vector<double> norm(m);
  for (std::size_t u = 0; u < m; ++u) {
    auto [d, n] = centered(series.values().subspan(u * t, t));
    if (n == 0.0) throw ZeroVarianceError("static_fc: ROI " + std::to_string(u) + " has zero variance", u);
    dev[u] = std::move(d);
    norm[u] = n;
  }
  std::vector<double> out(m * m);
  for (std::size_t u = 0; u < m; ++u) {
    out[u * m + u] = 1.0;
    for (std::size_t w = u + 1; w < m; ++w) {
      out[u * m + w] = out[w * m + u] = correlate(dev[u], norm[u], dev[w], norm[w]);
    }
  }
  return {Tensor(m, m, std::move(out)), ConnRole::Static};
}

std::size_t window_count(std::size_t timepoints, const WindowConfig& cfg) {
  if (cfg.length < 1 || cfg.stride < 1) throw DataError("window: length and stride must be >= 1");
  if (cfg.length > timepoints) {
    throw DataError("window: length " + std::to_string(cfg.length) + " exceeds series length " +
                    std::to_string(timepoints));
  }
  return (timepoints - cfg.length) / cfg.stride + 1;
}

std::vector<Tensor> sliding_windows(const Tensor& series, const WindowConfig& cfg) {
  const std::size_t m = series.rows(), t = series.cols();
  const std::size_t k = window_count(t, cfg);
  std::vector<Tensor> out;
  out.reserve(k);
  for (std::size_t j = 0; j < k; ++j) {
    const std::size_t start = j * cfg.stride;
    std::vector<double> seg(m * cfg.length);
    for (std::size_t u = 0; u < m; ++u)
      std::copy_n(series.values().begin() + u * t + start, cfg.length, seg.begin() + u * cfg.length);
    out.emplace_back(m, cfg.length, std::move(seg));
  }
  return out;
}

DynConnStack dynamic_fc(const Tensor& series, const WindowConfig& cfg) {
  DynConnStack stack;
  stack.config = cfg;
  const auto segments = sliding_windows(series, cfg);
  for (std::size_t j = 0; j < segments.size(); ++j) {
    try {
      auto c = static_fc(segments[j]);
      c.role = ConnRole::Window;
      stack.windows.push_back(std::move(c));
    } catch (const ZeroVarianceError& e) {
      throw ZeroVarianceError("dynamic_fc: window " + std::to_string(j) + ", ROI " + std::to_string(e.index) +
                                  " has zero variance",
                              e.index, static_cast<long>(j));
    }
  }
  return stack;
}

std::vector<Edge> edges_by_magnitude(const Tensor& conn) {
  const std::size_t m = conn.rows();
  if (conn.cols() != m) throw ShapeError("edges_by_magnitude: matrix " + grad::shape_str(conn.shape()) + " not square");
  std::vector<Edge> edges;
  edges.reserve(m * (m - (m > 0)) / 2);
  for (std::size_t u = 0; u < m; ++u)
    for (std::size_t w = u + 1; w < m; ++w) edges.emplace_back(u, w);
  std::stable_sort(edges.begin(), edges.end(), [&](const Edge& a, const Edge& b) {
    return std::abs(conn(a.first, a.second)) > std::abs(conn(b.first, b.second));
  });
  return edges;
}

std::size_t kept_edge_count(std::size_t edges, double fraction) {
  // 1e-9 slack so that e.g. fraction = 1/3 of 3 edges keeps exactly one.
  const double want = std::ceil(fraction * static_cast<double>(edges) - 1e-9);
  return std::min(edges, static_cast<std::size_t>(std::max(0.0, want)));
}

Tensor binarize_adjacency(const Tensor& conn, double keep_ratio) {
  if (!(keep_ratio > 0.0 && keep_ratio <= 1.0)) {
    throw ConfigError("binarize_adjacency: keep_ratio must lie in (0, 1], got " + std::to_string(keep_ratio));
  }
  const std::size_t m = conn.rows();
  const auto edges = edges_by_magnitude(conn);
  const std::size_t keep = kept_edge_count(edges.size(), keep_ratio);
  std::vector<double> a(m * m, 0.0);
  for (std::size_t i = 0; i < keep; ++i) {
    const auto [u, w] = edges[i];
    a[u * m + w] = a[w * m + u] = 1.0;
  }
  return Tensor(m, m, std::move(a));
}

}  // namespace mcdgln::conn
