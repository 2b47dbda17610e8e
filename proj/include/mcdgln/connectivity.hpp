#pragma once

#include <span>
#include <utility>
#include <vector>

#include "mcdgln/gradcore.hpp"

namespace mcdgln::conn {

using grad::Tensor;

enum class ConnRole { Static, Window, Fused };

struct ConnMatrix {
  Tensor values;  // M x M
  ConnRole role = ConnRole::Static;
};

struct WindowConfig {
  std::size_t length = 30;  // L
  std::size_t stride = 10;  // S
};

struct DynConnStack {
  std::vector<ConnMatrix> windows;  // K channels, window order
  WindowConfig config;

  std::size_t size() const { return windows.size(); }
};

/// Raised when a series has zero variance. `index` identifies the series
/// (0/1 for pcc, the ROI for static_fc) and `window` the segment, if any.
class ZeroVarianceError : public DataError {
 public:
  ZeroVarianceError(const std::string& what, std::size_t index, long window = -1)
      : DataError(what), index(index), window(window) {}
  std::size_t index;
  long window;
};

/// Pearson correlation, clamped to [-1, 1].
double pcc(std::span<const double> u, std::span<const double> v);

ConnMatrix static_fc(const Tensor& series);

/// floor((T - L) / S) + 1; throws DataError when L > T or either is zero.
std::size_t window_count(std::size_t timepoints, const WindowConfig& cfg);

/// Segment j covers timepoints [jS, jS + L); a trailing partial window is dropped.
std::vector<Tensor> sliding_windows(const Tensor& series, const WindowConfig& cfg);

DynConnStack dynamic_fc(const Tensor& series, const WindowConfig& cfg);

using Edge = std::pair<std::size_t, std::size_t>;

/// Strict upper-triangle edges ordered by |value| descending, ties by (row, col).
std::vector<Edge> edges_by_magnitude(const Tensor& conn);

/// Number of edges kept for a fraction of E, i.e. ceil(fraction * E).
std::size_t kept_edge_count(std::size_t edges, double fraction);

/// Symmetric binary adjacency keeping the top keep_ratio fraction of edges by |value|.
Tensor binarize_adjacency(const Tensor& conn, double keep_ratio);

}  // namespace mcdgln::conn
