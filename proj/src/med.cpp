#include "mcdgln/med.hpp"

#include <cmath>

#include "mcdgln/connectivity.hpp"

namespace mcdgln::med {

Tensor sparsify(const Tensor& tsfc, double q) {
  if (!(q >= 0.0 && q < 1.0)) throw ConfigError("sparsify: q must lie in [0, 1), got " + std::to_string(q));
  const std::size_t m = tsfc.rows();
  const auto edges = conn::edges_by_magnitude(tsfc);
  const auto drop = static_cast<std::size_t>(std::floor(q * static_cast<double>(edges.size()) + 1e-9));
  std::vector<double> v(tsfc.values().begin(), tsfc.values().end());
  for (std::size_t i = edges.size() - drop; i < edges.size(); ++i) {
    const auto [u, w] = edges[i];
    v[u * m + w] = v[w * m + u] = 0.0;
  }
  return Tensor(m, m, std::move(v));
}

Tensor make_mask(const Tensor& sparse) {
  const std::size_t m = sparse.rows();
  if (sparse.cols() != m) throw ShapeError("make_mask: matrix " + grad::shape_str(sparse.shape()) + " not square");
  std::vector<double> v(m * m, 0.0);
  for (std::size_t u = 0; u < m; ++u)
    for (std::size_t w = 0; w < m; ++w)
      if (u != w && sparse(u, w) != 0.0) v[u * m + w] = 1.0;
  return Tensor(m, m, std::move(v));
}

Tensor full_mask(std::size_t rois) {
  std::vector<double> v(rois * rois, 1.0);
  for (std::size_t u = 0; u < rois; ++u) v[u * rois + u] = 0.0;
  return Tensor(rois, rois, std::move(v));
}

Tensor apply_mask(const Tensor& sfc, const Tensor& mask) {
  if (sfc.shape() != mask.shape()) {
    throw ShapeError("apply_mask: sFC " + grad::shape_str(sfc.shape()) + " vs mask " + grad::shape_str(mask.shape()));
  }
  std::vector<double> v(sfc.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = sfc[i] * mask[i];
  return Tensor(sfc.rows(), sfc.cols(), std::move(v));
}

Var apply_mask(Var sfc, const Tensor& mask) {
  if (sfc.shape() != mask.shape()) {
    throw ShapeError("apply_mask: sFC " + grad::shape_str(sfc.shape()) + " vs mask " + grad::shape_str(mask.shape()));
  }
  return grad::multiply(sfc, sfc.tape().constant(mask));
}

}  // namespace mcdgln::med
