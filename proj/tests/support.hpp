#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "mcdgln/gradcore.hpp"

namespace testing {

using mcdgln::grad::Tensor;

inline Tensor random_tensor(std::size_t r, std::size_t c, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(r * c);
  for (auto& x : v) x = u(rng);
  return Tensor(r, c, std::move(v));
}

inline Tensor random_symmetric(std::size_t m, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(m * m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i; j < m; ++j) v[i * m + j] = v[j * m + i] = u(rng);
  return Tensor(m, m, std::move(v));
}

inline std::vector<std::size_t> random_permutation(std::size_t n, std::mt19937_64& rng) {
  std::vector<std::size_t> p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = i;
  std::shuffle(p.begin(), p.end(), rng);
  return p;
}

// out[i] = in[p[i]] on rows and columns.
inline Tensor permute_square(const Tensor& a, const std::vector<std::size_t>& p) {
  const std::size_t m = a.rows();
  std::vector<double> v(m * m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) v[i * m + j] = a(p[i], p[j]);
  return Tensor(m, m, std::move(v));
}

inline Tensor permute_rows(const Tensor& a, const std::vector<std::size_t>& p) {
  std::vector<double> v(a.size());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) v[i * a.cols() + j] = a(p[i], j);
  return Tensor(a.rows(), a.cols(), std::move(v));
}

/// Fresh, empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("mcdgln-test-" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testing
