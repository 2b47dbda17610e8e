#include <algorithm>
#include <cmath>

#include "mcdgln/gradcore.hpp"

namespace mcdgln::grad {
namespace {

using Grads = Tape::Grads;

Tape& same_tape(const char* op, Var a, Var b) {
  if (&a.tape() != &b.tape()) throw ShapeError(std::string(op) + ": operands on different tapes");
  return a.tape();
}

[[noreturn]] void shape_fail(const char* op, Shape a, Shape b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " + shape_str(a) + " and " + shape_str(b));
}

std::size_t bdim(const char* op, Shape a, Shape b, int axis) {
  const auto x = a[axis], y = b[axis];
  if (x == y) return x;
  if (x == 1) return y;
  if (y == 1) return x;
  shape_fail(op, a, b);
}

// Elementwise binary with broadcasting. `dfa`/`dfb` give d out / d a and
// d out / d b as functions of (a, b, out).
template <typename F, typename DA, typename DB>
Var broadcast_binary(const char* op, Var a, Var b, F f, DA dfa, DB dfb) {
  Tape& tape = same_tape(op, a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  const std::size_t rows = bdim(op, av.shape(), bv.shape(), 0);
  const std::size_t cols = bdim(op, av.shape(), bv.shape(), 1);
  const bool ar = av.rows() == 1, ac = av.cols() == 1, br = bv.rows() == 1, bc = bv.cols() == 1;
  auto ia = [=, ca = av.cols()](std::size_t i, std::size_t j) { return (ar ? 0 : i) * ca + (ac ? 0 : j); };
  auto ib = [=, cb = bv.cols()](std::size_t i, std::size_t j) { return (br ? 0 : i) * cb + (bc ? 0 : j); };

  std::vector<double> out(rows * cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) out[i * cols + j] = f(av[ia(i, j)], bv[ib(i, j)]);
  Tensor ov(rows, cols, std::move(out));

  const auto ida = a.id(), idb = b.id();
  return tape.record(ov, {ida, idb}, [=](std::span<const double> g, Grads& grads) {
    auto& ga = grads[ida];
    auto& gb = grads[idb];
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t j = 0; j < cols; ++j) {
        const std::size_t k = i * cols + j;
        const double x = av[ia(i, j)], y = bv[ib(i, j)], o = ov[k];
        if (!ga.empty()) ga[ia(i, j)] += g[k] * dfa(x, y, o);
        if (!gb.empty()) gb[ib(i, j)] += g[k] * dfb(x, y, o);
      }
    }
  });
}

template <typename F, typename D>
Var unary(Var a, F f, D df) {
  const Tensor& av = a.value();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = f(av[i]);
  Tensor ov(av.rows(), av.cols(), std::move(out));
  const auto id = a.id();
  return a.tape().record(ov, {id}, [=](std::span<const double> g, Grads& grads) {
    auto& ga = grads[id];
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[i] * df(av[i], ov[i]);
  });
}

}  // namespace

Var add(Var a, Var b) {
  return broadcast_binary(
      "add", a, b, [](double x, double y) { return x + y; }, [](double, double, double) { return 1.0; },
      [](double, double, double) { return 1.0; });
}

Var subtract(Var a, Var b) {
  return broadcast_binary(
      "subtract", a, b, [](double x, double y) { return x - y; },
      [](double, double, double) { return 1.0; }, [](double, double, double) { return -1.0; });
}

Var multiply(Var a, Var b) {
  return broadcast_binary(
      "elementwise_multiply", a, b, [](double x, double y) { return x * y; },
      [](double, double y, double) { return y; }, [](double x, double, double) { return x; });
}

Var divide(Var a, Var b) {
  return broadcast_binary(
      "divide", a, b, [](double x, double y) { return x / y; },
      [](double, double y, double) { return 1.0 / y; },
      [](double x, double y, double) { return -x / (y * y); });
}

Var scale(Var a, double factor) {
  return unary(
      a, [=](double x) { return factor * x; }, [=](double, double) { return factor; });
}

Var add_scalar(Var a, double offset) {
  return unary(
      a, [=](double x) { return x + offset; }, [](double, double) { return 1.0; });
}

Var matmul(Var a, Var b) {
  Tape& tape = same_tape("matmul", a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.cols() != bv.rows()) shape_fail("matmul", av.shape(), bv.shape());
  const std::size_t n = av.rows(), k = av.cols(), m = bv.cols();
  std::vector<double> out(n * m, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t p = 0; p < k; ++p) {
      const double x = av[i * k + p];
      for (std::size_t j = 0; j < m; ++j) out[i * m + j] += x * bv[p * m + j];
    }
  const auto ida = a.id(), idb = b.id();
  return tape.record(Tensor(n, m, std::move(out)), {ida, idb},
                     [=](std::span<const double> g, Grads& grads) {
                       auto& ga = grads[ida];
                       auto& gb = grads[idb];
                       if (!ga.empty()) {  // dA = G B^T
                         for (std::size_t i = 0; i < n; ++i)
                           for (std::size_t p = 0; p < k; ++p) {
                             double s = 0.0;
                             for (std::size_t j = 0; j < m; ++j) s += g[i * m + j] * bv[p * m + j];
                             ga[i * k + p] += s;
                           }
                       }
                       if (!gb.empty()) {  // dB = A^T G
                         for (std::size_t i = 0; i < n; ++i)
                           for (std::size_t p = 0; p < k; ++p) {
                             const double x = av[i * k + p];
                             for (std::size_t j = 0; j < m; ++j) gb[p * m + j] += x * g[i * m + j];
                           }
                       }
                     });
}

Var transpose(Var a) {
  const Tensor& av = a.value();
  const std::size_t r = av.rows(), c = av.cols();
  std::vector<double> out(r * c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = av[i * c + j];
  const auto id = a.id();
  return a.tape().record(Tensor(c, r, std::move(out)), {id}, [=](std::span<const double> g, Grads& grads) {
    auto& ga = grads[id];
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) ga[i * c + j] += g[j * r + i];
  });
}

Var reshape(Var a, std::size_t rows, std::size_t cols) {
  const Tensor& av = a.value();
  if (rows * cols != av.size()) shape_fail("reshape", av.shape(), {rows, cols});
  std::vector<double> out(av.values().begin(), av.values().end());
  const auto id = a.id();
  return a.tape().record(Tensor(rows, cols, std::move(out)), {id},
                         [=](std::span<const double> g, Grads& grads) {
                           auto& ga = grads[id];
                           for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[i];
                         });
}

Var concat(std::span<const Var> parts, int axis) {
  if (parts.empty()) throw ShapeError("concat: no operands");
  if (axis != 0 && axis != 1) throw ShapeError("concat: axis must be 0 or 1");
  Tape& tape = parts[0].tape();
  const Shape first = parts[0].shape();
  std::size_t extent = 0;
  std::vector<std::size_t> ids;
  std::vector<Shape> shapes;
  for (const auto& p : parts) {
    same_tape("concat", parts[0], p);
    const Shape s = p.shape();
    if (s[1 - axis] != first[1 - axis]) shape_fail("concat", first, s);
    extent += s[axis];
    ids.push_back(p.id());
    shapes.push_back(s);
  }
  const std::size_t rows = axis == 0 ? extent : first[0];
  const std::size_t cols = axis == 0 ? first[1] : extent;
  std::vector<double> out(rows * cols);
  // offsets[k] = position of part k along the concatenation axis
  std::vector<std::size_t> offsets;
  std::size_t off = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    offsets.push_back(off);
    const Tensor& v = parts[k].value();
    for (std::size_t i = 0; i < v.rows(); ++i)
      for (std::size_t j = 0; j < v.cols(); ++j) {
        const std::size_t oi = axis == 0 ? off + i : i;
        const std::size_t oj = axis == 0 ? j : off + j;
        out[oi * cols + oj] = v(i, j);
      }
    off += shapes[k][axis];
  }
  return tape.record(Tensor(rows, cols, std::move(out)), ids,
                     [=](std::span<const double> g, Grads& grads) {
                       for (std::size_t k = 0; k < ids.size(); ++k) {
                         auto& gk = grads[ids[k]];
                         if (gk.empty()) continue;
                         const auto [r, c] = shapes[k];
                         for (std::size_t i = 0; i < r; ++i)
                           for (std::size_t j = 0; j < c; ++j) {
                             const std::size_t oi = axis == 0 ? offsets[k] + i : i;
                             const std::size_t oj = axis == 0 ? j : offsets[k] + j;
                             gk[i * c + j] += g[oi * cols + oj];
                           }
                       }
                     });
}

Var concat(std::initializer_list<Var> parts, int axis) {
  return concat(std::span<const Var>(parts.begin(), parts.size()), axis);
}

Var sum(Var a) {
  const Tensor& av = a.value();
  double s = 0.0;
  for (double x : av.values()) s += x;
  const auto id = a.id();
  return a.tape().record(Tensor::scalar(s), {id}, [=](std::span<const double> g, Grads& grads) {
    for (auto& x : grads[id]) x += g[0];
  });
}

Var mean(Var a) {
  const Tensor& av = a.value();
  if (av.size() == 0) throw ShapeError("mean: empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(av.size()));
}

Var row_sums(Var a) {
  const Tensor& av = a.value();
  const std::size_t r = av.rows(), c = av.cols();
  std::vector<double> out(r, 0.0);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[i] += av[i * c + j];
  const auto id = a.id();
  return a.tape().record(Tensor(r, 1, std::move(out)), {id}, [=](std::span<const double> g, Grads& grads) {
    auto& ga = grads[id];
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) ga[i * c + j] += g[i];
  });
}

Var col_sums(Var a) {
  const Tensor& av = a.value();
  const std::size_t r = av.rows(), c = av.cols();
  std::vector<double> out(c, 0.0);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j] += av[i * c + j];
  const auto id = a.id();
  return a.tape().record(Tensor(1, c, std::move(out)), {id}, [=](std::span<const double> g, Grads& grads) {
    auto& ga = grads[id];
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) ga[i * c + j] += g[j];
  });
}

Var col_means(Var a) {
  if (a.rows() == 0) throw ShapeError("col_means: no rows");
  return scale(col_sums(a), 1.0 / static_cast<double>(a.rows()));
}

Var row_max(Var a) {
  const Tensor& av = a.value();
  const std::size_t r = av.rows(), c = av.cols();
  if (c == 0) throw ShapeError("row_max: no columns in " + shape_str(av.shape()));
  std::vector<double> out(r);
  std::vector<std::size_t> arg(r);
  for (std::size_t i = 0; i < r; ++i) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < c; ++j)
      if (av[i * c + j] > av[i * c + best]) best = j;
    arg[i] = best;
    out[i] = av[i * c + best];
  }
  const auto id = a.id();
  return a.tape().record(Tensor(r, 1, std::move(out)), {id}, [=](std::span<const double> g, Grads& grads) {
    auto& ga = grads[id];
    for (std::size_t i = 0; i < r; ++i) ga[i * c + arg[i]] += g[i];
  });
}

Var global_max(Var a) {
  const Tensor& av = a.value();
  const std::size_t r = av.rows(), c = av.cols();
  if (r == 0) throw ShapeError("global_max: no rows in " + shape_str(av.shape()));
  std::vector<double> out(c);
  std::vector<std::size_t> arg(c);
  for (std::size_t j = 0; j < c; ++j) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < r; ++i)
      if (av[i * c + j] > av[best * c + j]) best = i;
    arg[j] = best;
    out[j] = av[best * c + j];
  }
  const auto id = a.id();
  return a.tape().record(Tensor(1, c, std::move(out)), {id}, [=](std::span<const double> g, Grads& grads) {
    auto& ga = grads[id];
    for (std::size_t j = 0; j < c; ++j) ga[arg[j] * c + j] += g[j];
  });
}

Var relu(Var a) {
  return unary(
      a, [](double x) { return x > 0.0 ? x : 0.0; }, [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var tanh(Var a) {
  return unary(
      a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Var sigmoid(Var a) {
  return unary(
      a,
      [](double x) {
        // split form avoids exp overflow for large |x|
        if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Var log(Var a) {
  const Tensor& av = a.value();
  for (std::size_t i = 0; i < av.size(); ++i) {
    if (!(av[i] > 0.0)) {
      throw NumericalError("log: non-positive argument " + std::to_string(av[i]) + " at index " +
                           std::to_string(i));
    }
  }
  return unary(
      a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Var clamp(Var a, double lo, double hi) {
  return unary(
      a, [=](double x) { return std::clamp(x, lo, hi); },
      [=](double x, double) { return (x < lo || x > hi) ? 0.0 : 1.0; });
}

Var softmax(Var a) {
  const Tensor& av = a.value();
  const std::size_t r = av.rows(), c = av.cols();
  std::vector<double> out(r * c);
  for (std::size_t i = 0; i < r; ++i) {
    double mx = av[i * c];
    for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, av[i * c + j]);
    double z = 0.0;
    for (std::size_t j = 0; j < c; ++j) z += out[i * c + j] = std::exp(av[i * c + j] - mx);
    for (std::size_t j = 0; j < c; ++j) out[i * c + j] /= z;
  }
  Tensor ov(r, c, std::move(out));
  const auto id = a.id();
  return a.tape().record(ov, {id}, [=](std::span<const double> g, Grads& grads) {
    auto& ga = grads[id];
    for (std::size_t i = 0; i < r; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < c; ++j) dot += g[i * c + j] * ov[i * c + j];
      for (std::size_t j = 0; j < c; ++j) ga[i * c + j] += ov[i * c + j] * (g[i * c + j] - dot);
    }
  });
}

Var frobenius_norm(Var a) {
  const Tensor& av = a.value();
  double s = 0.0;
  for (double x : av.values()) s += x * x;
  const double n = std::sqrt(s);
  const auto id = a.id();
  return a.tape().record(Tensor::scalar(n), {id}, [=](std::span<const double> g, Grads& grads) {
    if (n == 0.0) return;  // subgradient 0 at the origin
    auto& ga = grads[id];
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[0] * av[i] / n;
  });
}

Var upper_triangle_vectorize(Var a) {
  const Tensor& av = a.value();
  const std::size_t m = av.rows();
  if (av.cols() != m) throw ShapeError("upper_triangle_vectorize: matrix " + shape_str(av.shape()) + " not square");
  const std::size_t e = m * (m - (m > 0 ? 1 : 0)) / 2;
  std::vector<double> out;
  out.reserve(e);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j) out.push_back(av[i * m + j]);
  const auto id = a.id();
  return a.tape().record(Tensor(1, e, std::move(out)), {id}, [=](std::span<const double> g, Grads& grads) {
    auto& ga = grads[id];
    std::size_t k = 0;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = i + 1; j < m; ++j) ga[i * m + j] += g[k++];
  });
}

}  // namespace mcdgln::grad
