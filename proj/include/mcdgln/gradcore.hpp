#pragma once

// Reverse-mode differentiation over dense row-major matrices of doubles.
//
// A Tensor is an immutable matrix value. A Tape records every primitive
// executed through the free functions below; Tape::backward walks the
// record in reverse and accumulates gradients into the leaves and into the
// ParamSet entries the tape was built from.

#include <array>
#include <cstddef>
#include <deque>
#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "mcdgln/errors.hpp"

namespace mcdgln::grad {

using Shape = std::array<std::size_t, 2>;

std::string shape_str(Shape s);

class Tensor {
 public:
  Tensor();
  /// Throws NumericalError if any value is NaN or infinite.
  Tensor(std::size_t rows, std::size_t cols, std::vector<double> values);

  static Tensor zeros(std::size_t rows, std::size_t cols);
  static Tensor full(std::size_t rows, std::size_t cols, double value);
  static Tensor identity(std::size_t n);
  static Tensor scalar(double value);
  static Tensor row(std::vector<double> values);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  Shape shape() const { return {rows_, cols_}; }
  std::size_t size() const { return rows_ * cols_; }
  bool is_scalar() const { return size() == 1; }

  double operator()(std::size_t r, std::size_t c) const { return (*data_)[r * cols_ + c]; }
  double operator[](std::size_t i) const { return (*data_)[i]; }
  double item() const;
  std::span<const double> values() const { return *data_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::shared_ptr<const std::vector<double>> data_;
};

bool bitwise_equal(const Tensor& a, const Tensor& b);
double max_abs_diff(const Tensor& a, const Tensor& b);

// ---------------------------------------------------------------------------
// ParamSet

class ParamSet {
 public:
  struct Entry {
    std::string name;
    Tensor value;
    std::vector<double> grad;
  };

  /// Registers a new parameter. Names must be unique.
  void add(const std::string& name, Tensor value);
  bool contains(const std::string& name) const;
  std::size_t size() const { return entries_.size(); }
  std::size_t scalar_count() const;

  const Tensor& value(const std::string& name) const;
  void set_value(const std::string& name, Tensor value);
  /// Gradient accumulator, same shape as the parameter.
  Tensor grad(const std::string& name) const;
  void zero_grad();

  const std::vector<Entry>& entries() const { return entries_; }
  std::vector<Entry>& entries() { return entries_; }
  std::size_t index(const std::string& name) const;

  void save(std::ostream& out) const;
  void save(const std::string& path) const;
  static ParamSet load(std::istream& in);
  static ParamSet load(const std::string& path);

 private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

inline constexpr const char* kCheckpointMagic = "MCDGLN-CKPT-1";

// ---------------------------------------------------------------------------
// Tape and Var

class Tape;

/// Handle to a value recorded on a Tape.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape& tape() const;
  std::size_t id() const { return id_; }
  const Tensor& value() const;
  Shape shape() const { return value().shape(); }
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  bool valid() const { return tape_ != nullptr; }

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

class Tape {
 public:
  using Grads = std::vector<std::vector<double>>;
  // Receives the node's output gradient and accumulates into its inputs.
  using BackwardFn = std::function<void(std::span<const double> gout, Grads& grads)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Non-differentiable input.
  Var constant(Tensor value);
  /// Differentiable input; gradient readable through grad() after backward.
  Var leaf(Tensor value);
  /// Parameter leaf; backward adds its gradient to the ParamSet accumulator.
  Var param(ParamSet& params, const std::string& name);

  /// Appends a primitive result. Used by the operation implementations.
  Var record(Tensor value, std::vector<std::size_t> inputs, BackwardFn backward);

  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  std::size_t size() const { return nodes_.size(); }

  /// Reverse sweep from a 1x1 loss. Allowed once per tape.
  void backward(Var loss);
  bool backward_done() const { return backward_done_; }
  /// Gradient of the last backward's loss with respect to v (zeros if unreachable).
  Tensor grad(Var v) const;

 private:
  struct Node {
    Tensor value;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
    bool requires_grad = false;
    ParamSet* params = nullptr;
    std::size_t param_index = 0;
  };

  std::deque<Node> nodes_;  // stable addresses: value() references survive later records
  Grads grads_;
  bool backward_done_ = false;
};

// ---------------------------------------------------------------------------
// Primitives. Binary elementwise operations broadcast along any axis of
// extent 1 (row vectors, column vectors, 1x1 scalars).

Var add(Var a, Var b);
Var subtract(Var a, Var b);
Var multiply(Var a, Var b);
Var divide(Var a, Var b);
Var scale(Var a, double factor);
Var add_scalar(Var a, double offset);

Var matmul(Var a, Var b);
Var transpose(Var a);
Var reshape(Var a, std::size_t rows, std::size_t cols);
/// axis 0 stacks rows, axis 1 stacks columns.
Var concat(std::span<const Var> parts, int axis);
Var concat(std::initializer_list<Var> parts, int axis);

Var sum(Var a);
Var mean(Var a);
Var row_sums(Var a);   // rows x 1
Var col_sums(Var a);   // 1 x cols
Var col_means(Var a);  // 1 x cols
Var row_max(Var a);    // rows x 1, gradient to the first maximal column
Var global_max(Var a); // 1 x cols, maximum over rows; gradient to the first maximal row

Var relu(Var a);
Var tanh(Var a);
Var sigmoid(Var a);
Var log(Var a);
Var clamp(Var a, double lo, double hi);
Var softmax(Var a);  // row-wise
Var frobenius_norm(Var a);
/// Strict upper triangle of a square matrix, row-major, as a 1 x M(M-1)/2 row.
Var upper_triangle_vectorize(Var a);

// ---------------------------------------------------------------------------
// Finite-difference checking

using Program = std::function<Var(Tape&, std::span<const Var>)>;

/// Max over entries of |analytic - numeric| / max(1, |analytic|, |numeric|)
/// using central differences of the given step on every input entry.
double grad_check(const Program& f, std::span<const Tensor> inputs, double eps = 1e-6);

using ParamProgram = std::function<Var(Tape&, ParamSet&)>;

/// Same measure, perturbing every scalar of every parameter in the set.
double grad_check_params(const ParamProgram& f, ParamSet& params, double eps = 1e-6);

}  // namespace mcdgln::grad
