#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "mcdgln/gradcore.hpp"

namespace mcdgln::grad {

std::string shape_str(Shape s) {
  return "[" + std::to_string(s[0]) + "x" + std::to_string(s[1]) + "]";
}

Tensor::Tensor() : data_(std::make_shared<const std::vector<double>>()) {}

Tensor::Tensor(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols) {
  if (values.size() != rows * cols) {
    throw ShapeError("tensor: shape " + shape_str({rows, cols}) + " does not match " +
                     std::to_string(values.size()) + " values");
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw NumericalError("tensor: non-finite value at flat index " + std::to_string(i) +
                           " of " + shape_str({rows, cols}));
    }
  }
  data_ = std::make_shared<const std::vector<double>>(std::move(values));
}

Tensor Tensor::zeros(std::size_t rows, std::size_t cols) { return full(rows, cols, 0.0); }

Tensor Tensor::full(std::size_t rows, std::size_t cols, double value) {
  return Tensor(rows, cols, std::vector<double>(rows * cols, value));
}

Tensor Tensor::identity(std::size_t n) {
  std::vector<double> v(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) v[i * n + i] = 1.0;
  return Tensor(n, n, std::move(v));
}

Tensor Tensor::scalar(double value) { return Tensor(1, 1, {value}); }

Tensor Tensor::row(std::vector<double> values) {
  const auto n = values.size();
  return Tensor(1, n, std::move(values));
}

double Tensor::item() const {
  if (size() != 1) throw ShapeError("item: tensor of shape " + shape_str(shape()) + " is not a scalar");
  return (*data_)[0];
}

bool bitwise_equal(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) return false;
  auto av = a.values();
  auto bv = b.values();
  for (std::size_t i = 0; i < av.size(); ++i) {
    if (std::memcmp(&av[i], &bv[i], sizeof(double)) != 0) return false;
  }
  return true;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError("max_abs_diff: " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// ---------------------------------------------------------------------------

void ParamSet::add(const std::string& name, Tensor value) {
  if (name.empty() || name.find_first_of(" \t\n") != std::string::npos) {
    throw ConfigError("paramset: invalid parameter name '" + name + "'");
  }
  if (index_.contains(name)) throw ConfigError("paramset: duplicate parameter '" + name + "'");
  index_[name] = entries_.size();
  std::vector<double> g(value.size(), 0.0);
  entries_.push_back({name, std::move(value), std::move(g)});
}

bool ParamSet::contains(const std::string& name) const { return index_.contains(name); }

std::size_t ParamSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.value.size();
  return n;
}

std::size_t ParamSet::index(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ConfigError("paramset: unknown parameter '" + name + "'");
  return it->second;
}

const Tensor& ParamSet::value(const std::string& name) const { return entries_[index(name)].value; }

void ParamSet::set_value(const std::string& name, Tensor value) {
  auto& e = entries_[index(name)];
  if (value.shape() != e.value.shape()) {
    throw ShapeError("paramset: '" + name + "' expects " + shape_str(e.value.shape()) + ", got " +
                     shape_str(value.shape()));
  }
  e.value = std::move(value);
}

Tensor ParamSet::grad(const std::string& name) const {
  const auto& e = entries_[index(name)];
  return Tensor(e.value.rows(), e.value.cols(), e.grad);
}

void ParamSet::zero_grad() {
  for (auto& e : entries_) std::fill(e.grad.begin(), e.grad.end(), 0.0);
}

void ParamSet::save(std::ostream& out) const {
  out << kCheckpointMagic << '\n' << entries_.size() << '\n';
  out << std::setprecision(17);
  for (const auto& e : entries_) {
    out << e.name << ' ' << e.value.rows() << ' ' << e.value.cols() << '\n';
    for (std::size_t i = 0; i < e.value.size(); ++i) {
      if (i) out << ' ';
      out << e.value[i];
    }
    out << '\n';
  }
}

void ParamSet::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw CheckpointError("checkpoint: cannot open '" + path + "' for writing");
  save(out);
  if (!out) throw CheckpointError("checkpoint: write to '" + path + "' failed");
}

ParamSet ParamSet::load(std::istream& in) {
  std::string magic;
  if (!std::getline(in, magic) || magic != kCheckpointMagic) {
    throw CheckpointError("checkpoint: bad header '" + magic + "', expected " + kCheckpointMagic);
  }
  std::size_t count = 0;
  if (!(in >> count)) throw CheckpointError("checkpoint: missing record count");
  ParamSet ps;
  for (std::size_t k = 0; k < count; ++k) {
    std::string name;
    std::size_t rows = 0, cols = 0;
    if (!(in >> name >> rows >> cols)) {
      throw CheckpointError("checkpoint: truncated record " + std::to_string(k));
    }
    std::vector<double> v(rows * cols);
    for (auto& x : v) {
      if (!(in >> x)) throw CheckpointError("checkpoint: truncated values for '" + name + "'");
    }
    try {
      ps.add(name, Tensor(rows, cols, std::move(v)));
    } catch (const Error& e) {
      throw CheckpointError(std::string("checkpoint: ") + e.what());
    }
  }
  return ps;
}

ParamSet ParamSet::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CheckpointError("checkpoint: cannot open '" + path + "'");
  return load(in);
}

}  // namespace mcdgln::grad
