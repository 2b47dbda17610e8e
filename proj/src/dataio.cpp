#include "mcdgln/dataio.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

namespace mcdgln::io {
namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, sep)) out.push_back(trim(cur));
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

double parse_double(const std::string& s, const std::string& what) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc{} || p != end) throw DataError(what + ": cannot parse number '" + s + "'");
  return v;
}

template <typename Err>
std::uint64_t parse_uint(const std::string& key, const std::string& s) {
  std::uint64_t v = 0;
  const auto* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc{} || p != end) throw Err(key + ": expected a non-negative integer, got '" + s + "'");
  return v;
}

template <typename Err>
double parse_real(const std::string& key, const std::string& s) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc{} || p != end) throw Err(key + ": expected a number, got '" + s + "'");
  return v;
}

bool parse_bool(const std::string& key, const std::string& s) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw ConfigError(key + ": expected true/false, got '" + s + "'");
}

std::string fmt_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

// ---------------------------------------------------------------------------
// BOLD files and manifests

Tensor read_bold_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open BOLD file '" + path.string() + "'");
  std::vector<double> values;
  std::size_t rows = 0, cols = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto fields = split(line, ',');
    if (rows == 0) cols = fields.size();
    if (fields.size() != cols) {
      throw DataError(path.string() + ": row " + std::to_string(rows) + " has " +
                      std::to_string(fields.size()) + " columns, expected " + std::to_string(cols));
    }
    for (const auto& f : fields) values.push_back(parse_double(f, path.string()));
    ++rows;
  }
  if (rows == 0) throw DataError(path.string() + ": empty BOLD file");
  try {
    return Tensor(rows, cols, std::move(values));
  } catch (const NumericalError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void write_bold_csv(const fs::path& path, const Tensor& signal) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  char buf[64];
  for (std::size_t i = 0; i < signal.rows(); ++i) {
    for (std::size_t j = 0; j < signal.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", signal(i, j));
      if (j) out << ',';
      out << buf;
    }
    out << '\n';
  }
}

Dataset load_dataset(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line)) throw DataError(path.string() + ": missing header row");
  const auto header = split(trim(line), ',');
  if (header != std::vector<std::string>{"subject_id", "label", "path"}) {
    throw DataError(path.string() + ": header must be 'subject_id,label,path', got '" + trim(line) + "'");
  }

  Dataset ds;
  ds.manifest.base_dir = path.parent_path();
  std::set<std::string> seen;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto f = split(trim(line), ',');
    if (f.size() != 3) throw DataError(path.string() + ":" + std::to_string(lineno) + ": expected 3 fields");
    SubjectRecord rec{f[0], 0, f[2]};
    if (rec.subject_id.empty()) throw DataError(path.string() + ":" + std::to_string(lineno) + ": empty subject_id");
    if (f[1] == "0") rec.label = 0;
    else if (f[1] == "1") rec.label = 1;
    else throw DataError("subject " + rec.subject_id + ": label must be 0 or 1, got '" + f[1] + "'");
    if (!seen.insert(rec.subject_id).second) throw DataError("duplicate subject id '" + rec.subject_id + "'");
    ds.manifest.records.push_back(rec);
  }
  if (ds.manifest.records.empty()) throw DataError(path.string() + ": no subjects");

  for (const auto& rec : ds.manifest.records) {
    Tensor sig = read_bold_csv(ds.manifest.base_dir / rec.path);
    if (ds.subjects.empty()) {
      ds.manifest.rois = sig.rows();
      ds.manifest.timepoints = sig.cols();
    } else if (sig.rows() != ds.manifest.rois || sig.cols() != ds.manifest.timepoints) {
      throw DataError("subject " + rec.subject_id + ": shape " + grad::shape_str(sig.shape()) +
                      " differs from " + grad::shape_str({ds.manifest.rois, ds.manifest.timepoints}));
    }
    ds.subjects.push_back({rec.subject_id, rec.label, std::move(sig)});
  }
  return ds;
}

DatasetManifest load_manifest(const fs::path& path) { return load_dataset(path).manifest; }

// ---------------------------------------------------------------------------
// key=value files

KeyValues parse_key_values(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path.string() + "'");
  KeyValues kv;
  std::set<std::string> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": expected key=value");
    }
    auto key = trim(line.substr(0, eq));
    auto val = trim(line.substr(eq + 1));
    if (!seen.insert(key).second) throw ConfigError(path.string() + ": duplicate key '" + key + "'");
    kv.emplace_back(std::move(key), std::move(val));
  }
  return kv;
}

void RunConfig::validate() const {
  if (window_length < 1) throw ConfigError("window_length: must be >= 1");
  if (stride < 1) throw ConfigError("stride: must be >= 1");
  if (hgcn_blocks < 1) throw ConfigError("hgcn_blocks: must be >= 1");
  if (hidden < 1) throw ConfigError("hidden: must be >= 1");
  if (!(lambda >= 0.0)) throw ConfigError("lambda: must be >= 0");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate: must be > 0");
  if (batch_size < 1) throw ConfigError("batch_size: must be >= 1");
  if (epochs < 1) throw ConfigError("epochs: must be >= 1");
  if (folds < 2) throw ConfigError("folds: must be >= 2");
  if (!(sparsify_q >= 0.0 && sparsify_q < 1.0)) throw ConfigError("sparsify_q: must lie in [0, 1)");
  if (!(keep_ratio > 0.0 && keep_ratio <= 1.0)) throw ConfigError("keep_ratio: must lie in (0, 1]");
}

KeyValues RunConfig::to_key_values() const {
  return {
      {"window_length", std::to_string(window_length)},
      {"stride", std::to_string(stride)},
      {"wea_layers", std::to_string(wea_layers)},
      {"hgcn_blocks", std::to_string(hgcn_blocks)},
      {"hidden", std::to_string(hidden)},
      {"lambda", fmt_real(lambda)},
      {"learning_rate", fmt_real(learning_rate)},
      {"batch_size", std::to_string(batch_size)},
      {"epochs", std::to_string(epochs)},
      {"folds", std::to_string(folds)},
      {"sparsify_q", fmt_real(sparsify_q)},
      {"keep_ratio", fmt_real(keep_ratio)},
      {"seed", std::to_string(seed)},
      {"use_ace", use_ace ? "true" : "false"},
      {"use_med", use_med ? "true" : "false"},
  };
}

RunConfig default_config() { return RunConfig{}; }

RunConfig config_from_key_values(const KeyValues& kv) {
  RunConfig c;
  for (const auto& [k, v] : kv) {
    using E = ConfigError;
    if (k == "window_length") c.window_length = parse_uint<E>(k, v);
    else if (k == "stride") c.stride = parse_uint<E>(k, v);
    else if (k == "wea_layers") c.wea_layers = parse_uint<E>(k, v);
    else if (k == "hgcn_blocks") c.hgcn_blocks = parse_uint<E>(k, v);
    else if (k == "hidden") c.hidden = parse_uint<E>(k, v);
    else if (k == "lambda") c.lambda = parse_real<E>(k, v);
    else if (k == "learning_rate") c.learning_rate = parse_real<E>(k, v);
    else if (k == "batch_size") c.batch_size = parse_uint<E>(k, v);
    else if (k == "epochs") c.epochs = parse_uint<E>(k, v);
    else if (k == "folds") c.folds = parse_uint<E>(k, v);
    else if (k == "sparsify_q") c.sparsify_q = parse_real<E>(k, v);
    else if (k == "keep_ratio") c.keep_ratio = parse_real<E>(k, v);
    else if (k == "seed") {
      c.seed = parse_uint<E>(k, v);
      c.seed_given = true;
    } else if (k == "use_ace") c.use_ace = parse_bool(k, v);
    else if (k == "use_med") c.use_med = parse_bool(k, v);
    else throw ConfigError("unknown config key '" + k + "'");
  }
  c.validate();
  return c;
}

RunConfig load_config(const fs::path& path) { return config_from_key_values(parse_key_values(path)); }

// ---------------------------------------------------------------------------
// Synthetic generator

std::vector<std::size_t> SynthSpec::resolved_partition() const {
  if (!partition.empty()) return partition;
  std::vector<std::size_t> p(rois);
  for (std::size_t r = 0; r < rois; ++r) p[r] = r * modules / rois;
  return p;
}

void SynthSpec::validate() const {
  if (n_subjects < 2) throw ConfigError("n_subjects: must be >= 2");
  if (rois < 2) throw ConfigError("rois: must be >= 2");
  if (timepoints < 2) throw ConfigError("timepoints: must be >= 2");
  if (partition.empty() && (modules < 1 || modules > rois)) throw ConfigError("modules: must lie in [1, rois]");
  if (!partition.empty() && partition.size() != rois) {
    throw ConfigError("partition: expected " + std::to_string(rois) + " module labels, got " +
                      std::to_string(partition.size()));
  }
  for (auto [name, v] : {std::pair{"intra_control", intra_control}, {"intra_case", intra_case},
                         {"cross_control", cross_control}, {"cross_case", cross_case}}) {
    if (!(v > -1.0 && v < 1.0)) throw ConfigError(std::string(name) + ": correlation must lie in (-1, 1)");
  }
  if (!(noise >= 0.0)) throw ConfigError("noise: must be >= 0");
  const auto part = resolved_partition();
  std::size_t cross = 0;
  for (std::size_t u = 0; u < rois; ++u)
    for (std::size_t w = u + 1; w < rois; ++w) cross += part[u] != part[w];
  if (planted_edges > cross) {
    throw ConfigError("planted_edges: only " + std::to_string(cross) + " cross-module edges exist");
  }
}

SynthSpec load_synth_spec(const fs::path& path) {
  SynthSpec s;
  for (const auto& [k, v] : parse_key_values(path)) {
    using E = ConfigError;
    if (k == "n_subjects") s.n_subjects = parse_uint<E>(k, v);
    else if (k == "rois") s.rois = parse_uint<E>(k, v);
    else if (k == "timepoints") s.timepoints = parse_uint<E>(k, v);
    else if (k == "modules") s.modules = parse_uint<E>(k, v);
    else if (k == "partition") {
      s.partition.clear();
      for (const auto& f : split(v, ',')) s.partition.push_back(parse_uint<E>(k, f));
    } else if (k == "intra_control") s.intra_control = parse_real<E>(k, v);
    else if (k == "intra_case") s.intra_case = parse_real<E>(k, v);
    else if (k == "cross_control") s.cross_control = parse_real<E>(k, v);
    else if (k == "cross_case") s.cross_case = parse_real<E>(k, v);
    else if (k == "planted_edges") s.planted_edges = parse_uint<E>(k, v);
    else if (k == "noise") s.noise = parse_real<E>(k, v);
    else if (k == "seed") {
      s.seed = parse_uint<E>(k, v);
      s.seed_given = true;
    } else throw ConfigError("unknown synth spec key '" + k + "'");
  }
  s.validate();
  return s;
}

KeyValues SynthSpec::to_key_values() const {
  std::string part;
  for (auto p : resolved_partition()) part += (part.empty() ? "" : ",") + std::to_string(p);
  return {
      {"n_subjects", std::to_string(n_subjects)},
      {"rois", std::to_string(rois)},
      {"timepoints", std::to_string(timepoints)},
      {"partition", part},
      {"intra_control", fmt_real(intra_control)},
      {"intra_case", fmt_real(intra_case)},
      {"cross_control", fmt_real(cross_control)},
      {"cross_case", fmt_real(cross_case)},
      {"planted_edges", std::to_string(planted_edges)},
      {"noise", fmt_real(noise)},
      {"seed", std::to_string(seed)},
  };
}

Tensor class_covariance(const SynthSpec& spec, int label,
                        const std::vector<std::pair<std::size_t, std::size_t>>& planted) {
  const auto part = spec.resolved_partition();
  const std::size_t m = spec.rois;
  const double intra = label == 1 ? spec.intra_case : spec.intra_control;
  std::vector<double> c(m * m);
  for (std::size_t u = 0; u < m; ++u)
    for (std::size_t w = 0; w < m; ++w) {
      if (u == w) c[u * m + w] = 1.0 + spec.noise;
      else c[u * m + w] = part[u] == part[w] ? intra : spec.cross_control;
    }
  if (label == 1) {
    for (auto [u, w] : planted) c[u * m + w] = c[w * m + u] = spec.cross_case;
  }
  return Tensor(m, m, std::move(c));
}

SynthResult generate_synthetic(const SynthSpec& spec, const fs::path& out_dir) {
  spec.validate();
  const std::size_t m = spec.rois, t = spec.timepoints;
  std::mt19937_64 rng(spec.seed);

  // Planted edge subset: seeded node-disjoint draw over cross-module pairs.
  const auto part = spec.resolved_partition();
  std::vector<std::pair<std::size_t, std::size_t>> cross;
  for (std::size_t u = 0; u < m; ++u)
    for (std::size_t w = u + 1; w < m; ++w)
      if (part[u] != part[w]) cross.emplace_back(u, w);
  std::vector<std::pair<std::size_t, std::size_t>> planted;
  for (int attempt = 0; attempt < 64 && planted.size() < spec.planted_edges; ++attempt) {
    std::shuffle(cross.begin(), cross.end(), rng);
    std::vector<bool> used(m, false);
    planted.clear();
    for (auto [u, w] : cross) {
      if (planted.size() == spec.planted_edges) break;
      if (used[u] || used[w]) continue;
      used[u] = used[w] = true;
      planted.emplace_back(u, w);
    }
  }
  if (planted.size() < spec.planted_edges) {
    throw ConfigError("synth: cannot place " + std::to_string(spec.planted_edges) +
                      " node-disjoint cross-module edges; lower planted_edges");
  }
  std::sort(planted.begin(), planted.end());

  std::array<Eigen::MatrixXd, 2> chol;
  for (int label = 0; label < 2; ++label) {
    const Tensor cov = class_covariance(spec, label, planted);
    Eigen::MatrixXd sigma(m, m);
    for (std::size_t u = 0; u < m; ++u)
      for (std::size_t w = 0; w < m; ++w) sigma(u, w) = cov(u, w);
    Eigen::LLT<Eigen::MatrixXd> llt(sigma);
    if (llt.info() != Eigen::Success) {
      throw ConfigError("synth: class " + std::to_string(label) +
                        " covariance is not positive definite; lower the correlations or raise noise");
    }
    chol[label] = llt.matrixL();
  }

  fs::create_directories(out_dir / "bold");
  SynthResult res;
  res.manifest = out_dir / "manifest.csv";
  res.planted = planted;
  std::ofstream man(res.manifest);
  if (!man) throw DataError("cannot write '" + res.manifest.string() + "'");
  man << "subject_id,label,path\n";

  std::normal_distribution<double> gauss(0.0, 1.0);
  const int width = std::max<int>(3, static_cast<int>(std::to_string(spec.n_subjects - 1).size()));
  Eigen::VectorXd z(m);
  for (std::size_t s = 0; s < spec.n_subjects; ++s) {
    const int label = static_cast<int>(s % 2);
    (label ? res.cases : res.controls) += 1;
    std::vector<double> sig(m * t);
    for (std::size_t k = 0; k < t; ++k) {
      for (std::size_t u = 0; u < m; ++u) z(u) = gauss(rng);
      const Eigen::VectorXd x = chol[label] * z;
      for (std::size_t u = 0; u < m; ++u) sig[u * t + k] = x(u);
    }
    std::string id = std::to_string(s);
    id = "sub-" + std::string(width - std::min<int>(width, id.size()), '0') + id;
    const fs::path rel = fs::path("bold") / (id + ".csv");
    write_bold_csv(out_dir / rel, Tensor(m, t, std::move(sig)));
    man << id << ',' << label << ',' << rel.generic_string() << '\n';
  }

  std::ofstream echo(out_dir / "synth_spec.txt");
  for (const auto& [k, v] : spec.to_key_values()) echo << k << '=' << v << '\n';

  std::ofstream pe(out_dir / "planted_edges.csv");
  pe << "u,w\n";
  for (auto [u, w] : planted) pe << u << ',' << w << '\n';
  return res;
}

}  // namespace mcdgln::io
