#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mcdgln/gradcore.hpp"

namespace mcdgln::io {

using grad::Tensor;

struct SubjectRecord {
  std::string subject_id;
  int label = 0;  // 0 = control, 1 = case
  std::filesystem::path path;  // as written in the manifest, relative to its directory
};

struct DatasetManifest {
  std::vector<SubjectRecord> records;
  std::size_t rois = 0;        // M
  std::size_t timepoints = 0;  // T
  std::filesystem::path base_dir;
};

/// One subject's ROI-by-time signal (M x T).
struct BoldSeries {
  std::string subject_id;
  int label = 0;
  Tensor signal;
};

struct Dataset {
  DatasetManifest manifest;
  std::vector<BoldSeries> subjects;
};

/// Reads an M-row, T-column CSV without header.
Tensor read_bold_csv(const std::filesystem::path& path);
void write_bold_csv(const std::filesystem::path& path, const Tensor& signal);

/// Parses and fully validates a manifest (every BOLD file is read).
DatasetManifest load_manifest(const std::filesystem::path& path);
/// load_manifest plus the parsed series, in manifest order.
Dataset load_dataset(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Flat key=value files

using KeyValues = std::vector<std::pair<std::string, std::string>>;

/// Blank lines and '#' comments are skipped. Duplicate keys are rejected.
KeyValues parse_key_values(const std::filesystem::path& path);

struct RunConfig {
  std::size_t window_length = 30;  // L
  std::size_t stride = 10;         // S
  std::size_t wea_layers = 3;
  std::size_t hgcn_blocks = 3;
  std::size_t hidden = 32;  // d
  double lambda = 0.1;
  double learning_rate = 1e-3;
  std::size_t batch_size = 16;
  std::size_t epochs = 50;
  std::size_t folds = 10;
  double sparsify_q = 0.5;
  double keep_ratio = 0.2;
  std::uint64_t seed = 0;
  bool use_ace = true;  // false zeroes the connection-encoder branch
  bool use_med = true;  // false passes sFC through unmasked

  bool seed_given = false;  // seed came from the file rather than the default

  /// Throws ConfigError naming the first violated field.
  void validate() const;
  /// Every field as "key=value" in a stable order (the config file syntax).
  KeyValues to_key_values() const;
};

RunConfig default_config();
RunConfig load_config(const std::filesystem::path& path);
RunConfig config_from_key_values(const KeyValues& kv);

// ---------------------------------------------------------------------------
// Synthetic connectome generator

struct SynthSpec {
  std::size_t n_subjects = 100;
  std::size_t rois = 16;
  std::size_t timepoints = 200;
  /// Module index per ROI. Empty means `modules` contiguous near-equal blocks.
  std::vector<std::size_t> partition;
  std::size_t modules = 4;
  double intra_control = 0.6;
  double intra_case = 0.6;
  double cross_control = 0.1;
  /// Correlation of the planted cross-module edges in case subjects.
  double cross_case = 0.25;
  std::size_t planted_edges = 8;
  /// Variance of independent per-ROI noise added to the covariance diagonal.
  double noise = 0.1;
  std::uint64_t seed = 0;
  bool seed_given = false;

  void validate() const;
  std::vector<std::size_t> resolved_partition() const;
  KeyValues to_key_values() const;
};

SynthSpec load_synth_spec(const std::filesystem::path& path);

struct SynthResult {
  std::filesystem::path manifest;
  std::vector<std::pair<std::size_t, std::size_t>> planted;  // (u, w), u < w
  std::size_t controls = 0;
  std::size_t cases = 0;
};

/// Class covariance: block correlation structure plus diagonal noise.
Tensor class_covariance(const SynthSpec& spec, int label,
                        const std::vector<std::pair<std::size_t, std::size_t>>& planted);

/// Planted edges are node-disjoint. Writes out_dir/manifest.csv, out_dir/bold/<id>.csv
/// and out_dir/planted_edges.csv.
SynthResult generate_synthetic(const SynthSpec& spec, const std::filesystem::path& out_dir);

}  // namespace mcdgln::io
