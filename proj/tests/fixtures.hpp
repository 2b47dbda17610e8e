#pragma once

#include <filesystem>
#include <string>

#include "mcdgln/dataio.hpp"
#include "support.hpp"

namespace testing {

/// Small, easy two-class dataset on disk. Returns the manifest path.
inline std::filesystem::path small_dataset(const std::string& name, std::size_t n = 16, std::uint64_t seed = 5) {
  mcdgln::io::SynthSpec spec;
  spec.n_subjects = n;
  spec.rois = 6;
  spec.timepoints = 60;
  spec.modules = 2;
  spec.planted_edges = 2;
  spec.cross_case = 0.5;
  spec.seed = seed;
  return mcdgln::io::generate_synthetic(spec, scratch_dir(name)).manifest;
}

inline mcdgln::io::RunConfig small_config() {
  mcdgln::io::RunConfig cfg;
  cfg.window_length = 20;
  cfg.stride = 20;
  cfg.hidden = 6;
  cfg.wea_layers = 2;
  cfg.hgcn_blocks = 2;
  cfg.batch_size = 4;
  cfg.epochs = 5;
  cfg.folds = 2;
  cfg.learning_rate = 5e-3;
  cfg.keep_ratio = 0.3;
  return cfg;
}

}  // namespace testing
