#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mcdgln/model.hpp"

namespace mcdgln::gradsuite {

struct Entry {
  std::string name;
  double max_rel_error = 0.0;
};

/// Finite-difference check of every primitive on random inputs in [-1, 1]
/// (shifted positive where the domain requires it).
std::vector<Entry> check_primitives(std::uint64_t seed, double eps = 1e-6);

/// 4 ROIs, 2 windows, 2 subjects, small hidden width.
struct Toy {
  io::RunConfig config;
  std::vector<model::SubjectInput> subjects;
  grad::ParamSet params;
};

Toy make_toy(std::uint64_t seed);

/// Check of the composite loss over every model parameter of the toy.
Entry check_full_model(std::uint64_t seed, double eps = 1e-6);

std::vector<Entry> run_all(std::uint64_t seed, double eps = 1e-6);

}  // namespace mcdgln::gradsuite
