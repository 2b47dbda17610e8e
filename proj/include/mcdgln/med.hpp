#pragma once

// Masked edge drop: a binary mask derived from tsFC prunes static FC.

#include "mcdgln/gradcore.hpp"

namespace mcdgln::med {

using grad::Tensor;
using grad::Var;

/// Zeroes the floor(q * E) smallest off-diagonal |values| (symmetric pairs
/// together; ties by (row, col), later pairs dropped first). Diagonal untouched.
Tensor sparsify(const Tensor& tsfc, double q);

/// 1 where the input is nonzero, 0 elsewhere; diagonal forced to 0.
Tensor make_mask(const Tensor& sparse);

/// Off-diagonal all-ones mask, used when masking is disabled.
Tensor full_mask(std::size_t rois);

Tensor apply_mask(const Tensor& sfc, const Tensor& mask);
/// Differentiable in sfc; masked entries get zero gradient.
Var apply_mask(Var sfc, const Tensor& mask);

}  // namespace mcdgln::med
