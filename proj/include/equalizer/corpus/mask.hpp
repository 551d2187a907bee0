#pragma once

#include "equalizer/numerics/tensor.hpp"

namespace equalizer::corpus {

using numerics::Tensor;

/// I' = I (.) M applied per channel: pixels [C x H x W], mask [1 x H x W]
/// holding 0 on person pixels and 1 elsewhere. Throws ContractError for a
/// non-binary mask and DimensionError for mismatched extents.
Tensor apply_mask(const Tensor& pixels, const Tensor& mask);

}  // namespace equalizer::corpus
