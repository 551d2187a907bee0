#include "equalizer/corpus/mask.hpp"

#include "equalizer/error.hpp"

namespace equalizer::corpus {

Tensor apply_mask(const Tensor& pixels, const Tensor& mask) {
  if (pixels.rank() != 3 || mask.rank() != 3 || mask.extent(0) != 1 || mask.extent(1) != pixels.extent(1) ||
      mask.extent(2) != pixels.extent(2)) {
    throw DimensionError("apply_mask: mask " + numerics::shape_string(mask.shape()) + " does not fit image " +
                         numerics::shape_string(pixels.shape()));
  }
  for (double m : mask.data()) {
    if (m != 0.0 && m != 1.0) throw ContractError("apply_mask: mask values must be 0 or 1");
  }
  Tensor out = pixels;
  const std::size_t plane = mask.size();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= mask[i % plane];
  return out;
}

}  // namespace equalizer::corpus
