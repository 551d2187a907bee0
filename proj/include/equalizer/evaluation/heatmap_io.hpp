#pragma once

#include <filesystem>
#include <string>

#include "equalizer/numerics/tensor.hpp"

namespace equalizer::evaluation {

using numerics::Tensor;

/// Binary P6 bytes for a [3 x H x W] image with values in [0, 1]
/// (clamped, rounded to 8 bits).
std::string encode_ppm(const Tensor& rgb);
void write_ppm(const std::filesystem::path& path, const Tensor& rgb);

/// Grey [3 x H x W] rendering of a [H x W] heat map.
Tensor heat_to_rgb(const Tensor& heat);

/// Per pixel: (1 - h) * image + h * red. Where the heat is 0 the source
/// pixel is kept exactly.
Tensor overlay_heat(const Tensor& image, const Tensor& heat);

}  // namespace equalizer::evaluation
