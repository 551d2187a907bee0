#pragma once

#include <cstdint>

#include "equalizer/captioner/captioner.hpp"
#include "equalizer/losses/lexicon.hpp"

namespace equalizer::evaluation {

using captioner::CaptionSequence;
using captioner::Captioner;
using numerics::Tensor;

/// Nonnegative heat over image pixels, max-normalised to 1 when nonzero.
struct AttributionMap {
  Tensor heat;  // [H x W]
  captioner::TokenId target = 0;
  std::uint32_t image_id = 0;
};

/// Bilinear resize of a [h x w] map with half-pixel centres and edge clamping.
Tensor upsample_bilinear(const Tensor& map, std::size_t height, std::size_t width);

/// Divides by the maximum when it is positive; a zero map stays zero.
Tensor max_normalize(Tensor map);

/// ReLU(sum_c mean(gradients[c]) * activations[c]), upsampled to
/// height x width and max-normalised. Both inputs are [C x h x w].
Tensor grad_cam_map(const Tensor& activations, const Tensor& gradients, std::size_t height, std::size_t width);

/// Grad-CAM for the token at caption.tokens[position] (position >= 1) under
/// teacher forcing; the target is its log-probability and the maps are the
/// last convolutional activations. Throws ContractError unless that token is
/// gendered.
AttributionMap grad_cam(const Captioner& model, const Tensor& image, const CaptionSequence& caption,
                        std::size_t position, const losses::GenderIndex& lexicon, std::uint32_t image_id = 0);

/// Hit when the first maximum in row-major order lies where mask == 0.
bool pointing_game(const AttributionMap& map, const Tensor& person_mask);
bool pointing_game(const Tensor& heat, const Tensor& person_mask);

struct OcclusionResult {
  double base = 0.0;           // p(w_t) on the intact image
  double occluded_high = 0.0;  // with the highest-mass patch zeroed
  double occluded_low = 0.0;   // with the lowest-mass patch zeroed
  bool passed = false;         // drop(high) > drop(low)
};

/// Tiles the image into patch x patch squares, zeroes the tile carrying the
/// most and the least heat, and compares the resulting p(w_t). The first
/// tile in row-major order wins mass ties.
OcclusionResult occlusion_check(const Captioner& model, const Tensor& image, const CaptionSequence& caption,
                                std::size_t position, const AttributionMap& map, std::size_t patch = 8);

}  // namespace equalizer::evaluation
