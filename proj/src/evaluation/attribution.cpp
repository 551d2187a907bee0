#include "equalizer/evaluation/attribution.hpp"

#include <algorithm>
#include <cmath>

#include "equalizer/error.hpp"
#include "equalizer/numerics/ops.hpp"

namespace equalizer::evaluation {

namespace ops = numerics;

Tensor upsample_bilinear(const Tensor& map, std::size_t height, std::size_t width) {
  if (map.rank() != 2) throw DimensionError("upsample expects a [h x w] map, got " + numerics::shape_string(map.shape()));
  const std::size_t h = map.extent(0), w = map.extent(1);
  Tensor out({height, width});
  auto coord = [](std::size_t dst, std::size_t src_n, std::size_t dst_n, std::size_t& lo, std::size_t& hi) {
    double s = (static_cast<double>(dst) + 0.5) * static_cast<double>(src_n) / static_cast<double>(dst_n) - 0.5;
    s = std::clamp(s, 0.0, static_cast<double>(src_n - 1));
    lo = static_cast<std::size_t>(std::floor(s));
    hi = std::min(lo + 1, src_n - 1);
    return s - static_cast<double>(lo);
  };
  for (std::size_t y = 0; y < height; ++y) {
    std::size_t y0, y1;
    const double fy = coord(y, h, height, y0, y1);
    for (std::size_t x = 0; x < width; ++x) {
      std::size_t x0, x1;
      const double fx = coord(x, w, width, x0, x1);
      const double top = map.at(y0, x0) * (1 - fx) + map.at(y0, x1) * fx;
      const double bottom = map.at(y1, x0) * (1 - fx) + map.at(y1, x1) * fx;
      out.at(y, x) = top * (1 - fy) + bottom * fy;
    }
  }
  return out;
}

Tensor max_normalize(Tensor map) {
  double peak = 0.0;
  for (double v : map.data()) peak = std::max(peak, v);
  if (peak > 0.0) {
    for (double& v : map.data()) v = std::clamp(v / peak, 0.0, 1.0);
  }
  return map;
}

Tensor grad_cam_map(const Tensor& activations, const Tensor& gradients, std::size_t height, std::size_t width) {
  if (activations.rank() != 3 || activations.shape() != gradients.shape()) {
    throw DimensionError("grad-cam needs matching [C x h x w] activations and gradients");
  }
  const std::size_t C = activations.extent(0), h = activations.extent(1), w = activations.extent(2);
  const std::size_t plane = h * w;
  Tensor cam({h, w}, 0.0);
  const auto act = activations.data();
  const auto grad = gradients.data();
  for (std::size_t c = 0; c < C; ++c) {
    double alpha = 0.0;
    for (std::size_t i = 0; i < plane; ++i) alpha += grad[c * plane + i];
    alpha /= static_cast<double>(plane);
    for (std::size_t i = 0; i < plane; ++i) cam[i] += alpha * act[c * plane + i];
  }
  for (double& v : cam.data()) v = std::max(v, 0.0);
  Tensor up = upsample_bilinear(cam, height, width);
  for (double& v : up.data()) v = std::max(v, 0.0);
  return max_normalize(std::move(up));
}

AttributionMap grad_cam(const Captioner& model, const Tensor& image, const CaptionSequence& caption,
                        std::size_t position, const losses::GenderIndex& lexicon, std::uint32_t image_id) {
  if (position == 0 || position >= caption.tokens.size()) {
    throw ContractError("grad-cam position " + std::to_string(position) + " outside caption targets");
  }
  const auto token = caption.tokens[position];
  if (!lexicon.is_gendered(token)) {
    throw ContractError("grad-cam position " + std::to_string(position) + " does not hold a gendered word");
  }
  numerics::Graph g;
  auto enc = model.encode(g, image);
  auto dists = model.decode_teacher_forced(g, enc.feature, caption);
  const std::size_t V = g.value(dists).extent(1);
  auto logp = ops::log(g, ops::pick(g, dists, (position - 1) * V + token));
  g.backward(logp, model.params());

  const auto& cfg = model.config();
  AttributionMap map;
  map.heat = grad_cam_map(g.value(enc.conv_activations), g.grad(enc.conv_activations), cfg.height, cfg.width);
  map.target = token;
  map.image_id = image_id;
  return map;
}

bool pointing_game(const Tensor& heat, const Tensor& person_mask) {
  const auto h = heat.data();
  const auto m = person_mask.data();
  if (h.size() != m.size()) throw DimensionError("heat map and mask extents differ");
  std::size_t best = 0;
  for (std::size_t i = 1; i < h.size(); ++i) {
    if (h[i] > h[best]) best = i;
  }
  return m[best] == 0.0;
}

bool pointing_game(const AttributionMap& map, const Tensor& person_mask) { return pointing_game(map.heat, person_mask); }

OcclusionResult occlusion_check(const Captioner& model, const Tensor& image, const CaptionSequence& caption,
                                std::size_t position, const AttributionMap& map, std::size_t patch) {
  const std::size_t H = map.heat.extent(0), W = map.heat.extent(1);
  if (patch == 0 || H % patch || W % patch) throw ContractError("patch size must tile the map");
  if (image.rank() != 3 || image.extent(1) != H || image.extent(2) != W) {
    throw DimensionError("image and heat map extents differ");
  }
  const std::size_t rows = H / patch, cols = W / patch;
  std::vector<double> mass(rows * cols, 0.0);
  for (std::size_t y = 0; y < H; ++y) {
    for (std::size_t x = 0; x < W; ++x) mass[(y / patch) * cols + x / patch] += map.heat.at(y, x);
  }
  std::size_t hi = 0, lo = 0;
  for (std::size_t i = 1; i < mass.size(); ++i) {
    if (mass[i] > mass[hi]) hi = i;
    if (mass[i] < mass[lo]) lo = i;
  }
  const auto token = caption.tokens.at(position);
  auto prob = [&](const Tensor& img) {
    return captioner::teacher_forced_distributions(img, caption, model).at(position - 1, token);
  };
  auto occlude = [&](std::size_t tile) {
    Tensor out = image;
    const std::size_t ty = (tile / cols) * patch, tx = (tile % cols) * patch;
    for (std::size_t c = 0; c < image.extent(0); ++c) {
      for (std::size_t y = ty; y < ty + patch; ++y) {
        for (std::size_t x = tx; x < tx + patch; ++x) out.at(c, y, x) = 0.0;
      }
    }
    return out;
  };
  OcclusionResult r;
  r.base = prob(image);
  r.occluded_high = prob(occlude(hi));
  r.occluded_low = prob(occlude(lo));
  r.passed = (r.base - r.occluded_high) > (r.base - r.occluded_low);
  return r;
}

}  // namespace equalizer::evaluation
