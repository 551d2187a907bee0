#include "equalizer/evaluation/heatmap_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "equalizer/error.hpp"

namespace equalizer::evaluation {

std::string encode_ppm(const Tensor& rgb) {
  if (rgb.rank() != 3 || rgb.extent(0) != 3) {
    throw DimensionError("ppm expects [3 x H x W], got " + numerics::shape_string(rgb.shape()));
  }
  const std::size_t H = rgb.extent(1), W = rgb.extent(2);
  std::string out = "P6\n" + std::to_string(W) + " " + std::to_string(H) + "\n255\n";
  out.reserve(out.size() + 3 * H * W);
  for (std::size_t y = 0; y < H; ++y) {
    for (std::size_t x = 0; x < W; ++x) {
      for (std::size_t c = 0; c < 3; ++c) {
        const double v = std::clamp(rgb.at(c, y, x), 0.0, 1.0);
        out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0))));
      }
    }
  }
  return out;
}

void write_ppm(const std::filesystem::path& path, const Tensor& rgb) {
  const auto bytes = encode_ppm(rgb);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FileError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FileError("failed writing " + path.string());
}

Tensor heat_to_rgb(const Tensor& heat) {
  if (heat.rank() != 2) throw DimensionError("heat map must be [H x W]");
  const std::size_t H = heat.extent(0), W = heat.extent(1);
  Tensor out({3, H, W});
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t y = 0; y < H; ++y) {
      for (std::size_t x = 0; x < W; ++x) out.at(c, y, x) = heat.at(y, x);
    }
  }
  return out;
}

Tensor overlay_heat(const Tensor& image, const Tensor& heat) {
  if (image.rank() != 3 || image.extent(0) != 3 || heat.rank() != 2 || image.extent(1) != heat.extent(0) ||
      image.extent(2) != heat.extent(1)) {
    throw DimensionError("overlay needs a [3 x H x W] image and a matching [H x W] map");
  }
  Tensor out = image;
  constexpr double red[3] = {1.0, 0.0, 0.0};
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t y = 0; y < heat.extent(0); ++y) {
      for (std::size_t x = 0; x < heat.extent(1); ++x) {
        const double h = heat.at(y, x);
        if (h == 0.0) continue;
        out.at(c, y, x) = (1.0 - h) * image.at(c, y, x) + h * red[c];
      }
    }
  }
  return out;
}

}  // namespace equalizer::evaluation
