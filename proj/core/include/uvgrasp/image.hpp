#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <Eigen/Core>

namespace uvgrasp {

using Rgb = Eigen::Array3d;

// Row-major RGB image with channel values nominally in [0, 1]. Pixel (x, y)
// has its center at (x + 0.5, y + 0.5) in image coordinates.
struct Image
{
  int width = 0;
  int height = 0;
  std::vector<Rgb> pixels;

  Image() = default;
  Image(int w, int h, const Rgb& fill = Rgb::Zero())
    : width(w)
    , height(h)
    , pixels(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill)
  {}

  std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width + x; }
  const Rgb& at(int x, int y) const { return pixels[index(x, y)]; }
  Rgb& at(int x, int y) { return pixels[index(x, y)]; }
};

// 8-bit PNG; values map linearly between [0, 255] and [0, 1]. When `alpha`
// is given the file is read/written as RGBA and the alpha plane is exchanged
// through it (files without alpha read as fully opaque).
Image
load_png(const std::filesystem::path& path, std::vector<std::uint8_t>* alpha = nullptr);

void
save_png(const Image& image, const std::filesystem::path& path, const std::vector<std::uint8_t>* alpha = nullptr);

} // namespace uvgrasp
