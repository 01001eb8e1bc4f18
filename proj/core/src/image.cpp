#include "uvgrasp/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include <png.h>

#include "uvgrasp/error.hpp"

namespace uvgrasp {

Image
load_png(const std::filesystem::path& path, std::vector<std::uint8_t>* alpha)
{
  png_image png;
  std::memset(&png, 0, sizeof png);
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&png, path.c_str()))
    fail(ErrorCode::IoError, "cannot read PNG " + path.string() + ": " + png.message);
  png.format = alpha ? PNG_FORMAT_RGBA : PNG_FORMAT_RGB;
  const std::size_t stride = alpha ? 4 : 3;
  std::vector<png_byte> buffer(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, buffer.data(), 0, nullptr)) {
    png_image_free(&png);
    fail(ErrorCode::IoError, "cannot decode PNG " + path.string() + ": " + png.message);
  }
  Image image(static_cast<int>(png.width), static_cast<int>(png.height));
  if (alpha)
    alpha->assign(image.pixels.size(), 0);
  for (std::size_t i = 0; i < image.pixels.size(); ++i) {
    const png_byte* px = &buffer[stride * i];
    image.pixels[i] = Rgb(px[0], px[1], px[2]) / 255.0;
    if (alpha)
      (*alpha)[i] = px[3];
  }
  return image;
}

void
save_png(const Image& image, const std::filesystem::path& path, const std::vector<std::uint8_t>* alpha)
{
  if (image.width < 1 || image.height < 1)
    fail(ErrorCode::InvalidArgument, "cannot write an empty image");
  if (alpha && alpha->size() != image.pixels.size())
    fail(ErrorCode::DimensionMismatch, "alpha plane does not match image size");
  const std::size_t stride = alpha ? 4 : 3;
  std::vector<png_byte> buffer(image.pixels.size() * stride);
  for (std::size_t i = 0; i < image.pixels.size(); ++i) {
    for (int c = 0; c < 3; ++c)
      buffer[stride * i + c] = static_cast<png_byte>(std::lround(std::clamp(image.pixels[i][c], 0.0, 1.0) * 255.0));
    if (alpha)
      buffer[stride * i + 3] = (*alpha)[i];
  }
  png_image png;
  std::memset(&png, 0, sizeof png);
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width);
  png.height = static_cast<png_uint_32>(image.height);
  png.format = alpha ? PNG_FORMAT_RGBA : PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&png, path.c_str(), 0, buffer.data(), 0, nullptr))
    fail(ErrorCode::IoError, "cannot write PNG " + path.string() + ": " + png.message);
}

} // namespace uvgrasp
