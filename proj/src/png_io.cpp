#include "oaf/errors.hpp"
#include "oaf/io.hpp"

#include <png.h>

#include <cstring>

namespace oaf {

void write_png(const fs::path& path, const Image& img) {
  png_image im;
  std::memset(&im, 0, sizeof im);
  im.version = PNG_IMAGE_VERSION;
  im.width = static_cast<png_uint_32>(img.width);
  im.height = static_cast<png_uint_32>(img.height);
  im.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&im, path.c_str(), 0, img.rgb.data(), 0, nullptr)) {
    throw Error("write_png " + path.string() + ": " + im.message);
  }
}

Image read_png(const fs::path& path) {
  png_image im;
  std::memset(&im, 0, sizeof im);
  im.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&im, path.c_str())) {
    throw FormatError("read_png " + path.string() + ": " + im.message);
  }
  im.format = PNG_FORMAT_RGB;
  Image img(static_cast<int>(im.width), static_cast<int>(im.height));
  if (!png_image_finish_read(&im, nullptr, img.rgb.data(), 0, nullptr)) {
    png_image_free(&im);
    throw FormatError("read_png " + path.string() + ": " + im.message);
  }
  img.source = path;
  return img;
}

}  // namespace oaf
