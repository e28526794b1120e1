#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <vector>

namespace oaf {

/// 8-bit RGB image, row-major, interleaved.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;
  /// Identifies the frame for providers that key on it (the synthetic oracle).
  std::int64_t frame_id = -1;
  /// Where the frame was loaded from, if anywhere; external providers need it.
  std::filesystem::path source;

  Image() = default;
  Image(int w, int h) : width(w), height(h), rgb(static_cast<std::size_t>(w) * h * 3, 0) {}

  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
  std::uint8_t* at(int u, int v) { return &rgb[(static_cast<std::size_t>(v) * width + u) * 3]; }
  const std::uint8_t* at(int u, int v) const {
    return &rgb[(static_cast<std::size_t>(v) * width + u) * 3];
  }
};

/// H x W ray-length depths. Pixels without a return hold a quiet NaN.
class DepthImage {
 public:
  static constexpr float kInvalid = std::numeric_limits<float>::quiet_NaN();

  DepthImage() = default;
  DepthImage(int width, int height)
      : width_(width), height_(height), depth_(static_cast<std::size_t>(width) * height, kInvalid) {}

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return depth_.size(); }

  float operator[](std::size_t i) const { return depth_[i]; }
  float at(int u, int v) const { return depth_[static_cast<std::size_t>(v) * width_ + u]; }
  void set(std::size_t i, float d) { depth_[i] = d; }
  void set(int u, int v, float d) { depth_[static_cast<std::size_t>(v) * width_ + u] = d; }
  void invalidate(std::size_t i) { depth_[i] = kInvalid; }

  bool valid(std::size_t i) const { return std::isfinite(depth_[i]) && depth_[i] > 0.0f; }
  std::size_t valid_count() const {
    std::size_t n = 0;
    for (std::size_t i = 0; i < depth_.size(); ++i) n += valid(i) ? 1 : 0;
    return n;
  }

  const std::vector<float>& data() const { return depth_; }
  std::vector<float>& data() { return depth_; }

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<float> depth_;
};

}  // namespace oaf
