#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "mistnormal/error.hpp"

namespace mistnormal {

/// Row-major interleaved 8-bit image with 1 or 3 channels.
class Image {
 public:
  Image() = default;
  Image(int width, int height, int channels, std::uint8_t fill = 0);

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  bool empty() const { return data_.empty(); }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width_) * height_; }

  std::uint8_t& at(int x, int y, int c = 0) { return data_[index(x, y) + c]; }
  std::uint8_t at(int x, int y, int c = 0) const { return data_[index(x, y) + c]; }
  std::uint8_t* pixel(int x, int y) { return data_.data() + index(x, y); }
  const std::uint8_t* pixel(int x, int y) const { return data_.data() + index(x, y); }

  const std::vector<std::uint8_t>& data() const { return data_; }
  std::vector<std::uint8_t>& data() { return data_; }

  bool operator==(const Image&) const = default;

 private:
  std::size_t index(int x, int y) const {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_;
  }

  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<std::uint8_t> data_;
};

/// Single-channel 0/1 mask.
class Mask {
 public:
  Mask() = default;
  Mask(int width, int height) : width_(width), height_(height), bits_(pixel_count(), 0) {}

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width_) * height_; }
  bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }

  bool get(int x, int y) const { return bits_[static_cast<std::size_t>(y) * width_ + x] != 0; }
  void set(int x, int y, bool v = true) {
    bits_[static_cast<std::size_t>(y) * width_ + x] = v ? 1 : 0;
  }
  /// Out-of-bounds reads as false.
  bool test(int x, int y) const { return contains(x, y) && get(x, y); }

  std::size_t count() const;
  const std::vector<std::uint8_t>& bits() const { return bits_; }

  bool operator==(const Mask&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> bits_;
};

/// Reads binary or ASCII PGM/PPM (P2, P3, P5, P6, maxval <= 255).
/// Throws ImageLoadError.
Image read_pnm(const std::filesystem::path& path);
/// Writes P5 for one channel, P6 for three.
void write_pnm(const std::filesystem::path& path, const Image& image);
/// Writes a mask as P5 with 0/255 levels.
void write_mask_pgm(const std::filesystem::path& path, const Mask& mask);

/// ITU-R 601 luma of a pixel.
std::uint8_t luma(const Image& image, int x, int y);

}  // namespace mistnormal
