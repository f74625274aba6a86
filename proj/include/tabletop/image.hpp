#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace tabletop {

struct Rgb {
  float r = 0.f;
  float g = 0.f;
  float b = 0.f;

  float operator[](int c) const { return c == 0 ? r : (c == 1 ? g : b); }
  bool operator==(const Rgb&) const = default;
};

// Interleaved RGB raster, channel values nominally in [0, 1].
// Pixel (x, y) is column x, row y; its continuous center is (x + 0.5, y + 0.5).
class RgbImage {
 public:
  RgbImage() = default;
  RgbImage(int width, int height, Rgb fill = {});

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return data_.empty(); }
  bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }

  float& at(int x, int y, int c) { return data_[index(x, y) + static_cast<std::size_t>(c)]; }
  float at(int x, int y, int c) const { return data_[index(x, y) + static_cast<std::size_t>(c)]; }

  Rgb pixel(int x, int y) const {
    const std::size_t i = index(x, y);
    return {data_[i], data_[i + 1], data_[i + 2]};
  }
  void set_pixel(int x, int y, Rgb c) {
    const std::size_t i = index(x, y);
    data_[i] = c.r;
    data_[i + 1] = c.g;
    data_[i + 2] = c.b;
  }

  std::span<const float> data() const { return data_; }
  std::span<float> data() { return data_; }

  bool operator==(const RgbImage&) const = default;

 private:
  std::size_t index(int x, int y) const {
    return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
            static_cast<std::size_t>(x)) * 3;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<float> data_;
};

// Rounds every channel to the nearest multiple of 1/255 so the raster survives
// an 8-bit PNG round trip unchanged.
void quantize_to_8bit(RgbImage& img);

// Square raster on the bird-view plane. scale_h is pixels per meter and equals
// the image side in the default configuration.
class VirtualImage {
 public:
  VirtualImage() = default;
  // Throws InvariantViolation unless the raster is square, non-empty, has
  // channels in [0, 1] and scale_h > 0.
  VirtualImage(RgbImage pixels, double scale_h);

  const RgbImage& pixels() const { return pixels_; }
  int size() const { return pixels_.width(); }
  double scale_h() const { return scale_h_; }

  bool operator==(const VirtualImage&) const = default;

 private:
  RgbImage pixels_;
  double scale_h_ = 0.0;
};

class DirtMask {
 public:
  DirtMask() = default;
  DirtMask(int width, int height);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t count() const { return count_; }
  bool empty() const { return count_ == 0; }

  bool test(int x, int y) const {
    return bits_[static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
                 static_cast<std::size_t>(x)] != 0;
  }
  void set(int x, int y, bool value = true);

  bool operator==(const DirtMask&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> bits_;
  std::size_t count_ = 0;
};

}  // namespace tabletop
