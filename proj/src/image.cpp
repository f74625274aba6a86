#include "tabletop/image.hpp"

#include <cmath>
#include <string>

#include "tabletop/error.hpp"

namespace tabletop {

RgbImage::RgbImage(int width, int height, Rgb fill) : width_(width), height_(height) {
  if (width < 0 || height < 0) throw Error(ErrorCode::InvalidArgument, "negative image size");
  data_.resize(static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3);
  for (std::size_t i = 0; i < data_.size(); i += 3) {
    data_[i] = fill.r;
    data_[i + 1] = fill.g;
    data_[i + 2] = fill.b;
  }
}

void quantize_to_8bit(RgbImage& img) {
  for (float& v : img.data()) {
    const float clamped = v < 0.f ? 0.f : (v > 1.f ? 1.f : v);
    v = static_cast<float>(std::lround(clamped * 255.f)) / 255.f;
  }
}

VirtualImage::VirtualImage(RgbImage pixels, double scale_h)
    : pixels_(std::move(pixels)), scale_h_(scale_h) {
  if (pixels_.empty() || pixels_.width() != pixels_.height()) {
    throw Error(ErrorCode::InvariantViolation,
                "virtual image must be square and non-empty, got " +
                    std::to_string(pixels_.width()) + "x" + std::to_string(pixels_.height()));
  }
  if (!(scale_h_ > 0.0) || !std::isfinite(scale_h_)) {
    throw Error(ErrorCode::InvariantViolation, "virtual image scale_h must be positive");
  }
  for (float v : pixels_.data()) {
    if (!(v >= 0.f && v <= 1.f)) {
      throw Error(ErrorCode::InvariantViolation, "virtual image channel outside [0,1]");
    }
  }
}

DirtMask::DirtMask(int width, int height)
    : width_(width),
      height_(height),
      bits_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), 0) {}

void DirtMask::set(int x, int y, bool value) {
  auto& bit = bits_[static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
                    static_cast<std::size_t>(x)];
  if (bit != 0 && !value) --count_;
  if (bit == 0 && value) ++count_;
  bit = value ? 1 : 0;
}

}  // namespace tabletop
