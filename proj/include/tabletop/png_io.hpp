#pragma once

#include <filesystem>

#include "tabletop/image.hpp"

namespace tabletop {

// 8-bit RGB PNG. Channels are rounded to the nearest 1/255 on write.
void write_png(const std::filesystem::path& path, const RgbImage& img);

// Accepts gray, gray+alpha, RGB and RGBA PNGs of any bit depth; alpha is dropped.
// Throws MissingFile when the path does not exist, IoError on decode failure.
RgbImage read_png(const std::filesystem::path& path);

}  // namespace tabletop
