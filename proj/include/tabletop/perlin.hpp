#pragma once

#include <array>
#include <cstdint>

#include "tabletop/image.hpp"

namespace tabletop {

// Classic 2D gradient noise over an integer lattice with a seed-keyed
// permutation table and quintic fade. Values lie in [-1, 1] and vanish on
// lattice points.
class PerlinNoise {
 public:
  explicit PerlinNoise(std::uint64_t seed);

  double operator()(double x, double y) const;

 private:
  std::array<std::uint8_t, 512> perm_{};
};

// One-shot convenience; builds the permutation table on every call.
double perlin2(double x, double y, std::uint64_t seed);

struct PerlinParams {
  int frequency = 8;         // lattice cells per image side, first octave
  int octaves = 3;
  double persistence = 0.5;  // amplitude factor between octaves
  std::uint64_t seed = 0;
  Rgb color_a{0.f, 0.f, 0.f};
  Rgb color_b{1.f, 1.f, 1.f};

  void validate() const;  // throws InvalidArgument
};

// Fractal sum of octaves rescaled to [0, 1], then mapped linearly from
// color_a (0) to color_b (1).
RgbImage perlin_texture(int size, const PerlinParams& params);

}  // namespace tabletop
