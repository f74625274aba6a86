#include "tabletop/perlin.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tabletop/error.hpp"
#include "tabletop/rng.hpp"

namespace tabletop {
namespace {

double fade(double t) { return t * t * t * (t * (t * 6.0 - 15.0) + 10.0); }

double lerp(double a, double b, double t) { return a + t * (b - a); }

// Eight gradients: axis-aligned and diagonal. The longest has norm sqrt(2),
// which bounds the noise magnitude by 1.
double grad(std::uint8_t hash, double x, double y) {
  switch (hash & 7u) {
    case 0: return x + y;
    case 1: return -x + y;
    case 2: return x - y;
    case 3: return -x - y;
    case 4: return x;
    case 5: return -x;
    case 6: return y;
    default: return -y;
  }
}

}  // namespace

PerlinNoise::PerlinNoise(std::uint64_t seed) {
  std::array<std::uint8_t, 256> p{};
  std::iota(p.begin(), p.end(), std::uint8_t{0});
  Rng rng(seed);
  for (int i = 255; i > 0; --i) {
    const auto j = static_cast<std::size_t>(rng.uniform_int(0, i));
    std::swap(p[static_cast<std::size_t>(i)], p[j]);
  }
  for (std::size_t i = 0; i < 512; ++i) perm_[i] = p[i & 255u];
}

double PerlinNoise::operator()(double x, double y) const {
  const double fx = std::floor(x);
  const double fy = std::floor(y);
  const auto xi = static_cast<std::size_t>(static_cast<std::int64_t>(fx) & 255);
  const auto yi = static_cast<std::size_t>(static_cast<std::int64_t>(fy) & 255);
  const double xf = x - fx;
  const double yf = y - fy;
  const double u = fade(xf);
  const double v = fade(yf);

  const std::uint8_t aa = perm_[perm_[xi] + yi];
  const std::uint8_t ab = perm_[perm_[xi] + yi + 1];
  const std::uint8_t ba = perm_[perm_[xi + 1] + yi];
  const std::uint8_t bb = perm_[perm_[xi + 1] + yi + 1];

  const double x1 = lerp(grad(aa, xf, yf), grad(ba, xf - 1.0, yf), u);
  const double x2 = lerp(grad(ab, xf, yf - 1.0), grad(bb, xf - 1.0, yf - 1.0), u);
  return lerp(x1, x2, v);
}

double perlin2(double x, double y, std::uint64_t seed) { return PerlinNoise(seed)(x, y); }

void PerlinParams::validate() const {
  if (frequency < 1) throw Error(ErrorCode::InvalidArgument, "perlin frequency must be >= 1");
  if (octaves < 1) throw Error(ErrorCode::InvalidArgument, "perlin octaves must be >= 1");
  if (!(persistence > 0.0 && persistence <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "perlin persistence must be in (0, 1]");
  }
}

RgbImage perlin_texture(int size, const PerlinParams& params) {
  if (size <= 0) throw Error(ErrorCode::InvalidArgument, "texture size must be positive");
  params.validate();
  const PerlinNoise noise(params.seed);

  double amplitude_sum = 0.0;
  for (int o = 0; o < params.octaves; ++o) {
    amplitude_sum += std::pow(params.persistence, o);
  }

  RgbImage out(size, size);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      double value = 0.0;
      double amplitude = 1.0;
      double cells = params.frequency;
      for (int o = 0; o < params.octaves; ++o) {
        const double px = (x + 0.5) * cells / size;
        const double py = (y + 0.5) * cells / size;
        // Offset octaves so their lattices do not share an origin.
        value += amplitude * noise(px + 17.31 * o, py + 41.17 * o);
        amplitude *= params.persistence;
        cells *= 2.0;
      }
      const double u = std::clamp(0.5 * (value / amplitude_sum + 1.0), 0.0, 1.0);
      for (int c = 0; c < 3; ++c) {
        out.at(x, y, c) = static_cast<float>(params.color_a[c] + u * (params.color_b[c] - params.color_a[c]));
      }
    }
  }
  return out;
}

}  // namespace tabletop
