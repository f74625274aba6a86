#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>

#include "tabletop/geometry.hpp"
#include "tabletop/image.hpp"
#include "tabletop/perception.hpp"
#include "tabletop/perlin.hpp"
#include "tabletop/rng.hpp"
#include "tabletop/trajectory.hpp"

namespace tabletop {

struct Dataset;
struct Demonstration;

inline constexpr double kIlluminationRange = 0.15;

using ChannelDeltas = std::array<double, 3>;

ChannelDeltas draw_illumination(Rng& rng);
// Adds one offset per channel to every pixel and clamps to [0, 1].
VirtualImage apply_illumination(const VirtualImage& img, const ChannelDeltas& deltas);
VirtualImage jitter_illumination(const VirtualImage& img, Rng& rng);

struct PixelShift {
  int dx = 0;  // columns
  int dy = 0;  // rows
  bool operator==(const PixelShift&) const = default;
};

// Closed ranges of integer shifts that keep every mask pixel inside the image.
struct ShiftRange {
  int dx_min = 0, dx_max = 0;
  int dy_min = 0, dy_max = 0;
};

ShiftRange admissible_shifts(const DirtMask& mask);  // throws EmptyDirtMask

VirtualImage shift_image(const VirtualImage& img, PixelShift shift, Rgb fill = {});
DirtMask shift_mask(const DirtMask& mask, PixelShift shift);
// A column shift moves table y, a row shift moves table x (the virtual-image
// axis pairing), each by pixels / scale_h meters.
Trajectory shift_trajectory(const Trajectory& traj, PixelShift shift, double scale_h);

struct TranslatedSample {
  VirtualImage image;
  Trajectory trajectory;
  DirtMask mask;
  PixelShift shift;
};

TranslatedSample translate_sample(const VirtualImage& img, const Trajectory& traj,
                                  const DirtMask& mask, Rng& rng, Rgb fill = {});

using Quad = std::array<PixelPoint, 4>;

bool point_in_polygon(const Quad& quad, PixelPoint p);

struct PerlinBackgroundOptions {
  double vertex_jitter = 0.05;  // fraction of the image side, uniform per vertex
  int frequency = 8;
  int octaves = 3;
  double persistence = 0.5;
};

// Keeps the dirt pixels, paints the (jittered) table quad with one Perlin
// texture and everything else with another. Texture palettes are desaturated
// so they never fall inside the dirt color boxes.
VirtualImage perlin_background(const VirtualImage& img, const DirtMask& mask, const Quad& table,
                               Rng& rng, const PerlinBackgroundOptions& options = {});

struct AugmentPlan {
  int n_translate_illum = 10;
  int n_perlin = 10;
  std::uint64_t master_seed = 0;
};

struct AugmentContext {
  ColorConfig colors = ColorConfig::defaults();
  // Table outline in virtual pixels; the default table at the sample's scale when unset.
  std::optional<Quad> table;
  Rgb fill{0.f, 0.f, 0.f};
  PerlinBackgroundOptions perlin;
};

// Table outline for the default 0.5 m table at the given pixel scale.
Quad default_table_quad(double scale_h);

// Emits, per input sample in order: the original, n_translate_illum
// illumination+translation copies, then n_perlin copies that additionally get
// a Perlin background. Each copy's seed depends only on (master_seed, sample
// index, copy index). The sink receives (source index, augmented sample).
void augment_dataset_visit(const Dataset& ds, const AugmentPlan& plan, const AugmentContext& ctx,
                           const std::function<void(std::size_t, Demonstration&&)>& sink);

Dataset augment_dataset(const Dataset& ds, const AugmentPlan& plan, const AugmentContext& ctx);

// Single augmented copy; copy_index 0 is the original, 1..n_ti illumination +
// translation, the remainder Perlin.
Demonstration augment_one(const Demonstration& demo, const AugmentPlan& plan,
                          const AugmentContext& ctx, std::size_t sample_index, int copy_index);

}  // namespace tabletop
