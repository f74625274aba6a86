#include "tabletop/augment.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

#include "tabletop/dataset.hpp"
#include "tabletop/error.hpp"
#include "tabletop/parallel.hpp"

namespace tabletop {
namespace {

// Light or dark gray with a slight cool tint. Blue never drops below red, which
// keeps every texel out of the red and brown dirt boxes.
Rgb neutral_color(Rng& rng, double lo, double hi) {
  const double v = rng.uniform(lo, hi);
  const double tint = rng.uniform(0.0, 0.08);
  return {static_cast<float>(v - tint), static_cast<float>(v - 0.5 * tint), static_cast<float>(v)};
}

PerlinParams texture_params(Rng& rng, const PerlinBackgroundOptions& o, double lo, double hi) {
  PerlinParams p;
  p.frequency = o.frequency;
  p.octaves = o.octaves;
  p.persistence = o.persistence;
  p.seed = rng.next_u64();
  p.color_a = neutral_color(rng, lo, hi);
  p.color_b = neutral_color(rng, lo, hi);
  return p;
}

Quad shifted(const Quad& q, PixelShift s) {
  Quad out = q;
  for (auto& v : out) {
    v.x += s.dx;
    v.y += s.dy;
  }
  return out;
}

}  // namespace

ChannelDeltas draw_illumination(Rng& rng) {
  ChannelDeltas d{};
  for (auto& v : d) v = rng.uniform(-kIlluminationRange, kIlluminationRange);
  return d;
}

VirtualImage apply_illumination(const VirtualImage& img, const ChannelDeltas& deltas) {
  RgbImage px = img.pixels();
  auto data = px.data();
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double v = static_cast<double>(data[i]) + deltas[i % 3];
    data[i] = static_cast<float>(std::clamp(v, 0.0, 1.0));
  }
  return VirtualImage(std::move(px), img.scale_h());
}

VirtualImage jitter_illumination(const VirtualImage& img, Rng& rng) {
  return apply_illumination(img, draw_illumination(rng));
}

ShiftRange admissible_shifts(const DirtMask& mask) {
  if (mask.empty()) throw Error(ErrorCode::EmptyDirtMask, "cannot translate a sample without dirt");
  int x0 = mask.width(), x1 = -1, y0 = mask.height(), y1 = -1;
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (!mask.test(x, y)) continue;
      x0 = std::min(x0, x);
      x1 = std::max(x1, x);
      y0 = std::min(y0, y);
      y1 = std::max(y1, y);
    }
  }
  return {-x0, mask.width() - 1 - x1, -y0, mask.height() - 1 - y1};
}

VirtualImage shift_image(const VirtualImage& img, PixelShift shift, Rgb fill) {
  const RgbImage& src = img.pixels();
  RgbImage out(src.width(), src.height(), fill);
  for (int y = 0; y < src.height(); ++y) {
    for (int x = 0; x < src.width(); ++x) {
      const int sx = x - shift.dx;
      const int sy = y - shift.dy;
      if (src.contains(sx, sy)) out.set_pixel(x, y, src.pixel(sx, sy));
    }
  }
  return VirtualImage(std::move(out), img.scale_h());
}

DirtMask shift_mask(const DirtMask& mask, PixelShift shift) {
  DirtMask out(mask.width(), mask.height());
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (!mask.test(x, y)) continue;
      const int tx = x + shift.dx;
      const int ty = y + shift.dy;
      if (tx >= 0 && ty >= 0 && tx < mask.width() && ty < mask.height()) out.set(tx, ty);
    }
  }
  return out;
}

Trajectory shift_trajectory(const Trajectory& traj, PixelShift shift, double scale_h) {
  if (!(scale_h > 0.0)) throw Error(ErrorCode::NonPositiveScale, "scale_h must be positive");
  return traj.translated(shift.dy / scale_h, shift.dx / scale_h);
}

TranslatedSample translate_sample(const VirtualImage& img, const Trajectory& traj, const DirtMask& mask,
                                  Rng& rng, Rgb fill) {
  const ShiftRange r = admissible_shifts(mask);
  PixelShift s;
  s.dx = static_cast<int>(rng.uniform_int(r.dx_min, r.dx_max));
  s.dy = static_cast<int>(rng.uniform_int(r.dy_min, r.dy_max));
  return {shift_image(img, s, fill), shift_trajectory(traj, s, img.scale_h()), shift_mask(mask, s), s};
}

bool point_in_polygon(const Quad& quad, PixelPoint p) {
  bool inside = false;
  for (std::size_t i = 0, j = quad.size() - 1; i < quad.size(); j = i++) {
    const auto& a = quad[i];
    const auto& b = quad[j];
    if ((a.y > p.y) != (b.y > p.y)) {
      const double x_cross = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
      if (p.x < x_cross) inside = !inside;
    }
  }
  return inside;
}

VirtualImage perlin_background(const VirtualImage& img, const DirtMask& mask, const Quad& table, Rng& rng,
                               const PerlinBackgroundOptions& options) {
  const int s = img.size();
  if (mask.width() != s || mask.height() != s) {
    throw Error(ErrorCode::InvalidArgument, "mask and image sizes differ");
  }
  if (mask.count() == static_cast<std::size_t>(s) * static_cast<std::size_t>(s)) return img;
  for (int y = 0; y < s; ++y) {
    for (int x = 0; x < s; ++x) {
      if (mask.test(x, y) && !point_in_polygon(table, {x + 0.5, y + 0.5})) {
        throw Error(ErrorCode::MaskOutsideTable, fmt::format("dirt pixel ({}, {}) lies outside the table", x, y));
      }
    }
  }

  const double jitter = options.vertex_jitter * s;
  Quad poly = table;
  for (auto& v : poly) {
    v.x += rng.uniform(-jitter, jitter);
    v.y += rng.uniform(-jitter, jitter);
  }
  const RgbImage table_tex = perlin_texture(s, texture_params(rng, options, 0.55, 0.95));
  const RgbImage back_tex = perlin_texture(s, texture_params(rng, options, 0.10, 0.45));

  RgbImage out = img.pixels();
  for (int y = 0; y < s; ++y) {
    for (int x = 0; x < s; ++x) {
      if (mask.test(x, y)) continue;
      const bool on_table = point_in_polygon(poly, {x + 0.5, y + 0.5});
      out.set_pixel(x, y, on_table ? table_tex.pixel(x, y) : back_tex.pixel(x, y));
    }
  }
  return VirtualImage(std::move(out), img.scale_h());
}

Quad default_table_quad(double scale_h) {
  const TableBounds t;
  return {table_to_virtual({t.x_min, t.y_min}, scale_h), table_to_virtual({t.x_min, t.y_max}, scale_h),
          table_to_virtual({t.x_max, t.y_max}, scale_h), table_to_virtual({t.x_max, t.y_min}, scale_h)};
}

Demonstration augment_one(const Demonstration& demo, const AugmentPlan& plan, const AugmentContext& ctx,
                          std::size_t sample_index, int copy_index) {
  const int total = 1 + plan.n_translate_illum + plan.n_perlin;
  if (copy_index < 0 || copy_index >= total) throw Error(ErrorCode::InvalidArgument, "copy index out of range");
  if (copy_index == 0) return demo;
  if (demo.image.pixels().empty()) throw Error(ErrorCode::InvalidArgument, "sample has no image");

  Rng rng(derive_seed(plan.master_seed, sample_index, static_cast<std::uint64_t>(copy_index)));
  const DirtMask mask = segment_dirt(demo.image, ctx.colors);
  const VirtualImage lit = jitter_illumination(demo.image, rng);
  TranslatedSample t = translate_sample(lit, demo.trajectory, mask, rng, ctx.fill);

  VirtualImage image = std::move(t.image);
  if (copy_index > plan.n_translate_illum) {
    const Quad table = ctx.table ? *ctx.table : default_table_quad(demo.image.scale_h());
    image = perlin_background(image, t.mask, shifted(table, t.shift), rng, ctx.perlin);
  }
  return Demonstration::make(std::move(image), std::move(t.trajectory), demo.dirt_type);
}

void augment_dataset_visit(const Dataset& ds, const AugmentPlan& plan, const AugmentContext& ctx,
                           const std::function<void(std::size_t, Demonstration&&)>& sink) {
  if (plan.n_translate_illum < 0 || plan.n_perlin < 0) {
    throw Error(ErrorCode::InvalidArgument, "augmentation counts must be >= 0");
  }
  const auto copies = static_cast<std::size_t>(1 + plan.n_translate_illum + plan.n_perlin);
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    std::vector<Demonstration> batch(copies);
    try {
      parallel_for(copies, [&](std::size_t c) {
        batch[c] = augment_one(ds.samples[i], plan, ctx, i, static_cast<int>(c));
      });
    } catch (const Error& e) {
      rethrow_with_context(e, fmt::format("sample {}", i));
    }
    for (auto& d : batch) sink(i, std::move(d));
  }
}

Dataset augment_dataset(const Dataset& ds, const AugmentPlan& plan, const AugmentContext& ctx) {
  Dataset out;
  out.scale_h = ds.scale_h;
  out.image_size = ds.image_size;
  out.colors = ds.colors;
  out.seed = ds.seed;
  out.samples.reserve(ds.samples.size() * static_cast<std::size_t>(1 + std::max(0, plan.n_translate_illum) +
                                                                   std::max(0, plan.n_perlin)));
  augment_dataset_visit(ds, plan, ctx, [&](std::size_t, Demonstration&& d) { out.samples.push_back(std::move(d)); });
  return out;
}

}  // namespace tabletop
