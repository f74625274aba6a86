#include "tabletop/simulator.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "tabletop/error.hpp"
#include "tabletop/parallel.hpp"

namespace tabletop {
namespace {

using Vec2 = Eigen::Vector2d;

void require(bool ok, const char* what) {
  if (!ok) throw Error(ErrorCode::ParamsOutOfBounds, what);
}

// Squared distance from p to segment ab.
double segment_distance2(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double len2 = ab.squaredNorm();
  double t = len2 > 0.0 ? (p - a).dot(ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return (a + t * ab - p).squaredNorm();
}

Vec2 to_pixel(const Vec2& table, double scale_h) {
  const PixelPoint q = table_to_virtual(TablePoint::from(table), scale_h);
  return q.vec();
}

Vec2 catmull_rom(const Vec2& p0, const Vec2& p1, const Vec2& p2, const Vec2& p3, double t) {
  const double t2 = t * t;
  const double t3 = t2 * t;
  return 0.5 * ((2.0 * p1) + (p2 - p0) * t + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * t2 +
                (3.0 * p1 - p0 - 3.0 * p2 + p3) * t3);
}

std::vector<Vec2> stroke_polyline(const std::array<Vec2, 4>& w) {
  constexpr int kPerSegment = 32;
  const Vec2 head = 2.0 * w[0] - w[1];
  const Vec2 tail = 2.0 * w[3] - w[2];
  const std::array<Vec2, 6> c{head, w[0], w[1], w[2], w[3], tail};
  std::vector<Vec2> out;
  out.reserve(3 * kPerSegment + 1);
  for (int s = 0; s < 3; ++s) {
    for (int k = 0; k < kPerSegment; ++k) {
      out.push_back(catmull_rom(c[s], c[s + 1], c[s + 2], c[s + 3], static_cast<double>(k) / kPerSegment));
    }
  }
  out.push_back(w[3]);
  return out;
}

// Visits every cell whose pixel center lies within radius_px of the pixel-space
// segment ab.
template <typename F>
void for_cells_near_segment(int size, const Vec2& a, const Vec2& b, double radius_px, F&& f) {
  const double r2 = radius_px * radius_px;
  const int c0 = std::max(0, static_cast<int>(std::floor(std::min(a.x(), b.x()) - radius_px - 0.5)));
  const int c1 = std::min(size - 1, static_cast<int>(std::ceil(std::max(a.x(), b.x()) + radius_px - 0.5)));
  const int r0 = std::max(0, static_cast<int>(std::floor(std::min(a.y(), b.y()) - radius_px - 0.5)));
  const int r1 = std::min(size - 1, static_cast<int>(std::ceil(std::max(a.y(), b.y()) + radius_px - 0.5)));
  for (int row = r0; row <= r1; ++row) {
    for (int col = c0; col <= c1; ++col) {
      if (segment_distance2(Vec2(col + 0.5, row + 0.5), a, b) <= r2) f(col, row);
    }
  }
}

Scene spawn_marker(const SceneParams& p, Rng& rng) {
  Scene scene = empty_scene(DirtType::Marker, p);
  const double length = rng.uniform(p.stroke_length_min, p.stroke_length_max);
  const double theta = rng.uniform(0.0, std::numbers::pi);
  const Vec2 dir(std::cos(theta), std::sin(theta));
  const Vec2 normal(-dir.y(), dir.x());
  // Catmull-Rom overshoot stays well inside this margin for bounded jitter.
  const double margin = 0.5 * length + 3.0 * p.stroke_bend + p.stroke_width;
  const auto& t = p.table;
  require(t.x_max - t.x_min > 2.0 * margin && t.y_max - t.y_min > 2.0 * margin,
          "table too small for the marker stroke");
  const Vec2 center(rng.uniform(t.x_min + margin, t.x_max - margin),
                    rng.uniform(t.y_min + margin, t.y_max - margin));
  std::array<Vec2, 4> waypoints;
  constexpr std::array<double, 4> kStations{-0.5, -1.0 / 6.0, 1.0 / 6.0, 0.5};
  for (std::size_t k = 0; k < 4; ++k) {
    const double lateral = std::clamp(rng.normal(0.0, p.stroke_bend), -2.0 * p.stroke_bend, 2.0 * p.stroke_bend);
    waypoints[k] = center + kStations[k] * length * dir + lateral * normal;
  }
  const auto line = stroke_polyline(waypoints);
  const double half_width_px = 0.5 * p.stroke_width * p.scale_h;
  const auto size = static_cast<std::size_t>(p.image_size);
  for (std::size_t k = 0; k + 1 < line.size(); ++k) {
    for_cells_near_segment(p.image_size, to_pixel(line[k], p.scale_h), to_pixel(line[k + 1], p.scale_h),
                           half_width_px, [&](int col, int row) {
                             scene.ink[static_cast<std::size_t>(row) * size + static_cast<std::size_t>(col)] = 1.f;
                           });
  }
  return scene;
}

Scene spawn_lentils(const SceneParams& p, Rng& rng) {
  Scene scene = empty_scene(DirtType::Lentils, p);
  if (p.n_lentils == 0) return scene;
  const double reach = 3.0 * p.cluster_sigma;
  const auto& t = p.table;
  require(t.x_max - t.x_min > 2.0 * reach && t.y_max - t.y_min > 2.0 * reach,
          "table too small for the lentil cluster");
  const Vec2 center(rng.uniform(t.x_min + reach, t.x_max - reach), rng.uniform(t.y_min + reach, t.y_max - reach));
  scene.particles.reserve(static_cast<std::size_t>(p.n_lentils));
  while (scene.particles.size() < static_cast<std::size_t>(p.n_lentils)) {
    const Vec2 offset(rng.normal(0.0, p.cluster_sigma), rng.normal(0.0, p.cluster_sigma));
    if (offset.norm() <= reach) scene.particles.push_back(center + offset);
  }
  return scene;
}

// Moves every particle inside the disc at `c` to its boundary. `motion` picks
// the side for particles sitting exactly on the center.
void push_out(std::vector<Vec2>& particles, const Vec2& c, const Vec2& motion, double radius,
              const TableBounds& bounds) {
  for (auto& q : particles) {
    const Vec2 d = q - c;
    const double dist = d.norm();
    if (dist >= radius) continue;
    Vec2 dir;
    if (dist > 1e-12) {
      dir = d / dist;
    } else if (motion.norm() > 1e-12) {
      dir = Vec2(-motion.y(), motion.x()).normalized();
    } else {
      dir = Vec2(1.0, 0.0);
    }
    q = bounds.clamp(c + radius * dir);
  }
}

}  // namespace

Vec2 TableBounds::clamp(const Vec2& p) const {
  return {std::clamp(p.x(), x_min, x_max), std::clamp(p.y(), y_min, y_max)};
}

void SceneParams::validate() const {
  const auto finite = [](double v) { return std::isfinite(v); };
  require(finite(table.x_min) && finite(table.x_max) && finite(table.y_min) && finite(table.y_max) &&
              table.x_min < table.x_max && table.y_min < table.y_max,
          "table bounds must be a non-empty rectangle");
  require(finite(target_corner.x) && finite(target_corner.y), "target corner must be finite");
  require(sponge_radius > 0.0 && finite(sponge_radius), "sponge radius must be positive");
  require(image_size > 0 && image_size <= 8192, "image size out of range");
  require(scale_h > 0.0 && finite(scale_h), "scale_h must be positive");
  require(stroke_length_min > 0.0 && stroke_length_min <= stroke_length_max, "invalid stroke length range");
  require(stroke_bend >= 0.0 && stroke_width > 0.0, "invalid stroke shape");
  require(n_lentils >= 0 && n_lentils <= 100000, "lentil count out of range");
  require(cluster_sigma >= 0.0 && lentil_radius_px > 0.0, "invalid lentil cluster shape");
  require(push_step > 0.0 && push_step <= 0.5 * sponge_radius, "push step must be in (0, sponge_radius / 2]");
}

bool Scene::operator==(const Scene& other) const {
  return kind == other.kind && ink == other.ink && particles == other.particles;
}

Scene empty_scene(DirtType kind, const SceneParams& params) {
  params.validate();
  Scene scene;
  scene.kind = kind;
  scene.params = params;
  if (kind == DirtType::Marker) {
    const auto s = static_cast<std::size_t>(params.image_size);
    scene.ink.assign(s * s, 0.f);
  }
  return scene;
}

Scene spawn_scene(DirtType kind, const SceneParams& params, Rng& rng) {
  params.validate();
  return kind == DirtType::Marker ? spawn_marker(params, rng) : spawn_lentils(params, rng);
}

VirtualImage render_scene(const Scene& scene) {
  const SceneParams& p = scene.params;
  const int s = p.image_size;
  RgbImage img(s, s, p.background_color);
  for (int row = 0; row < s; ++row) {
    for (int col = 0; col < s; ++col) {
      const TablePoint tp = virtual_to_table({col + 0.5, row + 0.5}, p.scale_h);
      if (p.table.contains(tp.vec())) img.set_pixel(col, row, p.table_color);
    }
  }
  if (scene.kind == DirtType::Marker) {
    for (int row = 0; row < s; ++row) {
      for (int col = 0; col < s; ++col) {
        const float a = scene.ink[static_cast<std::size_t>(row) * static_cast<std::size_t>(s) +
                                  static_cast<std::size_t>(col)];
        if (a <= 0.f) continue;
        const Rgb base = img.pixel(col, row);
        img.set_pixel(col, row,
                      {base.r + a * (p.marker_color.r - base.r), base.g + a * (p.marker_color.g - base.g),
                       base.b + a * (p.marker_color.b - base.b)});
      }
    }
  } else {
    const double rad = p.lentil_radius_px;
    for (const auto& q : scene.particles) {
      const Vec2 c = to_pixel(q, p.scale_h);
      const int c0 = std::max(0, static_cast<int>(std::floor(c.x() - rad - 0.5)));
      const int c1 = std::min(s - 1, static_cast<int>(std::ceil(c.x() + rad - 0.5)));
      const int r0 = std::max(0, static_cast<int>(std::floor(c.y() - rad - 0.5)));
      const int r1 = std::min(s - 1, static_cast<int>(std::ceil(c.y() + rad - 0.5)));
      for (int row = r0; row <= r1; ++row) {
        for (int col = c0; col <= c1; ++col) {
          if ((Vec2(col + 0.5, row + 0.5) - c).squaredNorm() <= rad * rad) img.set_pixel(col, row, p.lentil_color);
        }
      }
    }
  }
  return VirtualImage(std::move(img), p.scale_h);
}

void sweep(Scene& scene, const Trajectory& traj, double push_step) {
  if (traj.size() == 0) return;
  const SceneParams& p = scene.params;
  if (!(push_step > 0.0)) throw Error(ErrorCode::InvalidArgument, "push step must be positive");
  for (const auto& s : traj.samples()) {
    if (!std::isfinite(s.x) || !std::isfinite(s.y)) {
      throw Error(ErrorCode::InvalidArgument, "trajectory has non-finite samples");
    }
  }
  const auto point = [&](std::size_t k) { return Vec2(traj[k].x, traj[k].y); };

  if (scene.kind == DirtType::Marker) {
    const auto size = static_cast<std::size_t>(p.image_size);
    const double radius_px = p.sponge_radius * p.scale_h;
    const auto erase = [&](const Vec2& a, const Vec2& b) {
      for_cells_near_segment(p.image_size, to_pixel(a, p.scale_h), to_pixel(b, p.scale_h), radius_px,
                             [&](int col, int row) {
                               scene.ink[static_cast<std::size_t>(row) * size + static_cast<std::size_t>(col)] = 0.f;
                             });
    };
    if (traj.size() == 1) erase(point(0), point(0));
    for (std::size_t k = 0; k + 1 < traj.size(); ++k) erase(point(k), point(k + 1));
    return;
  }

  Vec2 prev = point(0);
  push_out(scene.particles, prev, traj.size() > 1 ? Vec2(point(1) - prev) : Vec2::Zero(), p.sponge_radius, p.table);
  for (std::size_t k = 1; k < traj.size(); ++k) {
    const Vec2 next = point(k);
    const Vec2 motion = next - prev;
    const auto steps = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(motion.norm() / push_step)));
    for (std::size_t s = 1; s <= steps; ++s) {
      const Vec2 c = prev + motion * (static_cast<double>(s) / static_cast<double>(steps));
      push_out(scene.particles, c, motion, p.sponge_radius, p.table);
    }
    prev = next;
  }
}

Scene execute_trajectory(Scene scene, const Trajectory& traj) {
  sweep(scene, traj, scene.params.push_step);
  return scene;
}

std::size_t ink_area(const Scene& scene) {
  return static_cast<std::size_t>(std::count_if(scene.ink.begin(), scene.ink.end(), [](float v) { return v > 0.f; }));
}

double ink_mass(const Scene& scene) {
  double total = 0.0;
  for (float v : scene.ink) total += v;
  return total;
}

PixelPoint target_pixel(const SceneParams& params) {
  return table_to_virtual(params.target_corner, params.scale_h);
}

double dirt_distance(const DirtMask& mask, PixelPoint o) {
  double total = 0.0;
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (mask.test(x, y)) total += std::hypot(x + 0.5 - o.x, y + 0.5 - o.y);
    }
  }
  return total;
}

MetricSeries metric_m1(std::span<const double> areas) {
  if (areas.empty() || !(areas.front() > 0.0)) {
    throw Error(ErrorCode::ZeroInitialArea, "initial dirty area is zero");
  }
  MetricSeries out;
  out.values.reserve(areas.size());
  out.values.push_back(100.0);
  for (std::size_t r = 1; r < areas.size(); ++r) out.values.push_back(100.0 * areas[r] / areas.front());
  return out;
}

MetricSeries metric_m2_from_distances(std::span<const double> distances) {
  if (distances.empty() || !(distances.front() > 0.0)) {
    throw Error(ErrorCode::ZeroInitialDistance, "initial dirt distance is zero");
  }
  MetricSeries out;
  out.values.reserve(distances.size());
  out.values.push_back(100.0);
  for (std::size_t r = 1; r < distances.size(); ++r) {
    out.values.push_back(100.0 * distances[r] / distances.front());
  }
  return out;
}

MetricSeries metric_m2(std::span<const DirtMask> masks, PixelPoint o) {
  std::vector<double> d;
  d.reserve(masks.size());
  for (const auto& m : masks) d.push_back(dirt_distance(m, o));
  return metric_m2_from_distances(d);
}

Episode run_episode(Scene scene, const Pipeline& pipeline, int n_reps) {
  if (n_reps < 1) throw Error(ErrorCode::InvalidArgument, "repetition count must be >= 1");
  if (pipeline.predictor == nullptr) throw Error(ErrorCode::InvalidArgument, "pipeline has no predictor");
  if (pipeline.model == nullptr) throw Error(ErrorCode::UntrainedModel, "pipeline has no model");
  pipeline.model->require_trained();

  Episode ep;
  ep.initial_scene = scene;
  const PixelPoint o = target_pixel(scene.params);
  for (int r = 1; r <= n_reps; ++r) {
    const VirtualImage view = render_scene(scene);
    if (scene.kind == DirtType::Marker) {
      ep.raw.push_back(static_cast<double>(ink_area(scene)));
    } else {
      ep.raw.push_back(dirt_distance(segment_dirt(view, pipeline.colors), o));
    }
    if (r == 1) {
      // Reject an episode that starts clean before spending any repetitions.
      if (scene.kind == DirtType::Marker) {
        metric_m1(ep.raw);
      } else {
        metric_m2_from_distances(ep.raw);
      }
    }

    try {
      const FramePrediction f = pipeline.predictor->predict(view);
      const auto frames = frames_from_origins(f.b1.vec(), f.b2.vec(), f.b3.vec());
      Trajectory traj = gmr_trajectory(*pipeline.model, frames);
      sweep(scene, traj, scene.params.push_step);
      ep.trajectories.emplace_back(std::move(traj));
    } catch (const Error& e) {
      if (e.code() == ErrorCode::EmptyDirtMask) {
        ep.trajectories.emplace_back(std::nullopt);
        continue;
      }
      rethrow_with_context(e, fmt::format("repetition {}", r));
    }
  }
  ep.series = scene.kind == DirtType::Marker ? metric_m1(ep.raw) : metric_m2_from_distances(ep.raw);
  ep.final_scene = std::move(scene);
  return ep;
}

std::vector<Episode> run_episodes(DirtType kind, const SceneParams& params, const Pipeline& pipeline,
                                  int n_episodes, int n_reps, std::uint64_t seed) {
  if (n_episodes < 0) throw Error(ErrorCode::InvalidArgument, "episode count must be >= 0");
  std::vector<Episode> out(static_cast<std::size_t>(n_episodes));
  parallel_for(out.size(), [&](std::size_t e) {
    Rng rng(derive_seed(seed, e, static_cast<std::uint64_t>(kind) + 1));
    try {
      out[e] = run_episode(spawn_scene(kind, params, rng), pipeline, n_reps);
    } catch (const Error& err) {
      rethrow_with_context(err, fmt::format("episode {}", e + 1));
    }
  });
  return out;
}

}  // namespace tabletop
