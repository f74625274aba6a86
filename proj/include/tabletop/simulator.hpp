#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "tabletop/geometry.hpp"
#include "tabletop/image.hpp"
#include "tabletop/perception.hpp"
#include "tabletop/rng.hpp"
#include "tabletop/tpgmm.hpp"
#include "tabletop/trajectory.hpp"

namespace tabletop {

// Axis-aligned table rectangle, meters.
struct TableBounds {
  double x_min = -0.75;
  double x_max = -0.25;
  double y_min = -5.0 / 12.0;
  double y_max = 1.0 / 12.0;

  bool contains(const Eigen::Vector2d& p) const {
    return p.x() >= x_min && p.x() <= x_max && p.y() >= y_min && p.y() <= y_max;
  }
  Eigen::Vector2d clamp(const Eigen::Vector2d& p) const;
};

struct SceneParams {
  TableBounds table;
  TablePoint target_corner{-0.25, 1.0 / 12.0};
  double sponge_radius = 0.04;
  int image_size = 240;
  double scale_h = 240.0;

  // Marker stroke: four waypoints joined by a Catmull-Rom spline.
  double stroke_length_min = 0.10;
  double stroke_length_max = 0.22;
  double stroke_bend = 0.012;  // lateral waypoint jitter, meters
  double stroke_width = 0.012;

  // Lentil cluster.
  int n_lentils = 60;
  double cluster_sigma = 0.015;
  double lentil_radius_px = 1.5;

  // Longest particle push sub-step, meters.
  double push_step = 0.005;

  Rgb table_color{0.92f, 0.92f, 0.90f};
  Rgb background_color{0.22f, 0.22f, 0.26f};
  Rgb marker_color{0.85f, 0.10f, 0.10f};
  Rgb lentil_color{0.60f, 0.35f, 0.10f};

  void validate() const;  // throws ParamsOutOfBounds
};

struct Scene {
  DirtType kind = DirtType::Marker;
  SceneParams params;
  // Marker ink, row-major over the S x S virtual pixel grid, values in [0, 1].
  std::vector<float> ink;
  // Lentil positions, meters.
  std::vector<Eigen::Vector2d> particles;

  bool operator==(const Scene& other) const;
};

Scene spawn_scene(DirtType kind, const SceneParams& params, Rng& rng);
// Blank table of the given kind (no ink, no particles).
Scene empty_scene(DirtType kind, const SceneParams& params);

VirtualImage render_scene(const Scene& scene);

// Sweeps the sponge disc along the trajectory. The step overload lets callers
// pick the particle push sub-step; the default uses params.push_step.
Scene execute_trajectory(Scene scene, const Trajectory& traj);
void sweep(Scene& scene, const Trajectory& traj, double push_step);

std::size_t ink_area(const Scene& scene);  // cells with ink > 0
double ink_mass(const Scene& scene);       // sum of ink

// Target corner in virtual pixels.
PixelPoint target_pixel(const SceneParams& params);
// Sum over dirty pixels of the distance from the pixel center to o.
double dirt_distance(const DirtMask& mask, PixelPoint o);

struct MetricSeries {
  std::vector<double> values;  // percent, one per repetition
};

MetricSeries metric_m1(std::span<const double> areas);  // throws ZeroInitialArea
MetricSeries metric_m2(std::span<const DirtMask> masks, PixelPoint o);  // throws ZeroInitialDistance
MetricSeries metric_m2_from_distances(std::span<const double> distances);

struct Pipeline {
  const FramePredictor* predictor = nullptr;
  const TpGmmModel* model = nullptr;
  ColorConfig colors = ColorConfig::defaults();
};

struct Episode {
  MetricSeries series;
  std::vector<double> raw;  // A(r) or D(r)
  // Executed trajectory per repetition; empty when the table looked clean.
  std::vector<std::optional<Trajectory>> trajectories;
  Scene initial_scene;
  Scene final_scene;
};

Episode run_episode(Scene scene, const Pipeline& pipeline, int n_reps = 5);

// Runs episodes with seeds derived from (seed, episode index), in parallel.
std::vector<Episode> run_episodes(DirtType kind, const SceneParams& params, const Pipeline& pipeline,
                                  int n_episodes, int n_reps, std::uint64_t seed);

}  // namespace tabletop
