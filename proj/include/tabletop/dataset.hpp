#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tabletop/image.hpp"
#include "tabletop/simulator.hpp"
#include "tabletop/tpgmm.hpp"
#include "tabletop/trajectory.hpp"

namespace tabletop {

inline constexpr int kManifestVersion = 1;
// Sample index of the intermediate frame origin.
inline constexpr std::size_t kMidSample = (kTrajectoryLength - 1) / 2;

struct Demonstration {
  VirtualImage image;  // empty when the dataset was loaded without images
  Trajectory trajectory;
  DirtType dirt_type = DirtType::Marker;
  // Frames at samples 0, kMidSample and the last sample.
  std::vector<ReferenceFrame> frames;

  // Checks the length invariant and derives the frames.
  static Demonstration make(VirtualImage image, Trajectory trajectory, DirtType type);
  TpDemo tp_demo() const;
  bool operator==(const Demonstration& other) const;
};

struct Dataset {
  double scale_h = 240.0;
  int image_size = 240;
  std::string colors;                // optional color config reference
  std::optional<std::uint64_t> seed;  // provenance of generated data
  std::vector<Demonstration> samples;

  bool operator==(const Dataset& other) const;
};

// Writes <dir>/manifest.json, <dir>/imgs/NNN.png and <dir>/traj/NNN.csv.
void save_dataset(const Dataset& ds, const std::filesystem::path& dir);

// Streams samples to disk one at a time; finish() writes the manifest.
// File names are padded for `expected_count` samples.
class DatasetWriter {
 public:
  DatasetWriter(std::filesystem::path dir, double scale_h, int image_size, std::size_t expected_count,
                std::string colors = {}, std::optional<std::uint64_t> seed = {});
  ~DatasetWriter();
  DatasetWriter(const DatasetWriter&) = delete;
  DatasetWriter& operator=(const DatasetWriter&) = delete;

  void add(const Demonstration& d);
  void finish();
  std::size_t size() const { return count_; }

 private:
  struct State;
  std::filesystem::path dir_;
  double scale_h_;
  int image_size_;
  std::size_t expected_;
  std::string colors_;
  std::optional<std::uint64_t> seed_;
  std::unique_ptr<State> state_;
  std::size_t count_ = 0;
  bool finished_ = false;
};

struct LoadOptions {
  bool images = true;
};

// Accepts a manifest file or the directory holding manifest.json.
Dataset load_dataset(const std::filesystem::path& path, const LoadOptions& options = {});

enum class DemoKind { Marker, Lentils, Mixed };
DemoKind parse_demo_kind(std::string_view name);  // marker | lentils | mixed

struct SyntheticConfig {
  DemoKind kind = DemoKind::Mixed;
  double frame_noise = 0.01;  // std of each frame-origin coordinate, meters
  double path_noise = 0.003;  // std of the smooth path perturbation amplitudes, meters
  SceneParams scene;
  bool render_images = true;
};

// Smooth curve through b1 (t = 0), b2 (t = kMidSample / (n - 1)) and b3
// (t = 1): one quadratic per half, sharing the tangent b3 - b1 at b2.
// `wobble` holds per-axis amplitudes of sin(k pi t), k = 1..3, added on top.
Trajectory via_point_curve(const Eigen::Vector2d& b1, const Eigen::Vector2d& b2, const Eigen::Vector2d& b3,
                           const std::array<Eigen::Vector2d, 3>& wobble = {Eigen::Vector2d::Zero(),
                                                                           Eigen::Vector2d::Zero(),
                                                                           Eigen::Vector2d::Zero()});

Dataset generate_synthetic_demos(std::size_t n, const SyntheticConfig& config, std::uint64_t seed);

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
};

// Pure function of (sample count, fraction, seed). Indices keep ascending order.
Split split_dataset(std::size_t n_samples, double validation_fraction, std::uint64_t seed);

std::vector<TpDemo> tp_demos(const Dataset& ds, std::span<const std::size_t> indices);

}  // namespace tabletop
