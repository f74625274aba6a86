#pragma once

#include <cstddef>
#include <filesystem>
#include <string_view>
#include <vector>

namespace tabletop {

// Demonstrations and generated motions are sampled at this many time steps.
inline constexpr std::size_t kTrajectoryLength = 200;

enum class DirtType { Marker, Lentils };

std::string_view dirt_type_name(DirtType type) noexcept;  // "marker" / "lentils"
DirtType parse_dirt_type(std::string_view name);          // throws ParseError

struct TrajectorySample {
  double t = 0.0;  // normalized time
  double x = 0.0;  // meters
  double y = 0.0;  // meters

  bool operator==(const TrajectorySample&) const = default;
};

// Planar end-effector path on a normalized time grid.
class Trajectory {
 public:
  Trajectory() = default;
  // Throws InvariantViolation unless there are at least two finite samples with
  // t strictly increasing from exactly 0 to exactly 1.
  explicit Trajectory(std::vector<TrajectorySample> samples);

  // Uniform time grid t_n = n / (count - 1).
  static std::vector<double> uniform_times(std::size_t count);

  std::size_t size() const { return samples_.size(); }
  const TrajectorySample& operator[](std::size_t i) const { return samples_[i]; }
  const std::vector<TrajectorySample>& samples() const { return samples_; }

  // Adds (dx, dy) meters to every sample.
  Trajectory translated(double dx, double dy) const;

  bool operator==(const Trajectory&) const = default;

 private:
  std::vector<TrajectorySample> samples_;
};

// CSV with header `n,t,x,y`, values printed with 17 significant digits.
void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj);
Trajectory read_trajectory_csv(const std::filesystem::path& path);

// Root-mean-square Euclidean distance between equally long trajectories.
double rms_distance(const Trajectory& a, const Trajectory& b);

}  // namespace tabletop
