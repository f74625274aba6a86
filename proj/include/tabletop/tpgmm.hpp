#pragma once

#include <Eigen/Core>
#include <array>
#include <filesystem>
#include <span>
#include <vector>

#include "tabletop/geometry.hpp"
#include "tabletop/trajectory.hpp"

namespace tabletop {

// Data points are (t, x, y): one time dimension followed by D = 2 spatial ones.
inline constexpr int kSpatialDim = 2;
inline constexpr int kPointDim = kSpatialDim + 1;

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

struct DataPoint {
  double t = 0.0;
  Eigen::Vector2d y = Eigen::Vector2d::Zero();

  Vec3 xi() const { return {t, y.x(), y.y()}; }
};

// Task frame: origin b and planar rotation A. Frames act on the spatial
// block only; time passes through unchanged.
struct ReferenceFrame {
  Eigen::Vector2d b = Eigen::Vector2d::Zero();
  Eigen::Matrix2d A = Eigen::Matrix2d::Identity();

  static ReferenceFrame identity() { return {}; }
  void validate() const;  // throws InvalidArgument unless A is a proper rotation

  Mat3 lifted_rotation() const;  // 1 (+) A
  Vec3 lifted_origin() const;    // (0, b)
  // Coordinates of a data point expressed in this frame.
  Vec3 to_local(const Vec3& xi) const;
};

struct Gaussian {
  Vec3 mean = Vec3::Zero();
  Mat3 cov = Mat3::Identity();
};

// Rotations from frame origins: A1 follows b2 - b1, A2 and A3 follow b3 - b2.
std::array<Eigen::Matrix2d, 3> frame_orientations(const Eigen::Vector2d& b1,
                                                  const Eigen::Vector2d& b2,
                                                  const Eigen::Vector2d& b3);

// Frames at b1, b2, b3 with the orientations above.
std::vector<ReferenceFrame> frames_from_origins(const Eigen::Vector2d& b1, const Eigen::Vector2d& b2,
                                                const Eigen::Vector2d& b3);

Gaussian project_gaussian(const ReferenceFrame& frame, const Vec3& z_mu, const Mat3& z_sigma);

// Precision-weighted product: cov = (sum inv(S_j))^-1, mean = cov * sum inv(S_j) m_j.
Gaussian fuse_gaussians(std::span<const Gaussian> parts);

double gaussian_log_density(const Vec3& x, const Gaussian& g);

class TpGmmModel {
 public:
  TpGmmModel() = default;
  TpGmmModel(std::vector<double> pi, std::vector<std::vector<Vec3>> z_mu,
             std::vector<std::vector<Mat3>> z_sigma);

  int components() const { return static_cast<int>(pi_.size()); }
  int frames() const { return pi_.empty() ? 0 : static_cast<int>(z_mu_.front().size()); }
  bool trained() const { return !pi_.empty(); }

  const std::vector<double>& pi() const { return pi_; }
  const Vec3& z_mu(int i, int j) const { return z_mu_[i][j]; }
  const Mat3& z_sigma(int i, int j) const { return z_sigma_[i][j]; }

  void require_trained() const;  // throws UntrainedModel

 private:
  std::vector<double> pi_;
  std::vector<std::vector<Vec3>> z_mu_;
  std::vector<std::vector<Mat3>> z_sigma_;
};

// Component i seen through the given frames, fused into one Gaussian.
Gaussian product_of_frame_gaussians(std::span<const ReferenceFrame> frames, const TpGmmModel& model,
                                    int component);

double mixture_log_density(const DataPoint& x, std::span<const ReferenceFrame> frames,
                           const TpGmmModel& model);
double mixture_density(const DataPoint& x, std::span<const ReferenceFrame> frames,
                       const TpGmmModel& model);

// One demonstration as seen by the model: time-stamped points plus the frames
// fixed for that demonstration.
struct TpDemo {
  std::vector<DataPoint> points;
  std::vector<ReferenceFrame> frames;
};

// Time normalized to the uniform grid on [0, 1]; frames from samples 0, mid, last.
TpDemo tp_demo_from_trajectory(const Trajectory& traj);

// Sum over all points of the log fused-Gaussian mixture density.
double log_likelihood(const TpGmmModel& model, std::span<const TpDemo> demos);

// Objective maximized by EM: sum_n log sum_i pi_i prod_j N(X_nj; Z_mu_ij, Z_sigma_ij),
// with X_nj the point expressed in frame j of its demonstration.
double em_objective(const TpGmmModel& model, std::span<const TpDemo> demos);

struct EmConfig {
  int max_iterations = 200;
  double relative_tolerance = 1e-6;
  double regularization = 1e-6;  // floor on every covariance eigenvalue
  double collapse_fraction = 1e-8;
};

struct EmResult {
  TpGmmModel model;
  // em_objective after initialization and after every iteration.
  std::vector<double> objective_history;
  int iterations = 0;
  bool converged = false;
  int reinitializations = 0;
  // Index into objective_history where the last reinitialization restarted
  // the monotone sequence (0 if none happened).
  std::size_t monotone_from = 0;
};

EmResult em_fit(std::span<const TpDemo> demos, int components, const EmConfig& config = {});

// Conditional expectation of space given time under the fused mixture.
Trajectory gmr_trajectory(const TpGmmModel& model, std::span<const ReferenceFrame> frames,
                          std::size_t n_samples = kTrajectoryLength);

// Time-conditioned component weights h_i(t) for pre-fused components.
std::vector<double> gmr_weights(const TpGmmModel& model, std::span<const Gaussian> fused, double t);

void write_model(const std::filesystem::path& path, const TpGmmModel& model);
TpGmmModel read_model(const std::filesystem::path& path);

}  // namespace tabletop
