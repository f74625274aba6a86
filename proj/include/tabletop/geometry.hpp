#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include "tabletop/image.hpp"

namespace tabletop {

// Continuous pixel coordinate: x is the column axis, y the row axis.
struct PixelPoint {
  double x = 0.0;
  double y = 0.0;

  Eigen::Vector2d vec() const { return {x, y}; }
  bool operator==(const PixelPoint&) const = default;
};

// Planar point in the robot/table frame, meters.
struct TablePoint {
  double x = 0.0;
  double y = 0.0;

  Eigen::Vector2d vec() const { return {x, y}; }
  static TablePoint from(const Eigen::Vector2d& v) { return {v.x(), v.y()}; }
  bool operator==(const TablePoint&) const = default;
};

struct Correspondence {
  PixelPoint source;
  PixelPoint target;
};

// Projective map from a source image plane to the virtual plane, stored with
// its bottom-right entry equal to 1. When that entry vanishes relative to the
// matrix norm the map is scaled to unit Frobenius norm instead and flagged.
class Homography {
 public:
  Homography() : m_(Eigen::Matrix3d::Identity()) {}

  // Normalizes and validates `m`; throws DegenerateConfiguration if singular.
  static Homography from_matrix(const Eigen::Matrix3d& m);

  const Eigen::Matrix3d& matrix() const { return m_; }
  bool frobenius_normalized() const { return frobenius_normalized_; }

  Homography inverse() const;

 private:
  Eigen::Matrix3d m_;
  bool frobenius_normalized_ = false;
};

// Direct linear transform with Hartley normalization. Needs at least four
// pairs with no three source (or target) points collinear.
Homography estimate_homography(std::span<const Correspondence> pairs);

PixelPoint apply_homography(const Homography& h, PixelPoint p);

// Table meters to virtual pixels: ((y + 2/3) h, (x + 1) h).
PixelPoint table_to_virtual(TablePoint p, double scale_h);
TablePoint virtual_to_table(PixelPoint q, double scale_h);

struct WarpOptions {
  Rgb fill{0.f, 0.f, 0.f};
  // Pixels per meter of the output; 0 means "same as out_size".
  double scale_h = 0.0;
};

// Inverse-mapping warp with bilinear sampling.
VirtualImage warp_image(const RgbImage& src, const Homography& h, int out_size,
                        const WarpOptions& options = {});

// Calibration pairs: one `sx sy tx ty` per line, `#` starts a comment.
std::vector<Correspondence> read_correspondences(const std::filesystem::path& path);

// Homography model file: the nine entries row-major, three per line.
void write_homography(const std::filesystem::path& path, const Homography& h);
Homography read_homography(const std::filesystem::path& path);

}  // namespace tabletop
