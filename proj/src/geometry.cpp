#include "tabletop/geometry.hpp"

#include <fmt/format.h>

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "tabletop/error.hpp"
#include "tabletop/parallel.hpp"

namespace tabletop {
namespace {

constexpr double kCollinearArea = 1e-9;
constexpr double kVanishingCorner = 1e-9;
constexpr double kInfinityThreshold = 1e-12;

// Similarity taking the points' centroid to the origin and their mean
// distance from it to sqrt(2).
Eigen::Matrix3d hartley_transform(std::span<const Eigen::Vector2d> pts) {
  Eigen::Vector2d centroid = Eigen::Vector2d::Zero();
  for (const auto& p : pts) centroid += p;
  centroid /= static_cast<double>(pts.size());
  double mean_dist = 0.0;
  for (const auto& p : pts) mean_dist += (p - centroid).norm();
  mean_dist /= static_cast<double>(pts.size());
  if (!(mean_dist > 0.0) || !std::isfinite(mean_dist)) {
    throw Error(ErrorCode::DegenerateConfiguration, "correspondence points coincide");
  }
  const double s = std::sqrt(2.0) / mean_dist;
  Eigen::Matrix3d t;
  t << s, 0, -s * centroid.x(), 0, s, -s * centroid.y(), 0, 0, 1;
  return t;
}

std::vector<Eigen::Vector2d> transform_points(const Eigen::Matrix3d& t,
                                              std::span<const Eigen::Vector2d> pts) {
  std::vector<Eigen::Vector2d> out;
  out.reserve(pts.size());
  for (const auto& p : pts) out.push_back((t * p.homogeneous()).hnormalized());
  return out;
}

void require_no_collinear_triple(std::span<const Eigen::Vector2d> pts, const char* which) {
  const std::size_t n = pts.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      for (std::size_t k = j + 1; k < n; ++k) {
        const Eigen::Vector2d a = pts[j] - pts[i];
        const Eigen::Vector2d b = pts[k] - pts[i];
        const double area = 0.5 * std::abs(a.x() * b.y() - a.y() * b.x());
        if (area < kCollinearArea) {
          throw Error(ErrorCode::DegenerateConfiguration,
                      fmt::format("{} points {}, {}, {} are collinear", which, i, j, k));
        }
      }
    }
  }
}

float sample_bilinear(const RgbImage& src, double sx, double sy, int c, float fill) {
  // Sample positions are in index space (pixel centers at integers).
  const double max_x = src.width() - 1;
  const double max_y = src.height() - 1;
  if (!(sx >= 0.0 && sy >= 0.0 && sx <= max_x && sy <= max_y)) return fill;
  const int x0 = static_cast<int>(std::floor(sx));
  const int y0 = static_cast<int>(std::floor(sy));
  const int x1 = std::min(x0 + 1, src.width() - 1);
  const int y1 = std::min(y0 + 1, src.height() - 1);
  const double fx = sx - x0;
  const double fy = sy - y0;
  const double top = (1.0 - fx) * src.at(x0, y0, c) + fx * src.at(x1, y0, c);
  const double bottom = (1.0 - fx) * src.at(x0, y1, c) + fx * src.at(x1, y1, c);
  return static_cast<float>((1.0 - fy) * top + fy * bottom);
}

}  // namespace

Homography Homography::from_matrix(const Eigen::Matrix3d& m) {
  if (!m.allFinite()) throw Error(ErrorCode::DegenerateConfiguration, "homography has non-finite entries");
  const double norm = m.norm();
  if (!(norm > 0.0)) throw Error(ErrorCode::DegenerateConfiguration, "zero homography");

  Homography h;
  if (std::abs(m(2, 2)) >= kVanishingCorner * norm) {
    h.m_ = m / m(2, 2);
  } else {
    h.m_ = m / norm;
    h.frobenius_normalized_ = true;
  }
  // Scale-free singularity test.
  const double det = h.m_.determinant();
  const double ref = std::pow(h.m_.norm(), 3);
  if (!(std::abs(det) > 1e-12 * ref)) {
    throw Error(ErrorCode::DegenerateConfiguration, "homography is singular");
  }
  return h;
}

Homography Homography::inverse() const { return from_matrix(m_.inverse()); }

Homography estimate_homography(std::span<const Correspondence> pairs) {
  if (pairs.size() < 4) {
    throw Error(ErrorCode::FewerThanFourPairs,
                fmt::format("need at least 4 correspondences, got {}", pairs.size()));
  }
  std::vector<Eigen::Vector2d> src, dst;
  src.reserve(pairs.size());
  dst.reserve(pairs.size());
  for (const auto& c : pairs) {
    src.push_back(c.source.vec());
    dst.push_back(c.target.vec());
    if (!src.back().allFinite() || !dst.back().allFinite()) {
      throw Error(ErrorCode::InvalidArgument, "non-finite correspondence coordinate");
    }
  }

  const Eigen::Matrix3d ts = hartley_transform(src);
  const Eigen::Matrix3d td = hartley_transform(dst);
  const auto ns = transform_points(ts, src);
  const auto nd = transform_points(td, dst);
  require_no_collinear_triple(ns, "source");
  require_no_collinear_triple(nd, "target");

  const auto n = static_cast<Eigen::Index>(pairs.size());
  Eigen::MatrixXd a(2 * n, 9);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double x = ns[i].x(), y = ns[i].y();
    const double u = nd[i].x(), v = nd[i].y();
    a.row(2 * i) << -x, -y, -1, 0, 0, 0, u * x, u * y, u;
    a.row(2 * i + 1) << 0, 0, 0, -x, -y, -1, v * x, v * y, v;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const Eigen::VectorXd h = svd.matrixV().col(8);
  Eigen::Matrix3d hn;
  hn << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);

  return Homography::from_matrix(td.inverse() * hn * ts);
}

PixelPoint apply_homography(const Homography& h, PixelPoint p) {
  const Eigen::Vector3d q = h.matrix() * Eigen::Vector3d(p.x, p.y, 1.0);
  if (std::abs(q.z()) < kInfinityThreshold) {
    throw Error(ErrorCode::PointAtInfinity,
                fmt::format("point ({}, {}) maps to infinity", p.x, p.y));
  }
  return {q.x() / q.z(), q.y() / q.z()};
}

PixelPoint table_to_virtual(TablePoint p, double scale_h) {
  return {(p.y + 2.0 / 3.0) * scale_h, (p.x + 1.0) * scale_h};
}

TablePoint virtual_to_table(PixelPoint q, double scale_h) {
  if (!(scale_h > 0.0)) {
    throw Error(ErrorCode::NonPositiveScale, fmt::format("scale_h must be positive, got {}", scale_h));
  }
  return {q.y / scale_h - 1.0, q.x / scale_h - 2.0 / 3.0};
}

VirtualImage warp_image(const RgbImage& src, const Homography& h, int out_size,
                        const WarpOptions& options) {
  if (out_size <= 0) throw Error(ErrorCode::InvalidArgument, "out_size must be positive");
  Homography inv;
  try {
    inv = h.inverse();
  } catch (const Error& e) {
    throw Error(ErrorCode::NonInvertibleHomography, e.what());
  }
  const Eigen::Matrix3d m = inv.matrix();
  const Rgb fill = options.fill;

  RgbImage out(out_size, out_size, fill);
  parallel_for(static_cast<std::size_t>(out_size), [&](std::size_t row) {
    const int y = static_cast<int>(row);
    for (int x = 0; x < out_size; ++x) {
      const Eigen::Vector3d q = m * Eigen::Vector3d(x + 0.5, y + 0.5, 1.0);
      if (std::abs(q.z()) < kInfinityThreshold) continue;
      const double sx = q.x() / q.z() - 0.5;
      const double sy = q.y() / q.z() - 0.5;
      for (int c = 0; c < 3; ++c) {
        const float v = sample_bilinear(src, sx, sy, c, fill[c]);
        out.at(x, y, c) = std::clamp(v, 0.f, 1.f);
      }
    }
  });
  const double scale = options.scale_h > 0.0 ? options.scale_h : static_cast<double>(out_size);
  return VirtualImage(std::move(out), scale);
}

std::vector<Correspondence> read_correspondences(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MissingFile, "cannot open calibration file: " + path.string());
  std::vector<Correspondence> pairs;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::vector<std::string> tokens;
    for (std::string tok; fields >> tok;) tokens.push_back(tok);
    if (tokens.empty()) continue;
    double v[4];
    bool ok = tokens.size() == 4;
    for (std::size_t i = 0; ok && i < 4; ++i) {
      char* end = nullptr;
      v[i] = std::strtod(tokens[i].c_str(), &end);
      ok = end && *end == '\0';
    }
    if (!ok) {
      throw Error(ErrorCode::ParseError,
                  fmt::format("{}:{}: expected 'sx sy tx ty'", path.string(), line_no));
    }
    pairs.push_back({{v[0], v[1]}, {v[2], v[3]}});
  }
  return pairs;
}

void write_homography(const std::filesystem::path& path, const Homography& h) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write: " + path.string());
  const auto& m = h.matrix();
  for (int r = 0; r < 3; ++r) {
    out << fmt::format("{:.17g} {:.17g} {:.17g}\n", m(r, 0), m(r, 1), m(r, 2));
  }
}

Homography read_homography(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MissingFile, "cannot open homography file: " + path.string());
  in.imbue(std::locale::classic());
  Eigen::Matrix3d m;
  for (int i = 0; i < 9; ++i) {
    if (!(in >> m(i / 3, i % 3))) {
      throw Error(ErrorCode::ParseError, "homography file needs 9 numbers: " + path.string());
    }
  }
  return Homography::from_matrix(m);
}

}  // namespace tabletop
