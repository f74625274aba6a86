#include "tabletop/perception.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include "tabletop/error.hpp"

namespace tabletop {
namespace {

using nlohmann::json;

Rgb rgb_from_json(const json& j, const std::string& field) {
  if (!j.is_array() || j.size() != 3) {
    throw Error(ErrorCode::ParseError, "color field '" + field + "' must be a 3-element array");
  }
  return {j[0].get<float>(), j[1].get<float>(), j[2].get<float>()};
}

struct MaskPixels {
  std::vector<Eigen::Vector2d> centers;  // pixel centers, pixel units
  Eigen::Vector2d centroid = Eigen::Vector2d::Zero();
};

MaskPixels collect(const DirtMask& mask) {
  if (mask.empty()) throw Error(ErrorCode::EmptyDirtMask, "no dirt pixels in mask");
  MaskPixels out;
  out.centers.reserve(mask.count());
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (mask.test(x, y)) out.centers.emplace_back(x + 0.5, y + 0.5);
    }
  }
  for (const auto& p : out.centers) out.centroid += p;
  out.centroid /= static_cast<double>(out.centers.size());
  return out;
}

TablePoint to_table(const Eigen::Vector2d& pixel, double scale_h) {
  return virtual_to_table({pixel.x(), pixel.y()}, scale_h);
}

}  // namespace

bool ColorBox::contains(Rgb c) const {
  return c.r >= rgb_min.r && c.r <= rgb_max.r && c.g >= rgb_min.g && c.g <= rgb_max.g &&
         c.b >= rgb_min.b && c.b <= rgb_max.b;
}

bool ColorBox::hue_in_range(double hue_deg) const {
  if (hue_lo <= hue_hi) return hue_deg >= hue_lo && hue_deg <= hue_hi;
  return hue_deg >= hue_lo || hue_deg <= hue_hi;  // wraps through 0
}

ColorConfig ColorConfig::defaults() {
  return ColorConfig{{
      {"marker", {0.60f, 0.00f, 0.00f}, {1.00f, 0.35f, 0.35f}, 340.0, 15.0},
      {"lentils", {0.40f, 0.15f, 0.00f}, {0.80f, 0.55f, 0.30f}, 18.0, 50.0},
  }};
}

const ColorBox* ColorConfig::find(std::string_view name) const {
  for (const auto& b : boxes) {
    if (b.name == name) return &b;
  }
  return nullptr;
}

ColorConfig read_color_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MissingFile, "missing file: " + path.string());
  ColorConfig config;
  try {
    const json doc = json::parse(in);
    for (const auto& item : doc.at("colors")) {
      ColorBox box;
      box.name = item.at("name").get<std::string>();
      box.rgb_min = rgb_from_json(item.at("rgb_min"), "rgb_min");
      box.rgb_max = rgb_from_json(item.at("rgb_max"), "rgb_max");
      const auto& hue = item.at("hue_range");
      if (!hue.is_array() || hue.size() != 2) {
        throw Error(ErrorCode::ParseError, "hue_range must be [lo, hi]");
      }
      box.hue_lo = hue[0].get<double>();
      box.hue_hi = hue[1].get<double>();
      config.boxes.push_back(std::move(box));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
  return config;
}

void write_color_config(const std::filesystem::path& path, const ColorConfig& config) {
  json doc;
  doc["colors"] = json::array();
  for (const auto& b : config.boxes) {
    doc["colors"].push_back({{"name", b.name},
                             {"rgb_min", {b.rgb_min.r, b.rgb_min.g, b.rgb_min.b}},
                             {"rgb_max", {b.rgb_max.r, b.rgb_max.g, b.rgb_max.b}},
                             {"hue_range", {b.hue_lo, b.hue_hi}}});
  }
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write: " + path.string());
  out << doc.dump(2) << '\n';
}

double hue_degrees(Rgb c) {
  const double r = c.r, g = c.g, b = c.b;
  const double mx = std::max({r, g, b});
  const double mn = std::min({r, g, b});
  const double delta = mx - mn;
  if (delta <= 0.0) return 0.0;
  double h;
  if (mx == r) {
    h = 60.0 * std::fmod((g - b) / delta, 6.0);
  } else if (mx == g) {
    h = 60.0 * ((b - r) / delta + 2.0);
  } else {
    h = 60.0 * ((r - g) / delta + 4.0);
  }
  if (h < 0.0) h += 360.0;
  return h >= 360.0 ? h - 360.0 : h;
}

DirtMask segment_dirt(const VirtualImage& img, const ColorConfig& colors) {
  const auto& px = img.pixels();
  DirtMask mask(px.width(), px.height());
  for (int y = 0; y < px.height(); ++y) {
    for (int x = 0; x < px.width(); ++x) {
      const Rgb c = px.pixel(x, y);
      for (const auto& box : colors.boxes) {
        if (box.contains(c)) {
          mask.set(x, y);
          break;
        }
      }
    }
  }
  return mask;
}

DirtType classify_dirt(const VirtualImage& img, const DirtMask& mask, const ColorConfig& colors) {
  if (mask.empty()) throw Error(ErrorCode::EmptyDirtMask, "cannot classify an empty mask");
  double sx = 0.0, sy = 0.0;
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (!mask.test(x, y)) continue;
      const double h = hue_degrees(img.pixels().pixel(x, y)) * std::numbers::pi / 180.0;
      sx += std::cos(h);
      sy += std::sin(h);
    }
  }
  const double resultant = std::hypot(sx, sy) / static_cast<double>(mask.count());
  if (resultant < 1e-6) throw Error(ErrorCode::AmbiguousColor, "masked pixels have no dominant hue");
  double mean_hue = std::atan2(sy, sx) * 180.0 / std::numbers::pi;
  if (mean_hue < 0.0) mean_hue += 360.0;

  const ColorBox* marker = colors.find("marker");
  const ColorBox* lentils = colors.find("lentils");
  if (marker && marker->hue_in_range(mean_hue)) return DirtType::Marker;
  if (lentils && lentils->hue_in_range(mean_hue)) return DirtType::Lentils;
  throw Error(ErrorCode::AmbiguousColor,
              fmt::format("mean dirt hue {:.1f} deg matches neither marker nor lentils", mean_hue));
}

FramePrediction predict_frames(const VirtualImage& img, const FramePredictor& predictor) {
  return predictor.predict(img);
}

FramePrediction marker_frames_from_mask(const DirtMask& mask, double scale_h) {
  const MaskPixels pix = collect(mask);

  Eigen::Vector2d axis(1.0, 0.0);  // fallback for fewer than three pixels
  if (pix.centers.size() >= 3) {
    Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
    for (const auto& p : pix.centers) {
      const Eigen::Vector2d d = p - pix.centroid;
      cov += d * d.transpose();
    }
    cov /= static_cast<double>(pix.centers.size());
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(cov);
    axis = eig.eigenvectors().col(1).normalized();  // eigenvalues ascend
  }

  double lo = 0.0, hi = 0.0;
  for (const auto& p : pix.centers) {
    const double s = (p - pix.centroid).dot(axis);
    lo = std::min(lo, s);
    hi = std::max(hi, s);
  }
  // Extend by half a pixel so the endpoints sit on the mask's outer edge.
  const TablePoint end_a = to_table(pix.centroid + (lo - 0.5) * axis, scale_h);
  const TablePoint end_b = to_table(pix.centroid + (hi + 0.5) * axis, scale_h);
  const TablePoint mid = to_table(pix.centroid, scale_h);

  constexpr double kTie = 1e-9;
  const bool a_first = end_a.x < end_b.x - kTie || (std::abs(end_a.x - end_b.x) <= kTie && end_a.y <= end_b.y);
  return a_first ? FramePrediction{end_a, mid, end_b} : FramePrediction{end_b, mid, end_a};
}

std::vector<int> pile_labels(const DirtMask& mask, double link_px) {
  const int w = mask.width();
  const int h = mask.height();
  std::vector<int> index(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), -1);
  std::vector<std::pair<int, int>> pixels;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!mask.test(x, y)) continue;
      index[static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x)] =
          static_cast<int>(pixels.size());
      pixels.emplace_back(x, y);
    }
  }
  const int reach = static_cast<int>(std::floor(link_px));
  const double link2 = link_px * link_px;
  std::vector<int> label(pixels.size(), -1);
  std::vector<int> stack;
  int next = 0;
  for (std::size_t seed = 0; seed < pixels.size(); ++seed) {
    if (label[seed] >= 0) continue;
    label[seed] = next;
    stack.assign(1, static_cast<int>(seed));
    while (!stack.empty()) {
      const auto [px, py] = pixels[static_cast<std::size_t>(stack.back())];
      stack.pop_back();
      for (int dy = -reach; dy <= reach; ++dy) {
        for (int dx = -reach; dx <= reach; ++dx) {
          const int nx = px + dx;
          const int ny = py + dy;
          if (nx < 0 || ny < 0 || nx >= w || ny >= h || dx * dx + dy * dy > link2) continue;
          const int j = index[static_cast<std::size_t>(ny) * static_cast<std::size_t>(w) + static_cast<std::size_t>(nx)];
          if (j < 0 || label[static_cast<std::size_t>(j)] >= 0) continue;
          label[static_cast<std::size_t>(j)] = next;
          stack.push_back(j);
        }
      }
    }
    ++next;
  }
  return label;
}

FramePrediction lentil_frames_from_mask(const DirtMask& mask, double scale_h, TablePoint target,
                                        double sponge_radius, double link_distance) {
  const MaskPixels all = collect(mask);
  const std::vector<int> label = pile_labels(mask, std::max(1.0, link_distance * scale_h));
  const PixelPoint o = table_to_virtual(target, scale_h);
  const int piles = 1 + *std::max_element(label.begin(), label.end());
  std::vector<double> load(static_cast<std::size_t>(piles), 0.0);
  for (std::size_t i = 0; i < all.centers.size(); ++i) {
    load[static_cast<std::size_t>(label[i])] += (all.centers[i] - o.vec()).norm();
  }
  const int chosen = static_cast<int>(std::max_element(load.begin(), load.end()) - load.begin());

  Eigen::Vector2d centroid = Eigen::Vector2d::Zero();
  std::size_t count = 0;
  for (std::size_t i = 0; i < all.centers.size(); ++i) {
    if (label[i] != chosen) continue;
    centroid += all.centers[i];
    ++count;
  }
  centroid /= static_cast<double>(count);
  double radius_px = 0.0;
  for (std::size_t i = 0; i < all.centers.size(); ++i) {
    if (label[i] == chosen) radius_px = std::max(radius_px, (all.centers[i] - centroid).norm());
  }
  const double reach = (radius_px + 0.5) / scale_h + sponge_radius;

  const TablePoint c = to_table(centroid, scale_h);
  Eigen::Vector2d dir = target.vec() - c.vec();
  if (dir.norm() < 1e-9) {
    dir = Eigen::Vector2d(1.0, 1.0);  // pile already on the target: keep sweeping outward
  }
  dir.normalize();
  return {TablePoint::from(c.vec() - reach * dir), c, TablePoint::from(c.vec() + reach * dir)};
}

FramePrediction baseline_predict_frames(const VirtualImage& img, const BaselineConfig& config) {
  const DirtMask mask = segment_dirt(img, config.colors);
  if (mask.empty()) throw Error(ErrorCode::EmptyDirtMask, "no dirt visible in image");
  switch (classify_dirt(img, mask, config.colors)) {
    case DirtType::Marker:
      return marker_frames_from_mask(mask, img.scale_h());
    case DirtType::Lentils:
      return lentil_frames_from_mask(mask, img.scale_h(), config.target_corner,
                                     config.sponge_radius, config.pile_link);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown dirt type");
}

}  // namespace tabletop
