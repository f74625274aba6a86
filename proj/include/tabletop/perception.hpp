#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tabletop/geometry.hpp"
#include "tabletop/image.hpp"
#include "tabletop/trajectory.hpp"

namespace tabletop {

// Axis-aligned RGB box plus the hue interval (degrees, may wrap through 0)
// used to tell dirt kinds apart. Boxes named "marker" and "lentils" drive
// classification; any box contributes to segmentation.
struct ColorBox {
  std::string name;
  Rgb rgb_min;
  Rgb rgb_max;
  double hue_lo = 0.0;
  double hue_hi = 360.0;

  bool contains(Rgb c) const;
  bool hue_in_range(double hue_deg) const;
};

struct ColorConfig {
  std::vector<ColorBox> boxes;

  // Saturated red ink and brown lentils on a light table.
  static ColorConfig defaults();
  const ColorBox* find(std::string_view name) const;
};

ColorConfig read_color_config(const std::filesystem::path& path);
void write_color_config(const std::filesystem::path& path, const ColorConfig& config);

// HSV hue in degrees [0, 360); 0 for achromatic colors.
double hue_degrees(Rgb c);

DirtMask segment_dirt(const VirtualImage& img, const ColorConfig& colors);

// Circular mean hue of the masked pixels matched against the marker and
// lentils hue ranges.
DirtType classify_dirt(const VirtualImage& img, const DirtMask& mask, const ColorConfig& colors);

// Origins of the initial, intermediate and final reference frames, meters.
struct FramePrediction {
  TablePoint b1;
  TablePoint b2;
  TablePoint b3;
};

class FramePredictor {
 public:
  virtual ~FramePredictor() = default;
  virtual FramePrediction predict(const VirtualImage& img) const = 0;
};

FramePrediction predict_frames(const VirtualImage& img, const FramePredictor& predictor);

// Wiping rule: principal axis of the mask; b2 at the centroid, b1/b3 at the
// mask's extent along the axis. b1 is the end with the smaller table x (then y).
FramePrediction marker_frames_from_mask(const DirtMask& mask, double scale_h);

// Sweeping rule. Dirt pixels are grouped into piles (single linkage with the
// given link distance, meters); the pile with the largest summed pixel
// distance to `target` is swept: b2 at its centroid, b1/b3 displaced
// against/toward `target` by pile radius plus sponge radius.
FramePrediction lentil_frames_from_mask(const DirtMask& mask, double scale_h, TablePoint target,
                                        double sponge_radius, double link_distance = 0.02);

// Pile labels for the set pixels of `mask` (row-major order), 0-based.
std::vector<int> pile_labels(const DirtMask& mask, double link_px);

struct BaselineConfig {
  ColorConfig colors = ColorConfig::defaults();
  TablePoint target_corner{-0.25, 1.0 / 12.0};
  double sponge_radius = 0.04;
  double pile_link = 0.02;
};

// Segment, classify, then apply the wiping or sweeping rule.
FramePrediction baseline_predict_frames(const VirtualImage& img, const BaselineConfig& config);

class BaselinePredictor final : public FramePredictor {
 public:
  explicit BaselinePredictor(BaselineConfig config = {}) : config_(std::move(config)) {}
  FramePrediction predict(const VirtualImage& img) const override {
    return baseline_predict_frames(img, config_);
  }
  const BaselineConfig& config() const { return config_; }

 private:
  BaselineConfig config_;
};

}  // namespace tabletop
