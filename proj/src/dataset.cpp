#include "tabletop/dataset.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include "tabletop/error.hpp"
#include "tabletop/parallel.hpp"
#include "tabletop/perception.hpp"
#include "tabletop/png_io.hpp"
#include "tabletop/rng.hpp"

namespace tabletop {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

std::string numbered(std::size_t i, std::size_t total) {
  const std::size_t width = std::max<std::size_t>(3, fmt::format("{}", total > 0 ? total - 1 : 0).size());
  return fmt::format("{:0{}}", i, width);
}

fs::path resolve_manifest(const fs::path& path) {
  return fs::is_directory(path) ? path / "manifest.json" : path;
}

bool same_frames(const std::vector<ReferenceFrame>& a, const std::vector<ReferenceFrame>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].b != b[i].b || a[i].A != b[i].A) return false;
  }
  return true;
}

}  // namespace

Demonstration Demonstration::make(VirtualImage image, Trajectory trajectory, DirtType type) {
  if (trajectory.size() != kTrajectoryLength) {
    throw Error(ErrorCode::InvariantViolation,
                fmt::format("trajectory has {} samples, expected {}", trajectory.size(), kTrajectoryLength));
  }
  Demonstration d;
  d.frames = tp_demo_from_trajectory(trajectory).frames;
  d.image = std::move(image);
  d.trajectory = std::move(trajectory);
  d.dirt_type = type;
  return d;
}

TpDemo Demonstration::tp_demo() const {
  TpDemo demo;
  demo.frames = frames;
  demo.points.reserve(trajectory.size());
  for (const auto& s : trajectory.samples()) demo.points.push_back({s.t, {s.x, s.y}});
  return demo;
}

bool Demonstration::operator==(const Demonstration& other) const {
  return image == other.image && trajectory == other.trajectory && dirt_type == other.dirt_type &&
         same_frames(frames, other.frames);
}

bool Dataset::operator==(const Dataset& other) const {
  return scale_h == other.scale_h && image_size == other.image_size && colors == other.colors &&
         seed == other.seed && samples == other.samples;
}

struct DatasetWriter::State {
  json samples = json::array();
};

DatasetWriter::DatasetWriter(fs::path dir, double scale_h, int image_size, std::size_t expected_count,
                             std::string colors, std::optional<std::uint64_t> seed)
    : dir_(std::move(dir)),
      scale_h_(scale_h),
      image_size_(image_size),
      expected_(expected_count),
      colors_(std::move(colors)),
      seed_(seed),
      state_(std::make_unique<State>()) {
  std::error_code ec;
  fs::create_directories(dir_ / "imgs", ec);
  if (!ec) fs::create_directories(dir_ / "traj", ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create dataset directory: " + dir_.string());
}

DatasetWriter::~DatasetWriter() = default;

void DatasetWriter::add(const Demonstration& d) {
  if (finished_) throw Error(ErrorCode::InvalidArgument, "dataset writer already finished");
  const std::size_t i = count_;
  if (d.image.pixels().empty()) {
    throw Error(ErrorCode::InvalidArgument, fmt::format("sample {} has no image to save", i));
  }
  if (d.image.size() != image_size_) {
    throw Error(ErrorCode::InvariantViolation, fmt::format("sample {} image size differs from manifest", i));
  }
  const std::string stem = numbered(i, std::max(expected_, i + 1));
  const std::string image_rel = "imgs/" + stem + ".png";
  const std::string traj_rel = "traj/" + stem + ".csv";
  write_png(dir_ / image_rel, d.image.pixels());
  write_trajectory_csv(dir_ / traj_rel, d.trajectory);
  state_->samples.push_back(
      {{"image", image_rel}, {"trajectory", traj_rel}, {"dirt_type", std::string(dirt_type_name(d.dirt_type))}});
  ++count_;
}

void DatasetWriter::finish() {
  if (finished_) return;
  json doc;
  doc["version"] = kManifestVersion;
  doc["scale_h"] = scale_h_;
  doc["image_size"] = image_size_;
  if (!colors_.empty()) doc["colors"] = colors_;
  if (seed_) doc["seed"] = *seed_;
  doc["samples"] = std::move(state_->samples);
  std::ofstream out(dir_ / "manifest.json");
  if (!out) throw Error(ErrorCode::IoError, "cannot write manifest in " + dir_.string());
  out << doc.dump(1) << '\n';
  if (!out) throw Error(ErrorCode::IoError, "manifest write failed in " + dir_.string());
  finished_ = true;
}

void save_dataset(const Dataset& ds, const fs::path& dir) {
  DatasetWriter writer(dir, ds.scale_h, ds.image_size, ds.samples.size(), ds.colors, ds.seed);
  for (const auto& s : ds.samples) writer.add(s);
  writer.finish();
}

Dataset load_dataset(const fs::path& path, const LoadOptions& options) {
  const fs::path manifest = resolve_manifest(path);
  std::ifstream in(manifest);
  if (!in) throw Error(ErrorCode::MissingFile, "missing file: " + manifest.string());
  const fs::path root = manifest.parent_path();

  Dataset ds;
  struct Entry {
    std::string image;
    std::string trajectory;
    DirtType type;
  };
  std::vector<Entry> entries;
  try {
    const json doc = json::parse(in);
    const int version = doc.at("version").get<int>();
    if (version != kManifestVersion) {
      throw Error(ErrorCode::SchemaVersionMismatch,
                  fmt::format("manifest version {} is not supported (expected {})", version, kManifestVersion));
    }
    ds.scale_h = doc.at("scale_h").get<double>();
    ds.image_size = doc.at("image_size").get<int>();
    if (!(ds.scale_h > 0.0) || ds.image_size <= 0) {
      throw Error(ErrorCode::InvariantViolation, "manifest scale_h and image_size must be positive");
    }
    if (doc.contains("colors")) ds.colors = doc["colors"].get<std::string>();
    if (doc.contains("seed")) ds.seed = doc["seed"].get<std::uint64_t>();
    for (const auto& s : doc.at("samples")) {
      entries.push_back({s.at("image").get<std::string>(), s.at("trajectory").get<std::string>(),
                         parse_dirt_type(s.at("dirt_type").get<std::string>())});
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, manifest.string() + ": " + e.what());
  }

  ds.samples.resize(entries.size());
  parallel_for(entries.size(), [&](std::size_t i) {
    const Entry& e = entries[i];
    try {
      VirtualImage image;
      if (options.images) {
        RgbImage px = read_png(root / e.image);
        if (px.width() != ds.image_size || px.height() != ds.image_size) {
          throw Error(ErrorCode::InvariantViolation,
                      fmt::format("image is {}x{}, manifest says {}", px.width(), px.height(), ds.image_size));
        }
        image = VirtualImage(std::move(px), ds.scale_h);
      } else if (!fs::exists(root / e.image)) {
        throw Error(ErrorCode::MissingFile, "missing file: " + (root / e.image).string());
      }
      ds.samples[i] = Demonstration::make(std::move(image), read_trajectory_csv(root / e.trajectory), e.type);
    } catch (const Error& err) {
      rethrow_with_context(err, fmt::format("sample {}", i));
    }
  });
  return ds;
}

DemoKind parse_demo_kind(std::string_view name) {
  if (name == "marker") return DemoKind::Marker;
  if (name == "lentils") return DemoKind::Lentils;
  if (name == "mixed") return DemoKind::Mixed;
  throw Error(ErrorCode::ParseError, fmt::format("unknown demonstration kind '{}'", name));
}

Trajectory via_point_curve(const Eigen::Vector2d& b1, const Eigen::Vector2d& b2, const Eigen::Vector2d& b3,
                           const std::array<Eigen::Vector2d, 3>& wobble) {
  const auto times = Trajectory::uniform_times(kTrajectoryLength);
  const double sm = times[kMidSample];
  const double tail = 1.0 - sm;
  const Eigen::Vector2d v = b3 - b1;
  // First half: b1 + alpha s + beta s^2; second half: b2 + v u + gamma u^2.
  const Eigen::Vector2d beta = (v - (b2 - b1) / sm) / sm;
  const Eigen::Vector2d alpha = v - 2.0 * sm * beta;
  const Eigen::Vector2d gamma = (b3 - b2 - tail * v) / (tail * tail);

  std::vector<TrajectorySample> out(kTrajectoryLength);
  for (std::size_t n = 0; n < kTrajectoryLength; ++n) {
    const double t = times[n];
    Eigen::Vector2d p;
    if (n == 0) {
      p = b1;
    } else if (n == kTrajectoryLength - 1) {
      p = b3;
    } else if (n < kMidSample) {
      p = b1 + alpha * t + beta * t * t;
    } else {
      const double u = t - sm;
      p = b2 + v * u + gamma * u * u;
    }
    if (n != 0 && n != kTrajectoryLength - 1) {
      for (int k = 0; k < 3; ++k) p += wobble[static_cast<std::size_t>(k)] * std::sin((k + 1) * std::numbers::pi * t);
    }
    out[n] = {t, p.x(), p.y()};
  }
  return Trajectory(std::move(out));
}

Dataset generate_synthetic_demos(std::size_t n, const SyntheticConfig& config, std::uint64_t seed) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "need at least one demonstration");
  if (!(config.frame_noise >= 0.0) || !(config.path_noise >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "noise levels must be non-negative");
  }
  config.scene.validate();

  Dataset ds;
  ds.scale_h = config.scene.scale_h;
  ds.image_size = config.scene.image_size;
  ds.seed = seed;
  ds.samples.resize(n);

  BaselineConfig baseline;
  baseline.target_corner = config.scene.target_corner;
  baseline.sponge_radius = config.scene.sponge_radius;

  parallel_for(n, [&](std::size_t i) {
    Rng rng(derive_seed(seed, i, 0xde30));
    DirtType type;
    switch (config.kind) {
      case DemoKind::Marker: type = DirtType::Marker; break;
      case DemoKind::Lentils: type = DirtType::Lentils; break;
      default: type = rng.uniform01() < 0.5 ? DirtType::Marker : DirtType::Lentils; break;
    }
    constexpr int kAttempts = 100;
    for (int attempt = 0;; ++attempt) {
      const Scene scene = spawn_scene(type, config.scene, rng);
      VirtualImage view = render_scene(scene);
      FramePrediction f;
      try {
        f = baseline_predict_frames(view, baseline);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::EmptyDirtMask || attempt + 1 >= kAttempts) {
          rethrow_with_context(e, fmt::format("synthetic demonstration {}", i));
        }
        continue;
      }
      std::array<Eigen::Vector2d, 3> b{f.b1.vec(), f.b2.vec(), f.b3.vec()};
      for (auto& p : b) p += Eigen::Vector2d(rng.normal(0.0, config.frame_noise), rng.normal(0.0, config.frame_noise));
      std::array<Eigen::Vector2d, 3> wobble;
      for (auto& w : wobble) w = Eigen::Vector2d(rng.normal(0.0, config.path_noise), rng.normal(0.0, config.path_noise));

      if (config.render_images) {
        RgbImage px = view.pixels();
        quantize_to_8bit(px);
        view = VirtualImage(std::move(px), view.scale_h());
      } else {
        view = VirtualImage();
      }
      ds.samples[i] = Demonstration::make(std::move(view), via_point_curve(b[0], b[1], b[2], wobble), type);
      break;
    }
  });
  return ds;
}

Split split_dataset(std::size_t n_samples, double validation_fraction, std::uint64_t seed) {
  if (!(validation_fraction >= 0.0 && validation_fraction <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "validation fraction must be in [0, 1]");
  }
  std::vector<std::size_t> order(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) order[i] = i;
  Rng rng(derive_seed(seed, n_samples, 0x5b1));
  for (std::size_t i = n_samples; i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i - 1)));
    std::swap(order[i - 1], order[j]);
  }
  const auto n_val = static_cast<std::size_t>(std::llround(validation_fraction * static_cast<double>(n_samples)));
  Split s;
  s.validation.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  s.train.assign(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
  std::sort(s.validation.begin(), s.validation.end());
  std::sort(s.train.begin(), s.train.end());
  return s;
}

std::vector<TpDemo> tp_demos(const Dataset& ds, std::span<const std::size_t> indices) {
  std::vector<TpDemo> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) {
    if (i >= ds.samples.size()) throw Error(ErrorCode::InvalidArgument, "sample index out of range");
    out.push_back(ds.samples[i].tp_demo());
  }
  return out;
}

}  // namespace tabletop
