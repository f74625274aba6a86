#include "tabletop/trajectory.hpp"

#include <fmt/format.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <string>

#include "tabletop/error.hpp"

namespace tabletop {

std::string_view dirt_type_name(DirtType type) noexcept {
  return type == DirtType::Marker ? "marker" : "lentils";
}

DirtType parse_dirt_type(std::string_view name) {
  if (name == "marker") return DirtType::Marker;
  if (name == "lentils") return DirtType::Lentils;
  throw Error(ErrorCode::ParseError, fmt::format("unknown dirt type '{}'", name));
}

Trajectory::Trajectory(std::vector<TrajectorySample> samples) : samples_(std::move(samples)) {
  if (samples_.size() < 2) {
    throw Error(ErrorCode::InvariantViolation, "trajectory needs at least two samples");
  }
  if (samples_.front().t != 0.0 || samples_.back().t != 1.0) {
    throw Error(ErrorCode::InvariantViolation, "trajectory time must run from 0 to 1");
  }
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    const auto& s = samples_[i];
    if (!std::isfinite(s.t) || !std::isfinite(s.x) || !std::isfinite(s.y)) {
      throw Error(ErrorCode::InvariantViolation, fmt::format("non-finite trajectory sample {}", i));
    }
    if (i > 0 && !(s.t > samples_[i - 1].t)) {
      throw Error(ErrorCode::InvariantViolation,
                  fmt::format("trajectory time not strictly increasing at sample {}", i));
    }
  }
}

std::vector<double> Trajectory::uniform_times(std::size_t count) {
  std::vector<double> t(count);
  for (std::size_t i = 0; i < count; ++i) {
    t[i] = static_cast<double>(i) / static_cast<double>(count - 1);
  }
  return t;
}

Trajectory Trajectory::translated(double dx, double dy) const {
  auto moved = samples_;
  for (auto& s : moved) {
    s.x += dx;
    s.y += dy;
  }
  return Trajectory(std::move(moved));
}

void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write: " + path.string());
  out << "n,t,x,y\n";
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const auto& s = traj[i];
    out << fmt::format("{},{:.17g},{:.17g},{:.17g}\n", i, s.t, s.x, s.y);
  }
  if (!out) throw Error(ErrorCode::IoError, "write failed: " + path.string());
}

Trajectory read_trajectory_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingFile, "missing file: " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "n,t,x,y") {
    throw Error(ErrorCode::ParseError, "trajectory CSV must start with header 'n,t,x,y': " + path.string());
  }
  std::vector<TrajectorySample> samples;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const char* p = line.c_str();
    char* end = nullptr;
    const long n = std::strtol(p, &end, 10);
    double v[3];
    bool ok = *end == ',' && n == static_cast<long>(samples.size());
    for (int k = 0; ok && k < 3; ++k) {
      p = end + 1;
      v[k] = std::strtod(p, &end);
      ok = end != p && (k < 2 ? *end == ',' : *end == '\0');
    }
    if (!ok) {
      throw Error(ErrorCode::ParseError, fmt::format("{}:{}: malformed row", path.string(), line_no));
    }
    samples.push_back({v[0], v[1], v[2]});
  }
  try {
    return Trajectory(std::move(samples));
  } catch (const Error& e) {
    rethrow_with_context(e, path.string());
  }
}

double rms_distance(const Trajectory& a, const Trajectory& b) {
  if (a.size() != b.size() || a.size() == 0) {
    throw Error(ErrorCode::InvalidArgument, "rms_distance needs equally long trajectories");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double dx = a[i].x - b[i].x;
    const double dy = a[i].y - b[i].y;
    sum += dx * dx + dy * dy;
  }
  return std::sqrt(sum / static_cast<double>(a.size()));
}

}  // namespace tabletop
