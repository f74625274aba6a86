#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <functional>
#include <json.hpp>

#include "tabletop/dataset.hpp"
#include "tabletop/perception.hpp"
#include "test_support.hpp"

using namespace tabletop;
using test_support::code_of;
using test_support::TempDir;

namespace {

const Dataset& small_dataset() {
  static const Dataset ds = generate_synthetic_demos(10, SyntheticConfig{}, 21);
  return ds;
}

void rewrite_manifest(const std::filesystem::path& dir, const std::function<void(nlohmann::json&)>& edit) {
  nlohmann::json doc;
  {
    std::ifstream in(dir / "manifest.json");
    in >> doc;
  }
  edit(doc);
  std::ofstream(dir / "manifest.json") << doc.dump();
}

}  // namespace

TEST_CASE("save and load: empty dataset") {
  TempDir dir("ds_empty");
  Dataset ds;
  ds.colors = "colors.json";
  save_dataset(ds, dir.path());
  const Dataset back = load_dataset(dir.path());
  CHECK(back == ds);
  CHECK(back.samples.empty());
  CHECK(back.colors == "colors.json");
  CHECK(load_dataset(dir.path() / "manifest.json") == ds);
}

TEST_CASE("save and load: generated samples round-trip exactly") {
  TempDir dir("ds_rt");
  const Dataset& ds = small_dataset();
  save_dataset(ds, dir.path());
  CHECK(std::filesystem::exists(dir.path() / "imgs" / "000.png"));
  CHECK(std::filesystem::exists(dir.path() / "traj" / "009.csv"));
  const Dataset back = load_dataset(dir.path());
  CHECK(back == ds);
  REQUIRE(back.seed.has_value());
  CHECK(*back.seed == 21);

  const Dataset lean = load_dataset(dir.path(), {.images = false});
  REQUIRE(lean.samples.size() == ds.samples.size());
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    CHECK(lean.samples[i].trajectory == ds.samples[i].trajectory);
    CHECK(lean.samples[i].image.pixels().empty());
  }
}

TEST_CASE("load_dataset: missing files, bad versions and bad trajectories") {
  TempDir dir("ds_bad");
  const Dataset& ds = small_dataset();
  save_dataset(ds, dir.path());

  CHECK(code_of([&] { load_dataset(dir.path() / "nowhere"); }) == ErrorCode::MissingFile);

  std::filesystem::rename(dir.path() / "imgs" / "003.png", dir.path() / "moved.png");
  CHECK(code_of([&] { load_dataset(dir.path()); }) == ErrorCode::MissingFile);
  CHECK(code_of([&] { load_dataset(dir.path(), {.images = false}); }) == ErrorCode::MissingFile);
  try {
    load_dataset(dir.path());
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("sample 3") != std::string::npos);
  }
  std::filesystem::rename(dir.path() / "moved.png", dir.path() / "imgs" / "003.png");
  CHECK_NOTHROW(load_dataset(dir.path()));

  std::vector<TrajectorySample> short_rows;
  for (double t : Trajectory::uniform_times(199)) short_rows.push_back({t, -0.5, -0.2});
  write_trajectory_csv(dir.path() / "traj" / "005.csv", Trajectory(short_rows));
  CHECK(code_of([&] { load_dataset(dir.path()); }) == ErrorCode::InvariantViolation);
  write_trajectory_csv(dir.path() / "traj" / "005.csv", ds.samples[5].trajectory);

  rewrite_manifest(dir.path(), [](nlohmann::json& j) { j["version"] = 2; });
  CHECK(code_of([&] { load_dataset(dir.path()); }) == ErrorCode::SchemaVersionMismatch);
  rewrite_manifest(dir.path(), [](nlohmann::json& j) {
    j["version"] = 1;
    j.erase("samples");
  });
  CHECK(code_of([&] { load_dataset(dir.path()); }) == ErrorCode::ParseError);
  std::ofstream(dir.path() / "manifest.json") << "[1, 2";
  CHECK(code_of([&] { load_dataset(dir.path()); }) == ErrorCode::ParseError);
}

TEST_CASE("Demonstration::make enforces the sample count and derives frames") {
  const Trajectory good = via_point_curve({-0.6, -0.3}, {-0.5, -0.2}, {-0.3, 0.0});
  const Demonstration d = Demonstration::make(VirtualImage(), good, DirtType::Lentils);
  REQUIRE(d.frames.size() == 3);
  CHECK(d.frames[1].b == Eigen::Vector2d(good[kMidSample].x, good[kMidSample].y));

  std::vector<TrajectorySample> rows;
  for (double t : Trajectory::uniform_times(199)) rows.push_back({t, 0.0, t});
  CHECK(code_of([&] { Demonstration::make(VirtualImage(), Trajectory(rows), DirtType::Marker); }) ==
        ErrorCode::InvariantViolation);
}

TEST_CASE("via_point_curve: passes through the via points with a smooth middle") {
  const Eigen::Vector2d b1(-0.7, -0.35), b2(-0.55, -0.1), b3(-0.3, 0.05);
  const Trajectory c = via_point_curve(b1, b2, b3);
  REQUIRE(c.size() == kTrajectoryLength);
  CHECK(Eigen::Vector2d(c[0].x, c[0].y) == b1);
  CHECK((Eigen::Vector2d(c[kMidSample].x, c[kMidSample].y) - b2).norm() < 1e-15);
  CHECK(Eigen::Vector2d(c[199].x, c[199].y) == b3);

  // One-sided difference quotients at the knot agree to first order.
  const auto p = [&](std::size_t i) { return Eigen::Vector2d(c[i].x, c[i].y); };
  const double h = c[kMidSample + 1].t - c[kMidSample].t;
  const Eigen::Vector2d left = (p(kMidSample) - p(kMidSample - 1)) / (c[kMidSample].t - c[kMidSample - 1].t);
  const Eigen::Vector2d right = (p(kMidSample + 1) - p(kMidSample)) / h;
  CHECK((left - right).norm() < 0.05 * (b3 - b1).norm());
}

TEST_CASE("generate_synthetic_demos: zero noise puts the frames on the baseline rule") {
  SyntheticConfig cfg;
  cfg.frame_noise = 0.0;
  cfg.path_noise = 0.0;
  const Dataset ds = generate_synthetic_demos(12, cfg, 3);
  for (const auto& s : ds.samples) {
    const auto& t = s.trajectory;
    CHECK(s.frames[0].b == Eigen::Vector2d(t[0].x, t[0].y));
    CHECK(s.frames[2].b == Eigen::Vector2d(t[199].x, t[199].y));
    const FramePrediction f = baseline_predict_frames(s.image, BaselineConfig{});
    // The stored image is 8-bit; allow one pixel of drift in the rule's output.
    CHECK((f.b1.vec() - s.frames[0].b).norm() < 1.0 / 240);
    CHECK((f.b2.vec() - s.frames[1].b).norm() < 1.0 / 240);
    CHECK((f.b3.vec() - s.frames[2].b).norm() < 1.0 / 240);
    CHECK(classify_dirt(s.image, segment_dirt(s.image, ColorConfig::defaults()), ColorConfig::defaults()) ==
          s.dirt_type);
  }
}

TEST_CASE("generate_synthetic_demos: deterministic per seed, both kinds in a mix") {
  SyntheticConfig cfg;
  cfg.render_images = false;
  const Dataset a = generate_synthetic_demos(40, cfg, 99);
  CHECK(a == generate_synthetic_demos(40, cfg, 99));
  CHECK_FALSE(a == generate_synthetic_demos(40, cfg, 100));
  const auto markers = std::count_if(a.samples.begin(), a.samples.end(),
                                     [](const Demonstration& d) { return d.dirt_type == DirtType::Marker; });
  CHECK(markers > 0);
  CHECK(markers < 40);

  cfg.kind = DemoKind::Lentils;
  for (const auto& s : generate_synthetic_demos(5, cfg, 1).samples) CHECK(s.dirt_type == DirtType::Lentils);
  CHECK(code_of([&] { generate_synthetic_demos(0, cfg, 1); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("parse_demo_kind") {
  CHECK(parse_demo_kind("marker") == DemoKind::Marker);
  CHECK(parse_demo_kind("lentils") == DemoKind::Lentils);
  CHECK(parse_demo_kind("mixed") == DemoKind::Mixed);
  CHECK(code_of([] { parse_demo_kind("crumbs"); }) == ErrorCode::ParseError);
}

TEST_CASE("split_dataset: disjoint, complete, sorted and reproducible") {
  for (std::size_t n : {0u, 1u, 10u, 659u}) {
    const Split s = split_dataset(n, 0.2, 659);
    CHECK(s.validation.size() == static_cast<std::size_t>(std::llround(0.2 * static_cast<double>(n))));
    CHECK(s.train.size() + s.validation.size() == n);
    CHECK(std::is_sorted(s.train.begin(), s.train.end()));
    CHECK(std::is_sorted(s.validation.begin(), s.validation.end()));
    std::vector<std::size_t> all = s.train;
    all.insert(all.end(), s.validation.begin(), s.validation.end());
    std::sort(all.begin(), all.end());
    for (std::size_t i = 0; i < all.size(); ++i) CHECK(all[i] == i);
    const Split again = split_dataset(n, 0.2, 659);
    CHECK(again.train == s.train);
    CHECK(again.validation == s.validation);
  }
  CHECK_FALSE(split_dataset(659, 0.2, 1).validation == split_dataset(659, 0.2, 2).validation);
  CHECK(code_of([] { split_dataset(10, 1.5, 0); }) == ErrorCode::InvalidArgument);
}
