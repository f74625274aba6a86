#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <fstream>
#include <numbers>

#include "tabletop/rng.hpp"
#include "tabletop/tpgmm.hpp"
#include "test_support.hpp"
#include "tpgmm_oracles.hpp"

using namespace tabletop;
using test_support::code_of;
using test_support::TempDir;

namespace {

Eigen::Matrix2d rotation(double theta) {
  Eigen::Matrix2d a;
  a << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
  return a;
}

TpGmmModel single(const Vec3& mu, const Mat3& sigma, int frames = 1) {
  return TpGmmModel({1.0}, {std::vector<Vec3>(static_cast<std::size_t>(frames), mu)},
                    {std::vector<Mat3>(static_cast<std::size_t>(frames), sigma)});
}

}  // namespace

TEST_CASE("frame_orientations: axis-aligned and 3-4-5 cases") {
  const auto a = frame_orientations({0, 0}, {1, 0}, {2, 0});
  for (const auto& m : a) CHECK((m - Eigen::Matrix2d::Identity()).norm() < 1e-15);

  const auto b = frame_orientations({0, 0}, {0.3, 0.4}, {1, 1});
  CHECK(b[0](1, 0) == doctest::Approx(0.8));
  CHECK(b[0](0, 0) == doctest::Approx(0.6));
  CHECK(b[1] == b[2]);

  CHECK(code_of([] { frame_orientations({1, 1}, {1, 1}, {2, 2}); }) == ErrorCode::DegenerateFrameGeometry);
  CHECK(code_of([] { frame_orientations({0, 0}, {1, 1}, {1, 1}); }) == ErrorCode::DegenerateFrameGeometry);

  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    const Eigen::Vector2d b1(rng.normal(), rng.normal()), b2(rng.normal(), rng.normal()), b3(rng.normal(), rng.normal());
    for (const auto& m : frame_orientations(b1, b2, b3)) {
      CHECK(std::abs(m(0, 0) * m(0, 0) + m(1, 0) * m(1, 0) - 1.0) < 1e-12);
      CHECK(std::abs(m.determinant() - 1.0) < 1e-12);
    }
  }
}

TEST_CASE("project_gaussian: identity, axis swap and spectrum") {
  const Vec3 mu(0.3, 1.0, -2.0);
  const Mat3 sigma = (Mat3() << 0.5, 0.1, 0.0, 0.1, 2.0, 0.3, 0.0, 0.3, 1.0).finished();
  const Gaussian id = project_gaussian(ReferenceFrame::identity(), mu, sigma);
  CHECK(id.mean == mu);
  CHECK((id.cov - sigma).norm() < 1e-15);

  const Mat3 diag = Eigen::Vector3d(1.0, 2.0, 5.0).asDiagonal();
  const Gaussian swapped = project_gaussian({{0, 0}, rotation(std::numbers::pi / 2)}, Vec3::Zero(), diag);
  CHECK(swapped.cov(1, 1) == doctest::Approx(5.0));
  CHECK(swapped.cov(2, 2) == doctest::Approx(2.0));
  CHECK(swapped.cov(0, 0) == 1.0);

  Rng rng(2);
  for (int i = 0; i < 50; ++i) {
    const Mat3 s = oracle::random_spd(rng, 0.1, 3.0);
    const ReferenceFrame f{{rng.normal(), rng.normal()}, rotation(rng.uniform(-4, 4))};
    const Gaussian g = project_gaussian(f, Vec3(rng.normal(), rng.normal(), rng.normal()), s);
    const Eigen::Vector3d e0 = Eigen::SelfAdjointEigenSolver<Mat3>(s).eigenvalues();
    const Eigen::Vector3d e1 = Eigen::SelfAdjointEigenSolver<Mat3>(g.cov).eigenvalues();
    CHECK((e0 - e1).cwiseAbs().maxCoeff() < 1e-9);
  }

  Mat3 bad = Mat3::Identity();
  bad(2, 2) = -1.0;
  CHECK(code_of([&] { project_gaussian(ReferenceFrame::identity(), mu, bad); }) == ErrorCode::NonSpdCovariance);
  Mat3 asym = Mat3::Identity();
  asym(0, 1) = 0.5;
  CHECK(code_of([&] { project_gaussian(ReferenceFrame::identity(), mu, asym); }) == ErrorCode::NonSpdCovariance);
  ReferenceFrame skew{{0, 0}, Eigen::Matrix2d::Identity() * 2.0};
  CHECK(code_of([&] { project_gaussian(skew, mu, sigma); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("product_of_frame_gaussians: single frame, duplicate frames") {
  const Vec3 mu(0.5, -0.2, 0.1);
  const Mat3 sigma = (Mat3() << 0.08, 0.01, 0.0, 0.01, 0.02, 0.005, 0.0, 0.005, 0.03).finished();
  const std::vector<ReferenceFrame> one{ReferenceFrame::identity()};
  const Gaussian g1 = product_of_frame_gaussians(one, single(mu, sigma), 0);
  CHECK(g1.mean == mu);
  CHECK(g1.cov == sigma);

  const ReferenceFrame f{{0.3, -0.7}, rotation(0.9)};
  const std::vector<ReferenceFrame> two{f, f};
  const Gaussian g2 = product_of_frame_gaussians(two, single(mu, sigma, 2), 0);
  const Gaussian ref = project_gaussian(f, mu, sigma);
  CHECK((g2.mean - ref.mean).norm() < 1e-12);
  CHECK((g2.cov - 0.5 * ref.cov).norm() < 1e-12);

  const std::vector<ReferenceFrame> wrong{f, f, f};
  CHECK(code_of([&] { product_of_frame_gaussians(wrong, single(mu, sigma, 2), 0); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([&] { product_of_frame_gaussians(one, TpGmmModel(), 0); }) == ErrorCode::UntrainedModel);
}

TEST_CASE("fuse_gaussians: matches grid moments of the pointwise product") {
  Rng rng(3);
  for (int i = 0; i < 5; ++i) {
    const auto [a, b] = oracle::random_planar_pair(rng);
    const Gaussian fused = fuse_gaussians(std::vector<Gaussian>{a, b});
    const auto m = oracle::grid_product_moments(a, b, 400);
    CHECK(oracle::relative_mean_error(m, fused) < 1e-3);
    CHECK(oracle::relative_cov_error(m, fused) < 1e-3);
    CHECK(Eigen::SelfAdjointEigenSolver<Mat3>(fused.cov).eigenvalues().minCoeff() > 0.0);
  }
}

TEST_CASE("mixture_density: peak, positivity and unit mass") {
  const Vec3 mu(0.5, 0.1, -0.2);
  const Mat3 sigma = (Mat3() << 0.01, 0.002, 0.0, 0.002, 0.004, 0.001, 0.0, 0.001, 0.003).finished();
  const std::vector<ReferenceFrame> one{ReferenceFrame::identity()};
  const TpGmmModel m = single(mu, sigma);
  const double peak = 1.0 / (std::pow(2 * std::numbers::pi, 1.5) * std::sqrt(sigma.determinant()));
  CHECK(mixture_density({mu(0), mu.tail<2>()}, one, m) == doctest::Approx(peak).epsilon(1e-12));

  const TpGmmModel two({0.3, 0.7}, {{mu}, {Vec3(0.6, 0.15, -0.1)}}, {{sigma}, {sigma * 0.5}});
  Rng rng(4);
  for (int i = 0; i < 100; ++i) {
    CHECK(mixture_density({rng.normal(0.5, 1), {rng.normal(), rng.normal()}}, one, two) >= 0.0);
  }
  // Midpoint quadrature over a box covering both components.
  const int n = 120;
  const Eigen::Vector3d lo(0.0, -0.2, -0.45), hi(1.0, 0.4, 0.15);
  const Eigen::Vector3d h = (hi - lo) / n;
  double mass = 0.0;
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      for (int c = 0; c < n; ++c) {
        mass += mixture_density({lo(0) + (a + 0.5) * h(0), {lo(1) + (b + 0.5) * h(1), lo(2) + (c + 0.5) * h(2)}},
                                one, two);
      }
    }
  }
  CHECK(mass * h.prod() == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("em_fit: identical points collapse to the regularized point mass") {
  TpDemo demo;
  demo.frames = {ReferenceFrame::identity()};
  for (int i = 0; i < 10; ++i) demo.points.push_back({0.25, {0.4, -0.1}});
  const EmResult r = em_fit(std::vector<TpDemo>{demo}, 1);
  CHECK((r.model.z_mu(0, 0) - Vec3(0.25, 0.4, -0.1)).norm() < 1e-15);
  CHECK((r.model.z_sigma(0, 0) - 1e-6 * Mat3::Identity()).norm() < 1e-15);
  CHECK(r.model.pi()[0] == 1.0);
}

TEST_CASE("em_fit: rejects too little data") {
  TpDemo demo;
  demo.frames = {ReferenceFrame::identity()};
  for (int i = 0; i < 11; ++i) demo.points.push_back({i / 10.0, {0.1 * i, 0.0}});
  CHECK(code_of([&] { em_fit(std::vector<TpDemo>{demo}, 3); }) == ErrorCode::InsufficientData);
  CHECK(code_of([&] { em_fit(std::vector<TpDemo>{}, 1); }) == ErrorCode::InsufficientData);
  demo.points.push_back({1.0, {0.0, 0.0}});
  CHECK_NOTHROW(em_fit(std::vector<TpDemo>{demo}, 3));
}

TEST_CASE("em_fit: one identity frame reproduces a standard GMM") {
  Rng rng(5);
  const auto demos = oracle::two_cluster_demos(rng, 300);
  const EmResult r = em_fit(demos, 2);
  const auto ref = oracle::standard_gmm_em(demos, 2, 1e-6, 500);
  for (int i = 0; i < 2; ++i) CHECK((r.model.z_mu(i, 0) - ref.means[static_cast<std::size_t>(i)]).norm() < 0.05);
  CHECK((r.model.z_mu(0, 0).tail<2>() - Eigen::Vector2d(0.0, 0.0)).norm() < 0.05);
  CHECK((r.model.z_mu(1, 0).tail<2>() - Eigen::Vector2d(1.0, 1.0)).norm() < 0.05);
}

TEST_CASE("em_fit: objective never decreases") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const auto demos = oracle::random_frame_demos(rng, 4, 50);
    EmConfig cfg;
    cfg.relative_tolerance = 0.0;
    cfg.max_iterations = 60;
    const EmResult r = em_fit(demos, 1 + static_cast<int>(seed % 5), cfg);
    for (std::size_t i = r.monotone_from + 1; i < r.objective_history.size(); ++i) {
      CHECK(r.objective_history[i] >= r.objective_history[i - 1] - 1e-9);
    }
    CHECK(r.objective_history.back() == doctest::Approx(em_objective(r.model, demos)).epsilon(1e-12));
  }
}

TEST_CASE("gmr: uncorrelated single component yields a constant path") {
  const Mat3 sigma = Eigen::Vector3d(0.1, 0.02, 0.03).asDiagonal();
  const std::vector<ReferenceFrame> one{ReferenceFrame::identity()};
  const Trajectory t = gmr_trajectory(single(Vec3(0.5, 0.2, -0.3), sigma), one);
  REQUIRE(t.size() == kTrajectoryLength);
  for (const auto& s : t.samples()) {
    CHECK(s.x == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(s.y == doctest::Approx(-0.3).epsilon(1e-15));
  }
}

TEST_CASE("gmr: single component matches the closed-form conditional") {
  Rng rng(6);
  for (int trial = 0; trial < 10; ++trial) {
    const Mat3 s0 = oracle::random_spd(rng, 0.01, 0.2);
    const Mat3 s1 = oracle::random_spd(rng, 0.01, 0.2);
    const Vec3 m0(rng.uniform01(), rng.normal(), rng.normal());
    const Vec3 m1(rng.uniform01(), rng.normal(), rng.normal());
    const TpGmmModel model({1.0}, {{m0, m1}}, {{s0, s1}});
    const std::vector<ReferenceFrame> frames{{{rng.normal(), rng.normal()}, rotation(rng.uniform(-3, 3))},
                                             {{rng.normal(), rng.normal()}, rotation(rng.uniform(-3, 3))}};
    const Trajectory traj = gmr_trajectory(model, frames);
    const Gaussian fused = oracle::fuse_by_inverse(
        {project_gaussian(frames[0], m0, s0), project_gaussian(frames[1], m1, s1)});
    for (const auto& s : traj.samples()) {
      const Eigen::Vector2d expected = oracle::conditional_mean(fused, s.t);
      CHECK(std::abs(s.x - expected.x()) < 1e-9);
      CHECK(std::abs(s.y - expected.y()) < 1e-9);
    }
  }
}

TEST_CASE("gmr: dominant component near its time center") {
  const Mat3 tight = Eigen::Vector3d(1e-3, 0.01, 0.01).asDiagonal();
  const TpGmmModel model({0.5, 0.5}, {{Vec3(0.1, 1.0, 2.0)}, {Vec3(0.9, -1.0, -2.0)}}, {{tight}, {tight}});
  const std::vector<ReferenceFrame> one{ReferenceFrame::identity()};
  std::vector<Gaussian> fused{product_of_frame_gaussians(one, model, 0), product_of_frame_gaussians(one, model, 1)};
  const auto h = gmr_weights(model, fused, 0.1);
  const Eigen::Vector2d y = h[0] * Eigen::Vector2d(1.0, 2.0) + h[1] * Eigen::Vector2d(-1.0, -2.0);
  CHECK((y - Eigen::Vector2d(1.0, 2.0)).norm() < 1e-3);
  for (double t : Trajectory::uniform_times(kTrajectoryLength)) {
    const auto w = gmr_weights(model, fused, t);
    CHECK(std::abs(w[0] + w[1] - 1.0) < 1e-12);
  }
  const Trajectory traj = gmr_trajectory(model, one, 11);
  CHECK(traj[1].x == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(code_of([&] { gmr_trajectory(TpGmmModel(), one); }) == ErrorCode::UntrainedModel);
}

TEST_CASE("gmr: common translation of equally oriented frames translates the output") {
  Rng rng(7);
  const auto demos = oracle::random_frame_demos(rng, 5, 60);
  const TpGmmModel model = em_fit(demos, 4).model;
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::Matrix2d a = rotation(rng.uniform(-3, 3));
    std::vector<ReferenceFrame> frames;
    for (int j = 0; j < 3; ++j) frames.push_back({{rng.normal(), rng.normal()}, a});
    const Eigen::Vector2d v(rng.normal(), rng.normal());
    auto moved = frames;
    for (auto& f : moved) f.b += v;
    const Trajectory t0 = gmr_trajectory(model, frames);
    const Trajectory t1 = gmr_trajectory(model, moved);
    for (std::size_t i = 0; i < t0.size(); ++i) {
      CHECK(std::abs(t1[i].x - t0[i].x - v.x()) < 1e-9);
      CHECK(std::abs(t1[i].y - t0[i].y - v.y()) < 1e-9);
    }
  }
}

TEST_CASE("log_likelihood: definition, peak and outliers") {
  const Vec3 mu(0.5, 0.1, -0.2);
  const Mat3 sigma = Eigen::Vector3d(0.02, 0.01, 0.01).asDiagonal();
  const TpGmmModel m = single(mu, sigma);
  TpDemo demo;
  demo.frames = {ReferenceFrame::identity()};
  for (int i = 0; i < 7; ++i) demo.points.push_back({mu(0), mu.tail<2>()});
  const double peak = 1.0 / (std::pow(2 * std::numbers::pi, 1.5) * std::sqrt(sigma.determinant()));
  CHECK(log_likelihood(m, std::vector<TpDemo>{demo}) == doctest::Approx(7 * std::log(peak)).epsilon(1e-12));

  Rng rng(8);
  const auto demos = oracle::random_frame_demos(rng, 3, 30);
  const TpGmmModel fit = em_fit(demos, 3).model;
  double direct = 0.0;
  for (const auto& d : demos) {
    for (const auto& p : d.points) direct += std::log(mixture_density(p, d.frames, fit));
  }
  const double ll = log_likelihood(fit, demos);
  CHECK(std::abs(ll - direct) <= 1e-12 * std::abs(direct));

  auto with_outlier = demos;
  with_outlier[0].points.push_back({0.5, {50.0, -50.0}});
  CHECK(log_likelihood(fit, with_outlier) < ll);
  CHECK(code_of([&] { log_likelihood(TpGmmModel(), demos); }) == ErrorCode::UntrainedModel);
}

TEST_CASE("model file round trip is exact") {
  Rng rng(9);
  const auto demos = oracle::random_frame_demos(rng, 3, 40);
  const TpGmmModel m = em_fit(demos, 3).model;
  TempDir dir("model");
  write_model(dir.path() / "model.json", m);
  const TpGmmModel back = read_model(dir.path() / "model.json");
  REQUIRE(back.components() == 3);
  REQUIRE(back.frames() == 3);
  CHECK(back.pi() == m.pi());
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      CHECK(back.z_mu(i, j) == m.z_mu(i, j));
      CHECK(back.z_sigma(i, j) == m.z_sigma(i, j));
    }
  }
  CHECK(code_of([&] { read_model(dir.path() / "none.json"); }) == ErrorCode::MissingFile);

  std::ofstream(dir.path() / "v2.json") << R"({"format":"tabletop-lfd-tpgmm","version":2,"K":1,"P":1,"D":2})";
  CHECK(code_of([&] { read_model(dir.path() / "v2.json"); }) == ErrorCode::SchemaVersionMismatch);
  std::ofstream(dir.path() / "bad.json") << "{not json";
  CHECK(code_of([&] { read_model(dir.path() / "bad.json"); }) == ErrorCode::ParseError);
}

TEST_CASE("trajectory demos carry frames at start, middle and end") {
  std::vector<TrajectorySample> s;
  for (double t : Trajectory::uniform_times(kTrajectoryLength)) s.push_back({t, t, t * t});
  const TpDemo d = tp_demo_from_trajectory(Trajectory(s));
  REQUIRE(d.frames.size() == 3);
  CHECK(d.frames[0].b == Eigen::Vector2d(s[0].x, s[0].y));
  CHECK(d.frames[1].b == Eigen::Vector2d(s[99].x, s[99].y));
  CHECK(d.frames[2].b == Eigen::Vector2d(s[199].x, s[199].y));
}
