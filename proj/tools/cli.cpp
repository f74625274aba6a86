#include <CLI11.hpp>
#include <fmt/format.h>

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "tabletop/augment.hpp"
#include "tabletop/dataset.hpp"
#include "tabletop/error.hpp"
#include "tabletop/experiment.hpp"
#include "tabletop/geometry.hpp"
#include "tabletop/perception.hpp"
#include "tabletop/png_io.hpp"
#include "tabletop/simulator.hpp"
#include "tabletop/tpgmm.hpp"

namespace fs = std::filesystem;
using namespace tabletop;

namespace {

constexpr std::uint64_t kDefaultSeed = 659;

void require_file(const fs::path& p) {
  if (!fs::exists(p)) throw Error(ErrorCode::MissingFile, "missing file: " + p.string());
}

ColorConfig load_colors(const std::string& path) {
  if (path.empty()) return ColorConfig::defaults();
  require_file(path);
  return read_color_config(path);
}

std::ofstream open_out(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + p.string());
  return out;
}

void print_seed(std::uint64_t seed) { fmt::print("seed {}\n", seed); }

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double stddev_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

struct CalibrateArgs {
  std::string pairs, out;
};

void run_calibrate(const CalibrateArgs& a) {
  require_file(a.pairs);
  const auto pairs = read_correspondences(a.pairs);
  const Homography h = estimate_homography(pairs);
  write_homography(a.out, h);
  double sq = 0.0;
  for (const auto& c : pairs) {
    const PixelPoint p = apply_homography(h, c.source);
    sq += (p.x - c.target.x) * (p.x - c.target.x) + (p.y - c.target.y) * (p.y - c.target.y);
  }
  fmt::print("pairs {}\nrms_reprojection_px {:.6g}\n", pairs.size(), std::sqrt(sq / static_cast<double>(pairs.size())));
}

struct WarpArgs {
  std::string image, homography, out;
  int size = 240;
  double scale_h = 0.0;
};

void run_warp(const WarpArgs& a) {
  require_file(a.image);
  require_file(a.homography);
  const Homography h = read_homography(a.homography);
  WarpOptions opt;
  opt.scale_h = a.scale_h;
  const VirtualImage v = warp_image(read_png(a.image), h, a.size, opt);
  write_png(a.out, v.pixels());
}

struct AugmentArgs {
  std::string manifest, out, colors;
  int n_ti = 10;
  int n_perlin = 10;
  std::uint64_t seed = kDefaultSeed;
};

void run_augment(const AugmentArgs& a) {
  require_file(a.manifest);
  print_seed(a.seed);
  const Dataset ds = load_dataset(a.manifest);
  AugmentPlan plan{a.n_ti, a.n_perlin, a.seed};
  AugmentContext ctx;
  ctx.colors = load_colors(a.colors);
  const std::size_t expected = ds.samples.size() * static_cast<std::size_t>(1 + std::max(0, a.n_ti) +
                                                                           std::max(0, a.n_perlin));
  DatasetWriter writer(a.out, ds.scale_h, ds.image_size, expected, a.colors, a.seed);
  augment_dataset_visit(ds, plan, ctx, [&](std::size_t, Demonstration&& d) { writer.add(d); });
  writer.finish();
  fmt::print("samples {}\n", writer.size());
}

struct GenDemosArgs {
  std::string out, kind = "mixed";
  std::size_t n = 100;
  double frame_noise = 0.01;
  double path_noise = 0.003;
  std::uint64_t seed = kDefaultSeed;
};

void run_gen_demos(const GenDemosArgs& a) {
  print_seed(a.seed);
  SyntheticConfig cfg;
  cfg.kind = parse_demo_kind(a.kind);
  cfg.frame_noise = a.frame_noise;
  cfg.path_noise = a.path_noise;
  save_dataset(generate_synthetic_demos(a.n, cfg, a.seed), a.out);
  fmt::print("samples {}\n", a.n);
}

struct FitArgs {
  std::string manifest, out;
  int k = 5;
  int max_iterations = 200;
};

void run_fit(const FitArgs& a) {
  require_file(a.manifest);
  const Dataset ds = load_dataset(a.manifest, {.images = false});
  std::vector<std::size_t> all(ds.samples.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  EmConfig cfg;
  cfg.max_iterations = a.max_iterations;
  const EmResult r = em_fit(tp_demos(ds, all), a.k, cfg);
  write_model(a.out, r.model);
  fmt::print("demos {}\niterations {}\nconverged {}\nlog_likelihood {:.10g}\n", ds.samples.size(), r.iterations,
             r.converged ? "yes" : "no", log_likelihood(r.model, tp_demos(ds, all)));
}

struct PredictArgs {
  std::string image, colors, out;
};

void run_predict(const PredictArgs& a) {
  require_file(a.image);
  BaselineConfig cfg;
  cfg.colors = load_colors(a.colors);
  const RgbImage px = read_png(a.image);
  const FramePrediction f =
      predict_frames(VirtualImage(px, static_cast<double>(px.width())), BaselinePredictor(cfg));
  const std::string line = fmt::format("{} {} {} {} {} {}\n", f.b1.x, f.b1.y, f.b2.x, f.b2.y, f.b3.x, f.b3.y);
  if (a.out.empty()) {
    fmt::print("{}", line);
  } else {
    open_out(a.out) << line;
  }
}

struct GenTrajArgs {
  std::string model, frames, out;
  std::size_t samples = kTrajectoryLength;
};

void run_gen_traj(const GenTrajArgs& a) {
  require_file(a.model);
  std::istringstream in(a.frames);
  in.imbue(std::locale::classic());
  std::array<double, 6> v{};
  for (double& x : v) {
    if (!(in >> x)) throw Error(ErrorCode::ParseError, "--frames needs six numbers: x1 y1 x2 y2 x3 y3");
  }
  std::string rest;
  if (in >> rest) throw Error(ErrorCode::ParseError, "--frames needs exactly six numbers");
  const TpGmmModel model = read_model(a.model);
  const auto frames = frames_from_origins({v[0], v[1]}, {v[2], v[3]}, {v[4], v[5]});
  write_trajectory_csv(a.out, gmr_trajectory(model, frames, a.samples));
}

struct SimulateArgs {
  std::string model, colors, out, kind = "both";
  int reps = 5;
  int episodes = 15;
  std::uint64_t seed = kDefaultSeed;
};

void run_simulate(const SimulateArgs& a) {
  require_file(a.model);
  print_seed(a.seed);
  const TpGmmModel model = read_model(a.model);
  if (model.frames() != 3) throw Error(ErrorCode::InvalidArgument, "simulation needs a three-frame model");
  std::vector<DirtType> kinds;
  if (a.kind == "marker" || a.kind == "both") kinds.push_back(DirtType::Marker);
  if (a.kind == "lentils" || a.kind == "both") kinds.push_back(DirtType::Lentils);
  if (kinds.empty()) throw Error(ErrorCode::ParseError, "unknown kind '" + a.kind + "'");

  BaselineConfig bc;
  bc.colors = load_colors(a.colors);
  const SceneParams params;
  bc.target_corner = params.target_corner;
  bc.sponge_radius = params.sponge_radius;
  const BaselinePredictor predictor(bc);
  const Pipeline pipe{&predictor, &model, bc.colors};

  std::ofstream out = open_out(a.out);
  out << "episode,repetition,metric_name,value\n";
  for (DirtType kind : kinds) {
    const auto episodes = run_episodes(kind, params, pipe, a.episodes, a.reps, a.seed);
    const char* name = kind == DirtType::Marker ? "m1" : "m2";
    std::vector<double> finals;
    for (std::size_t e = 0; e < episodes.size(); ++e) {
      const auto& values = episodes[e].series.values;
      for (std::size_t r = 0; r < values.size(); ++r) out << fmt::format("{},{},{},{}\n", e + 1, r + 1, name, values[r]);
      finals.push_back(values.back());
    }
    fmt::print("{} final mean {:.2f} stddev {:.2f} over {} episodes\n", name, mean_of(finals), stddev_of(finals),
               finals.size());
  }
  if (!out) throw Error(ErrorCode::IoError, "write failed: " + a.out);
}

struct MetricsArgs {
  std::string in, out;
};

void run_metrics(const MetricsArgs& a) {
  require_file(a.in);
  std::ifstream in(a.in);
  std::string line;
  std::getline(in, line);
  if (line != "episode,repetition,metric_name,value") throw Error(ErrorCode::ParseError, "unexpected metrics header");
  std::map<std::pair<std::string, int>, std::vector<double>> cells;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    if (f.size() != 4) throw Error(ErrorCode::ParseError, fmt::format("row {}: expected 4 fields", row));
    try {
      cells[{f[2], std::stoi(f[1])}].push_back(std::stod(f[3]));
    } catch (const std::exception&) {
      throw Error(ErrorCode::ParseError, fmt::format("row {}: bad number", row));
    }
  }
  std::ostringstream table;
  table << "metric_name,repetition,episodes,mean,stddev\n";
  for (const auto& [key, values] : cells) {
    table << fmt::format("{},{},{},{},{}\n", key.first, key.second, values.size(), mean_of(values), stddev_of(values));
  }
  fmt::print("{}", table.str());
  if (!a.out.empty()) open_out(a.out) << table.str();
}

struct CurveArgs {
  std::string manifest, out;
  std::vector<std::size_t> counts{10, 20, 30, 40, 50, 60, 70, 80};
  int trials = 10;
  int k = 5;
  double validation_fraction = 0.2;
  std::uint64_t seed = kDefaultSeed;
};

void run_demos_curve(const CurveArgs& a) {
  require_file(a.manifest);
  print_seed(a.seed);
  const Dataset ds = load_dataset(a.manifest, {.images = false});
  CurveConfig cfg;
  cfg.counts = a.counts;
  cfg.trials = a.trials;
  cfg.components = a.k;
  cfg.validation_fraction = a.validation_fraction;
  cfg.seed = a.seed;
  const auto curve = demos_curve(ds, cfg);
  std::ofstream out = open_out(a.out);
  out << "count,mean,stddev";
  for (int t = 1; t <= a.trials; ++t) out << ",trial_" << t;
  out << '\n';
  for (const auto& p : curve) {
    out << fmt::format("{},{},{}", p.count, p.mean, p.stddev);
    for (double e : p.trial_errors) out << fmt::format(",{}", e);
    out << '\n';
    fmt::print("{:>4} demos: {:.5f} +- {:.5f} m\n", p.count, p.mean, p.stddev);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tabletop cleaning from demonstrations: calibration, augmentation, TP-GMM and simulation"};
  app.name("tabletop-lfd");
  app.require_subcommand(1);

  CalibrateArgs cal;
  auto* c = app.add_subcommand("calibrate", "Fit a homography from point pairs");
  c->add_option("--pairs", cal.pairs, "File of `sx sy tx ty` lines")->required();
  c->add_option("--out", cal.out, "Output homography file")->required();

  WarpArgs warp;
  auto* w = app.add_subcommand("warp", "Warp a camera image into the virtual view");
  w->add_option("--image", warp.image, "Input PNG")->required();
  w->add_option("--homography", warp.homography, "Homography file from calibrate")->required();
  w->add_option("--out", warp.out, "Output PNG")->required();
  w->add_option("--size", warp.size, "Virtual image side in pixels")->capture_default_str();
  w->add_option("--scale-h", warp.scale_h, "Pixels per meter (default: size)");

  AugmentArgs aug;
  auto* a = app.add_subcommand("augment", "Write an augmented copy of a dataset");
  a->add_option("--manifest", aug.manifest, "Input manifest or dataset directory")->required();
  a->add_option("--out", aug.out, "Output dataset directory")->required();
  a->add_option("--n-ti", aug.n_ti, "Illumination + translation copies per sample")->capture_default_str();
  a->add_option("--n-perlin", aug.n_perlin, "Perlin background copies per sample")->capture_default_str();
  a->add_option("--colors", aug.colors, "Color config JSON");
  a->add_option("--seed", aug.seed, "Master seed")->capture_default_str();

  GenDemosArgs gen;
  auto* g = app.add_subcommand("gen-demos", "Generate synthetic demonstrations");
  g->add_option("--out", gen.out, "Output dataset directory")->required();
  g->add_option("--n", gen.n, "Number of demonstrations")->capture_default_str();
  g->add_option("--kind", gen.kind, "marker | lentils | mixed")->capture_default_str();
  g->add_option("--frame-noise", gen.frame_noise, "Frame origin noise, meters")->capture_default_str();
  g->add_option("--path-noise", gen.path_noise, "Path wobble noise, meters")->capture_default_str();
  g->add_option("--seed", gen.seed, "Seed")->capture_default_str();

  FitArgs fit;
  auto* f = app.add_subcommand("fit-gmm", "Fit a TP-GMM to a dataset");
  f->add_option("--manifest", fit.manifest, "Manifest or dataset directory")->required();
  f->add_option("--out", fit.out, "Output model JSON")->required();
  f->add_option("--k", fit.k, "Number of components")->capture_default_str();
  f->add_option("--max-iter", fit.max_iterations, "EM iteration cap")->capture_default_str();

  PredictArgs pred;
  auto* p = app.add_subcommand("predict", "Predict frame origins from a virtual image");
  p->add_option("--image", pred.image, "Virtual-view PNG")->required();
  p->add_option("--colors", pred.colors, "Color config JSON");
  p->add_option("--out", pred.out, "Output file (default: stdout)");

  GenTrajArgs gt;
  auto* t = app.add_subcommand("gen-traj", "Generate a trajectory for given frame origins");
  t->add_option("--model", gt.model, "Model JSON")->required();
  t->add_option("--frames", gt.frames, "\"x1 y1 x2 y2 x3 y3\" in meters")->required();
  t->add_option("--out", gt.out, "Output trajectory CSV")->required();
  t->add_option("--samples", gt.samples, "Number of samples")->capture_default_str();

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "Run cleaning episodes in the tabletop simulator");
  s->add_option("--model", sim.model, "Model JSON")->required();
  s->add_option("--kind", sim.kind, "marker | lentils | both")->capture_default_str();
  s->add_option("--reps", sim.reps, "Repetitions per episode")->capture_default_str();
  s->add_option("--episodes", sim.episodes, "Episodes per kind")->capture_default_str();
  s->add_option("--colors", sim.colors, "Color config JSON");
  s->add_option("--seed", sim.seed, "Seed")->capture_default_str();
  s->add_option("--out", sim.out, "Output metrics CSV")->required();

  MetricsArgs met;
  auto* m = app.add_subcommand("metrics", "Summarize a metrics CSV per repetition");
  m->add_option("--in", met.in, "metrics.csv from simulate")->required();
  m->add_option("--out", met.out, "Optional summary CSV");

  CurveArgs curve;
  auto* e = app.add_subcommand("experiment", "Experiments");
  e->require_subcommand(1);
  auto* dc = e->add_subcommand("demos-curve", "Held-out GMR error versus number of training demonstrations");
  dc->add_option("--manifest", curve.manifest, "Manifest or dataset directory")->required();
  dc->add_option("--counts", curve.counts, "Comma-separated training set sizes")->delimiter(',')->capture_default_str();
  dc->add_option("--trials", curve.trials, "Trials per count")->capture_default_str();
  dc->add_option("--k", curve.k, "Number of components")->capture_default_str();
  dc->add_option("--validation-fraction", curve.validation_fraction, "Held-out fraction")->capture_default_str();
  dc->add_option("--seed", curve.seed, "Seed")->capture_default_str();
  dc->add_option("--out", curve.out, "Output curve CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    if (err.get_exit_code() == 0) return app.exit(err);
    std::cerr << "usage error: " << err.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (c->parsed()) run_calibrate(cal);
    if (w->parsed()) run_warp(warp);
    if (a->parsed()) run_augment(aug);
    if (g->parsed()) run_gen_demos(gen);
    if (f->parsed()) run_fit(fit);
    if (p->parsed()) run_predict(pred);
    if (t->parsed()) run_gen_traj(gt);
    if (s->parsed()) run_simulate(sim);
    if (m->parsed()) run_metrics(met);
    if (dc->parsed()) run_demos_curve(curve);
  } catch (const Error& err) {
    std::cerr << "ERROR " << error_code_name(err.code()) << ": " << err.what() << '\n';
    return 1;
  } catch (const std::filesystem::filesystem_error& err) {
    std::cerr << "ERROR IoError: " << err.what() << '\n';
    return 1;
  }
  return 0;
}
