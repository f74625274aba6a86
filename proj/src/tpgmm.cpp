#include "tabletop/tpgmm.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>

#include "tabletop/error.hpp"
#include "tabletop/parallel.hpp"

namespace tabletop {
namespace {

using nlohmann::json;

constexpr double kLog2Pi = 1.8378770664093454835606594728112;
constexpr int kModelVersion = 1;
constexpr const char* kModelFormat = "tabletop-lfd-tpgmm";

bool symmetric(const Mat3& m) { return (m - m.transpose()).cwiseAbs().maxCoeff() <= 1e-9; }

struct Chol {
  Eigen::LLT<Mat3> llt;
  double log_det = 0.0;
  bool ok = false;
};

Chol factor(const Mat3& cov) {
  Chol c;
  if (!cov.allFinite() || !symmetric(cov)) return c;
  c.llt.compute(cov);
  if (c.llt.info() != Eigen::Success) return c;
  const Vec3 diag = c.llt.matrixLLT().diagonal();
  if ((diag.array() <= 0.0).any()) return c;
  c.log_det = 2.0 * diag.array().log().sum();
  c.ok = true;
  return c;
}

Chol factor_or_throw(const Mat3& cov, const char* what) {
  Chol c = factor(cov);
  if (!c.ok) throw Error(ErrorCode::NonSpdCovariance, std::string(what) + " is not symmetric positive-definite");
  return c;
}

double log_density(const Vec3& x, const Vec3& mean, const Chol& c) {
  const Vec3 z = c.llt.matrixL().solve(x - mean);
  return -0.5 * (kPointDim * kLog2Pi + c.log_det + z.squaredNorm());
}

double log_sum_exp(std::span<const double> v) {
  const double m = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

Mat3 symmetrize(const Mat3& m) { return 0.5 * (m + m.transpose()); }

void check_frames(std::span<const ReferenceFrame> frames, const TpGmmModel& model) {
  model.require_trained();
  if (static_cast<int>(frames.size()) != model.frames()) {
    throw Error(ErrorCode::InvalidArgument,
                fmt::format("model expects {} frames, got {}", model.frames(), frames.size()));
  }
  for (const auto& f : frames) f.validate();
}

std::vector<Gaussian> fuse_all(std::span<const ReferenceFrame> frames, const TpGmmModel& model) {
  std::vector<Gaussian> out;
  out.reserve(static_cast<std::size_t>(model.components()));
  for (int i = 0; i < model.components(); ++i) {
    out.push_back(product_of_frame_gaussians(frames, model, i));
  }
  return out;
}

// ---- EM internals ----

struct Workspace {
  std::size_t n = 0;   // data points
  std::size_t p = 0;   // frames
  std::vector<Vec3> local;  // local[n * p + j]: point n seen from frame j
  std::vector<double> time;

  const Vec3& at(std::size_t i, std::size_t j) const { return local[i * p + j]; }
};

Workspace prepare(std::span<const TpDemo> demos) {
  Workspace ws;
  if (demos.empty()) throw Error(ErrorCode::InsufficientData, "no demonstrations");
  ws.p = demos.front().frames.size();
  if (ws.p == 0) throw Error(ErrorCode::InvalidArgument, "demonstrations carry no frames");
  for (const auto& d : demos) {
    if (d.frames.size() != ws.p) {
      throw Error(ErrorCode::InvalidArgument, "all demonstrations must carry the same number of frames");
    }
    for (const auto& f : d.frames) f.validate();
    ws.n += d.points.size();
  }
  ws.local.reserve(ws.n * ws.p);
  ws.time.reserve(ws.n);
  for (const auto& d : demos) {
    for (const auto& pt : d.points) {
      const Vec3 xi = pt.xi();
      if (!xi.allFinite()) throw Error(ErrorCode::InvalidArgument, "non-finite data point");
      ws.time.push_back(pt.t);
      for (const auto& f : d.frames) ws.local.push_back(f.to_local(xi));
    }
  }
  return ws;
}

struct Params {
  std::vector<double> pi;
  std::vector<std::vector<Vec3>> mu;
  std::vector<std::vector<Mat3>> sigma;
};

// Component statistics from one weighted subset, per frame.
// Closest covariance with every eigenvalue >= eps, which is also the
// constrained maximizer of the M-step. Untouched when already above the floor.
Mat3 floor_eigenvalues(const Mat3& s, double eps) {
  const Eigen::SelfAdjointEigenSolver<Mat3> es(s);
  Eigen::Vector3d lambda = es.eigenvalues();
  if (lambda.minCoeff() >= eps) return s;
  lambda = lambda.cwiseMax(eps);
  return symmetrize(es.eigenvectors() * lambda.asDiagonal() * es.eigenvectors().transpose());
}

void moments(const Workspace& ws, std::span<const double> weight, double mass, double eps,
             std::vector<Vec3>& mu, std::vector<Mat3>& sigma) {
  mu.assign(ws.p, Vec3::Zero());
  sigma.assign(ws.p, Mat3::Zero());
  for (std::size_t j = 0; j < ws.p; ++j) {
    Vec3 m = Vec3::Zero();
    for (std::size_t i = 0; i < ws.n; ++i) {
      if (weight[i] != 0.0) m += weight[i] * ws.at(i, j);
    }
    m /= mass;
    Mat3 s = Mat3::Zero();
    for (std::size_t i = 0; i < ws.n; ++i) {
      if (weight[i] == 0.0) continue;
      const Vec3 d = ws.at(i, j) - m;
      s += weight[i] * (d * d.transpose());
    }
    mu[j] = m;
    sigma[j] = floor_eigenvalues(symmetrize(s / mass), eps);
  }
}

Params initialize(const Workspace& ws, int k, double eps) {
  const auto kk = static_cast<std::size_t>(k);
  std::vector<std::size_t> bin(ws.n);
  std::vector<std::size_t> counts(kk, 0);
  for (std::size_t i = 0; i < ws.n; ++i) {
    const double t = std::clamp(ws.time[i], 0.0, 1.0);
    bin[i] = std::min(kk - 1, static_cast<std::size_t>(std::floor(t * k)));
    ++counts[bin[i]];
  }
  const bool sparse = std::any_of(counts.begin(), counts.end(),
                                  [](std::size_t c) { return c < static_cast<std::size_t>(kPointDim + 1); });
  if (sparse) {
    // Equal-width bins leave some component without data: split by time rank.
    std::vector<std::size_t> order(ws.n);
    for (std::size_t i = 0; i < ws.n; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return ws.time[a] < ws.time[b]; });
    counts.assign(kk, 0);
    for (std::size_t r = 0; r < ws.n; ++r) {
      bin[order[r]] = r * kk / ws.n;
      ++counts[bin[order[r]]];
    }
  }

  Params p;
  p.pi.resize(kk);
  p.mu.resize(kk);
  p.sigma.resize(kk);
  std::vector<double> w(ws.n);
  for (std::size_t c = 0; c < kk; ++c) {
    for (std::size_t i = 0; i < ws.n; ++i) w[i] = bin[i] == c ? 1.0 : 0.0;
    const double mass = static_cast<double>(counts[c]);
    p.pi[c] = mass / static_cast<double>(ws.n);
    moments(ws, w, mass, eps, p.mu[c], p.sigma[c]);
  }
  return p;
}

// Fills log_joint (n x k, row-major) with log pi_i + sum_j log N(X_nj | i) and
// returns per-point log-sum-exp values.
std::vector<double> expectation(const Workspace& ws, const Params& p, std::vector<double>& log_joint) {
  const std::size_t k = p.pi.size();
  std::vector<std::vector<Chol>> chol(k, std::vector<Chol>(ws.p));
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < ws.p; ++j) {
      chol[i][j] = factor_or_throw(p.sigma[i][j], "component covariance");
    }
  }
  log_joint.assign(ws.n * k, 0.0);
  std::vector<double> lse(ws.n);
  constexpr std::size_t kChunk = 512;
  const std::size_t chunks = (ws.n + kChunk - 1) / kChunk;
  parallel_for(chunks, [&](std::size_t c) {
    const std::size_t end = std::min(ws.n, (c + 1) * kChunk);
    for (std::size_t n = c * kChunk; n < end; ++n) {
      double* row = &log_joint[n * k];
      for (std::size_t i = 0; i < k; ++i) {
        double v = p.pi[i] > 0.0 ? std::log(p.pi[i]) : -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < ws.p; ++j) v += log_density(ws.at(n, j), p.mu[i][j], chol[i][j]);
        row[i] = v;
      }
      lse[n] = log_sum_exp(std::span<const double>(row, k));
    }
  });
  return lse;
}

double sum_fixed_order(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

}  // namespace

// ---- frames and Gaussians ----

void ReferenceFrame::validate() const {
  if (!b.allFinite() || !A.allFinite()) {
    throw Error(ErrorCode::InvalidArgument, "reference frame has non-finite entries");
  }
  const double ortho = (A.transpose() * A - Eigen::Matrix2d::Identity()).cwiseAbs().maxCoeff();
  if (ortho > 1e-9 || std::abs(A.determinant() - 1.0) > 1e-9) {
    throw Error(ErrorCode::InvalidArgument, "reference frame orientation is not a rotation");
  }
}

Mat3 ReferenceFrame::lifted_rotation() const {
  Mat3 m = Mat3::Identity();
  m.block<2, 2>(1, 1) = A;
  return m;
}

Vec3 ReferenceFrame::lifted_origin() const { return {0.0, b.x(), b.y()}; }

Vec3 ReferenceFrame::to_local(const Vec3& xi) const {
  return lifted_rotation().transpose() * (xi - lifted_origin());
}

std::array<Eigen::Matrix2d, 3> frame_orientations(const Eigen::Vector2d& b1, const Eigen::Vector2d& b2,
                                                  const Eigen::Vector2d& b3) {
  const auto rotation = [](const Eigen::Vector2d& d, const char* which) {
    const double len = d.norm();
    if (!(len > 1e-9)) {
      throw Error(ErrorCode::DegenerateFrameGeometry, fmt::format("frame origins {} coincide", which));
    }
    const double c = d.x() / len;
    const double s = d.y() / len;
    Eigen::Matrix2d a;
    a << c, -s, s, c;
    return a;
  };
  const Eigen::Matrix2d a1 = rotation(b2 - b1, "b1 and b2");
  const Eigen::Matrix2d a2 = rotation(b3 - b2, "b2 and b3");
  return {a1, a2, a2};
}

std::vector<ReferenceFrame> frames_from_origins(const Eigen::Vector2d& b1, const Eigen::Vector2d& b2,
                                                const Eigen::Vector2d& b3) {
  const auto a = frame_orientations(b1, b2, b3);
  return {ReferenceFrame{b1, a[0]}, ReferenceFrame{b2, a[1]}, ReferenceFrame{b3, a[2]}};
}

Gaussian project_gaussian(const ReferenceFrame& frame, const Vec3& z_mu, const Mat3& z_sigma) {
  frame.validate();
  factor_or_throw(z_sigma, "frame covariance");
  const Mat3 a = frame.lifted_rotation();
  return {a * z_mu + frame.lifted_origin(), symmetrize(a * z_sigma * a.transpose())};
}

Gaussian fuse_gaussians(std::span<const Gaussian> parts) {
  if (parts.empty()) throw Error(ErrorCode::InvalidArgument, "nothing to fuse");
  if (parts.size() == 1) {
    factor_or_throw(parts.front().cov, "covariance");
    return parts.front();
  }
  Mat3 precision_sum = Mat3::Zero();
  Vec3 weighted = Vec3::Zero();
  for (const auto& g : parts) {
    const Chol c = factor_or_throw(g.cov, "covariance");
    const Mat3 lambda = symmetrize(c.llt.solve(Mat3::Identity()));
    precision_sum += lambda;
    weighted += lambda * g.mean;
  }
  const Eigen::LLT<Mat3> sum_llt(precision_sum);
  if (sum_llt.info() != Eigen::Success || !precision_sum.allFinite()) {
    throw Error(ErrorCode::SingularPrecisionSum, "sum of precisions is not invertible");
  }
  Gaussian out;
  out.cov = symmetrize(sum_llt.solve(Mat3::Identity()));
  out.mean = out.cov * weighted;
  if (!factor(out.cov).ok) throw Error(ErrorCode::SingularPrecisionSum, "fused covariance is not SPD");
  return out;
}

double gaussian_log_density(const Vec3& x, const Gaussian& g) {
  return log_density(x, g.mean, factor_or_throw(g.cov, "covariance"));
}

// ---- model ----

TpGmmModel::TpGmmModel(std::vector<double> pi, std::vector<std::vector<Vec3>> z_mu,
                       std::vector<std::vector<Mat3>> z_sigma)
    : pi_(std::move(pi)), z_mu_(std::move(z_mu)), z_sigma_(std::move(z_sigma)) {
  if (pi_.empty()) throw Error(ErrorCode::InvalidArgument, "model needs at least one component");
  if (z_mu_.size() != pi_.size() || z_sigma_.size() != pi_.size()) {
    throw Error(ErrorCode::InvalidArgument, "component count mismatch");
  }
  const std::size_t p = z_mu_.front().size();
  if (p == 0) throw Error(ErrorCode::InvalidArgument, "model needs at least one frame");
  double total = 0.0;
  for (std::size_t i = 0; i < pi_.size(); ++i) {
    if (!(pi_[i] >= 0.0)) throw Error(ErrorCode::InvalidArgument, "mixture weights must be non-negative");
    total += pi_[i];
    if (z_mu_[i].size() != p || z_sigma_[i].size() != p) {
      throw Error(ErrorCode::InvalidArgument, "frame count mismatch");
    }
    for (std::size_t j = 0; j < p; ++j) {
      if (!z_mu_[i][j].allFinite()) throw Error(ErrorCode::InvalidArgument, "non-finite mean");
      factor_or_throw(z_sigma_[i][j], fmt::format("Z_sigma[{}][{}]", i, j).c_str());
    }
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw Error(ErrorCode::InvalidArgument, fmt::format("mixture weights sum to {}", total));
  }
}

void TpGmmModel::require_trained() const {
  if (!trained()) throw Error(ErrorCode::UntrainedModel, "model has not been trained");
}

Gaussian product_of_frame_gaussians(std::span<const ReferenceFrame> frames, const TpGmmModel& model,
                                    int component) {
  check_frames(frames, model);
  if (component < 0 || component >= model.components()) {
    throw Error(ErrorCode::InvalidArgument, "component index out of range");
  }
  std::vector<Gaussian> parts;
  parts.reserve(frames.size());
  for (std::size_t j = 0; j < frames.size(); ++j) {
    const int jj = static_cast<int>(j);
    parts.push_back(project_gaussian(frames[j], model.z_mu(component, jj), model.z_sigma(component, jj)));
  }
  return fuse_gaussians(parts);
}

double mixture_log_density(const DataPoint& x, std::span<const ReferenceFrame> frames,
                           const TpGmmModel& model) {
  const auto fused = fuse_all(frames, model);
  std::vector<double> terms(fused.size());
  for (std::size_t i = 0; i < fused.size(); ++i) {
    const double w = model.pi()[i];
    terms[i] = w > 0.0 ? std::log(w) + gaussian_log_density(x.xi(), fused[i])
                       : -std::numeric_limits<double>::infinity();
  }
  return log_sum_exp(terms);
}

double mixture_density(const DataPoint& x, std::span<const ReferenceFrame> frames, const TpGmmModel& model) {
  return std::exp(mixture_log_density(x, frames, model));
}

TpDemo tp_demo_from_trajectory(const Trajectory& traj) {
  if (traj.size() < 3) throw Error(ErrorCode::InvariantViolation, "trajectory too short for three frames");
  TpDemo demo;
  demo.points.reserve(traj.size());
  for (const auto& s : traj.samples()) demo.points.push_back({s.t, {s.x, s.y}});
  const auto& first = traj[0];
  const auto& mid = traj[(traj.size() - 1) / 2];
  const auto& last = traj[traj.size() - 1];
  demo.frames = frames_from_origins({first.x, first.y}, {mid.x, mid.y}, {last.x, last.y});
  return demo;
}

double log_likelihood(const TpGmmModel& model, std::span<const TpDemo> demos) {
  model.require_trained();
  double total = 0.0;
  for (const auto& d : demos) {
    check_frames(d.frames, model);
    const auto fused = fuse_all(d.frames, model);
    std::vector<Chol> chol;
    chol.reserve(fused.size());
    for (const auto& g : fused) chol.push_back(factor_or_throw(g.cov, "fused covariance"));
    std::vector<double> terms(fused.size());
    for (const auto& pt : d.points) {
      for (std::size_t i = 0; i < fused.size(); ++i) {
        const double w = model.pi()[i];
        terms[i] = w > 0.0 ? std::log(w) + log_density(pt.xi(), fused[i].mean, chol[i])
                           : -std::numeric_limits<double>::infinity();
      }
      total += log_sum_exp(terms);
    }
  }
  return total;
}

double em_objective(const TpGmmModel& model, std::span<const TpDemo> demos) {
  model.require_trained();
  const Workspace ws = prepare(demos);
  if (static_cast<int>(ws.p) != model.frames()) {
    throw Error(ErrorCode::InvalidArgument, "frame count does not match the model");
  }
  Params p;
  p.pi = model.pi();
  for (int i = 0; i < model.components(); ++i) {
    std::vector<Vec3> mu;
    std::vector<Mat3> sigma;
    for (int j = 0; j < model.frames(); ++j) {
      mu.push_back(model.z_mu(i, j));
      sigma.push_back(model.z_sigma(i, j));
    }
    p.mu.push_back(std::move(mu));
    p.sigma.push_back(std::move(sigma));
  }
  std::vector<double> scratch;
  return sum_fixed_order(expectation(ws, p, scratch));
}

EmResult em_fit(std::span<const TpDemo> demos, int components, const EmConfig& config) {
  if (components < 1) throw Error(ErrorCode::InvalidArgument, "component count must be >= 1");
  if (config.max_iterations < 1 || !(config.regularization > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "invalid EM configuration");
  }
  const Workspace ws = prepare(demos);
  const std::size_t k = static_cast<std::size_t>(components);
  const std::size_t needed = k * static_cast<std::size_t>(kSpatialDim + 2);
  if (ws.n < needed) {
    throw Error(ErrorCode::InsufficientData,
                fmt::format("{} data points for {} components; need at least {}", ws.n, k, needed));
  }

  Params p = initialize(ws, components, config.regularization);
  std::vector<double> log_joint;
  std::vector<double> lse = expectation(ws, p, log_joint);

  EmResult result;
  result.objective_history.push_back(sum_fixed_order(lse));
  std::vector<int> reinit_count(k, 0);
  std::vector<double> gamma(ws.n);
  const double n_total = static_cast<double>(ws.n);

  for (int it = 1; it <= config.max_iterations; ++it) {
    bool reinitialized = false;
    for (std::size_t i = 0; i < k; ++i) {
      double mass = 0.0;
      for (std::size_t n = 0; n < ws.n; ++n) {
        gamma[n] = std::exp(log_joint[n * k + i] - lse[n]);
        mass += gamma[n];
      }
      if (mass < config.collapse_fraction * n_total) {
        if (reinit_count[i] > 0) {
          throw Error(ErrorCode::CollapsedComponent,
                      fmt::format("component {} collapsed again after reinitialization", i));
        }
        ++reinit_count[i];
        ++result.reinitializations;
        reinitialized = true;
        // Restart the component on the worst-explained point with the global spread.
        const std::size_t worst =
            static_cast<std::size_t>(std::min_element(lse.begin(), lse.end()) - lse.begin());
        std::vector<double> all(ws.n, 1.0);
        std::vector<Vec3> mu;
        moments(ws, all, n_total, config.regularization, mu, p.sigma[i]);
        for (std::size_t j = 0; j < ws.p; ++j) p.mu[i][j] = ws.at(worst, j);
        p.pi[i] = 1.0 / static_cast<double>(k);
        continue;
      }
      p.pi[i] = mass / n_total;
      moments(ws, gamma, mass, config.regularization, p.mu[i], p.sigma[i]);
    }
    if (reinitialized) {
      double total = 0.0;
      for (double w : p.pi) total += w;
      for (double& w : p.pi) w /= total;
    }

    const double prev = result.objective_history.back();
    lse = expectation(ws, p, log_joint);
    const double obj = sum_fixed_order(lse);
    result.objective_history.push_back(obj);
    result.iterations = it;
    if (reinitialized) {
      result.monotone_from = result.objective_history.size() - 1;
      continue;
    }
    if (obj - prev < config.relative_tolerance * std::max(std::abs(prev), 1e-300)) {
      result.converged = true;
      break;
    }
  }

  result.model = TpGmmModel(std::move(p.pi), std::move(p.mu), std::move(p.sigma));
  return result;
}

std::vector<double> gmr_weights(const TpGmmModel& model, std::span<const Gaussian> fused, double t) {
  model.require_trained();
  std::vector<double> w(fused.size());
  for (std::size_t i = 0; i < fused.size(); ++i) {
    const double var = fused[i].cov(0, 0);
    const double d = t - fused[i].mean(0);
    const double pi = model.pi()[i];
    w[i] = pi > 0.0 ? std::log(pi) - 0.5 * (kLog2Pi + std::log(var) + d * d / var)
                    : -std::numeric_limits<double>::infinity();
  }
  const double norm = log_sum_exp(w);
  for (double& x : w) x = std::exp(x - norm);
  return w;
}

Trajectory gmr_trajectory(const TpGmmModel& model, std::span<const ReferenceFrame> frames,
                          std::size_t n_samples) {
  check_frames(frames, model);
  if (n_samples < 2) throw Error(ErrorCode::InvalidArgument, "need at least two samples");
  const auto fused = fuse_all(frames, model);
  std::vector<TrajectorySample> out;
  out.reserve(n_samples);
  for (double t : Trajectory::uniform_times(n_samples)) {
    const auto h = gmr_weights(model, fused, t);
    Eigen::Vector2d y = Eigen::Vector2d::Zero();
    for (std::size_t i = 0; i < fused.size(); ++i) {
      const auto& g = fused[i];
      const Eigen::Vector2d cond =
          g.mean.tail<2>() + g.cov.block<2, 1>(1, 0) / g.cov(0, 0) * (t - g.mean(0));
      y += h[i] * cond;
    }
    out.push_back({t, y.x(), y.y()});
  }
  return Trajectory(std::move(out));
}

// ---- persistence ----

void write_model(const std::filesystem::path& path, const TpGmmModel& model) {
  model.require_trained();
  json doc;
  doc["format"] = kModelFormat;
  doc["version"] = kModelVersion;
  doc["K"] = model.components();
  doc["P"] = model.frames();
  doc["D"] = kSpatialDim;
  doc["pi"] = model.pi();
  json mus = json::array();
  json sigmas = json::array();
  for (int i = 0; i < model.components(); ++i) {
    json mu_row = json::array();
    json sigma_row = json::array();
    for (int j = 0; j < model.frames(); ++j) {
      const Vec3& m = model.z_mu(i, j);
      mu_row.push_back({m(0), m(1), m(2)});
      const Mat3& s = model.z_sigma(i, j);
      json rows = json::array();
      for (int r = 0; r < 3; ++r) rows.push_back({s(r, 0), s(r, 1), s(r, 2)});
      sigma_row.push_back(rows);
    }
    mus.push_back(mu_row);
    sigmas.push_back(sigma_row);
  }
  doc["Z_mu"] = mus;
  doc["Z_sigma"] = sigmas;
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write: " + path.string());
  out << doc.dump(1) << '\n';
  if (!out) throw Error(ErrorCode::IoError, "write failed: " + path.string());
}

TpGmmModel read_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MissingFile, "missing file: " + path.string());
  try {
    const json doc = json::parse(in);
    const int version = doc.at("version").get<int>();
    if (version != kModelVersion) {
      throw Error(ErrorCode::SchemaVersionMismatch,
                  fmt::format("model version {} is not supported (expected {})", version, kModelVersion));
    }
    if (doc.at("D").get<int>() != kSpatialDim) {
      throw Error(ErrorCode::InvariantViolation, "model spatial dimension must be 2");
    }
    const auto k = doc.at("K").get<std::size_t>();
    const auto p = doc.at("P").get<std::size_t>();
    auto pi = doc.at("pi").get<std::vector<double>>();
    const auto& mus = doc.at("Z_mu");
    const auto& sigmas = doc.at("Z_sigma");
    if (pi.size() != k || mus.size() != k || sigmas.size() != k) {
      throw Error(ErrorCode::InvariantViolation, "component arrays disagree with K");
    }
    std::vector<std::vector<Vec3>> z_mu(k);
    std::vector<std::vector<Mat3>> z_sigma(k);
    for (std::size_t i = 0; i < k; ++i) {
      if (mus[i].size() != p || sigmas[i].size() != p) {
        throw Error(ErrorCode::InvariantViolation, "frame arrays disagree with P");
      }
      for (std::size_t j = 0; j < p; ++j) {
        const auto m = mus[i][j].get<std::vector<double>>();
        if (m.size() != 3) throw Error(ErrorCode::InvariantViolation, "Z_mu entries must have 3 values");
        z_mu[i].emplace_back(m[0], m[1], m[2]);
        const auto rows = sigmas[i][j].get<std::vector<std::vector<double>>>();
        if (rows.size() != 3) throw Error(ErrorCode::InvariantViolation, "Z_sigma entries must be 3x3");
        Mat3 s;
        for (int r = 0; r < 3; ++r) {
          if (rows[static_cast<std::size_t>(r)].size() != 3) {
            throw Error(ErrorCode::InvariantViolation, "Z_sigma entries must be 3x3");
          }
          for (int c = 0; c < 3; ++c) s(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
        }
        z_sigma[i].push_back(s);
      }
    }
    return TpGmmModel(std::move(pi), std::move(z_mu), std::move(z_sigma));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
}

}  // namespace tabletop
