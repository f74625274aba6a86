#include "tabletop/experiment.hpp"

#include <fmt/format.h>

#include <cmath>

#include "tabletop/error.hpp"
#include "tabletop/parallel.hpp"
#include "tabletop/rng.hpp"

namespace tabletop {

double heldout_error(const TpGmmModel& model, const Dataset& ds, std::span<const std::size_t> indices) {
  if (indices.empty()) throw Error(ErrorCode::InvalidArgument, "no held-out samples");
  double total = 0.0;
  for (std::size_t i : indices) {
    const Demonstration& d = ds.samples.at(i);
    total += rms_distance(gmr_trajectory(model, d.frames, d.trajectory.size()), d.trajectory);
  }
  return total / static_cast<double>(indices.size());
}

std::vector<CurvePoint> demos_curve(const Dataset& ds, const CurveConfig& config) {
  if (config.trials < 1) throw Error(ErrorCode::InvalidArgument, "trials must be >= 1");
  const Split split = split_dataset(ds.samples.size(), config.validation_fraction, config.seed);
  if (split.validation.empty()) throw Error(ErrorCode::InsufficientData, "validation split is empty");
  for (std::size_t c : config.counts) {
    if (c < 1 || c > split.train.size()) {
      throw Error(ErrorCode::InsufficientData,
                  fmt::format("count {} outside [1, {}] training demonstrations", c, split.train.size()));
    }
  }

  const auto trials = static_cast<std::size_t>(config.trials);
  std::vector<double> errors(config.counts.size() * trials);
  parallel_for(errors.size(), [&](std::size_t job) {
    const std::size_t ci = job / trials;
    const std::size_t trial = job % trials;
    const std::size_t count = config.counts[ci];
    std::vector<std::size_t> pool = split.train;
    Rng rng(derive_seed(config.seed, count, trial + 1));
    for (std::size_t k = 0; k < count; ++k) {
      const auto j = static_cast<std::size_t>(
          rng.uniform_int(static_cast<std::int64_t>(k), static_cast<std::int64_t>(pool.size() - 1)));
      std::swap(pool[k], pool[j]);
    }
    pool.resize(count);
    const auto demos = tp_demos(ds, pool);
    const EmResult fit = em_fit(demos, config.components, config.em);
    errors[job] = heldout_error(fit.model, ds, split.validation);
  });

  std::vector<CurvePoint> out;
  for (std::size_t ci = 0; ci < config.counts.size(); ++ci) {
    CurvePoint p;
    p.count = config.counts[ci];
    p.trial_errors.assign(errors.begin() + static_cast<std::ptrdiff_t>(ci * trials),
                          errors.begin() + static_cast<std::ptrdiff_t>((ci + 1) * trials));
    for (double e : p.trial_errors) p.mean += e;
    p.mean /= static_cast<double>(trials);
    if (trials > 1) {
      double ss = 0.0;
      for (double e : p.trial_errors) ss += (e - p.mean) * (e - p.mean);
      p.stddev = std::sqrt(ss / static_cast<double>(trials - 1));
    }
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace tabletop
