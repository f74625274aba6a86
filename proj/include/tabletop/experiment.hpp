#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tabletop/dataset.hpp"
#include "tabletop/tpgmm.hpp"

namespace tabletop {

// Mean over the given samples of the RMS distance between each recorded
// trajectory and the GMR trajectory generated from that sample's frames.
double heldout_error(const TpGmmModel& model, const Dataset& ds, std::span<const std::size_t> indices);

struct CurveConfig {
  std::vector<std::size_t> counts{10, 20, 30, 40, 50, 60, 70, 80};
  int trials = 10;
  int components = 5;
  double validation_fraction = 0.2;
  std::uint64_t seed = 659;
  EmConfig em;
};

struct CurvePoint {
  std::size_t count = 0;
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation over trials
  std::vector<double> trial_errors;
};

// Held-out GMR error as a function of the number of training demonstrations.
// Each trial draws `count` demonstrations from the training split.
std::vector<CurvePoint> demos_curve(const Dataset& ds, const CurveConfig& config);

}  // namespace tabletop
