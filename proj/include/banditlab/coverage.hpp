#pragma once

// Monte-Carlo check of the confidence ellipsoid
//   || theta_hat_t - theta* ||_{V_t} <= beta_{t+1}(delta)   for all t <= T
// on the linear_sanity environment, where the feature map is the identity on
// [x; a] so theta* and V_t = lambda I + sum phi phi^T are explicit.

#include "banditlab/kernels.hpp"

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace banditlab {

class UnsupportedConfigurationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct CoverageConfig {
  int context_dim = 2;
  long horizon = 50;
  int replays = 200;
  double lambda = 1.0;
  // Non-positive selects 1 / T^2.
  double delta = 0.0;
  double noise_sigma = 1.0;
  // Multiplies the radius; 0 collapses the confidence set to its centre.
  double radius_scale = 1.0;
  int action_grid = 20;
  std::uint64_t seed = 0;
  // Must be linear; kappa^2 bounds ||[x; a]||^2 on the unit cube.
  KernelSpec<double> kernel = KernelSpec<double>::linear(std::sqrt(3.0));
};

struct CoverageResult {
  int replays = 0;
  int covered = 0;
  double coverage = 0;
  // Largest || theta_hat_t - theta* ||_{V_t} / beta_{t+1} seen in any replay.
  double worst_ratio = 0;
};

/// Replays a LinUCB agent driven by the same radius and reports the fraction
/// of replays whose estimate stays inside the ellipsoid at every round.
/// Throws UnsupportedConfigurationError for a non-linear kernel.
CoverageResult coverage_test(const CoverageConfig& config);

}  // namespace banditlab
