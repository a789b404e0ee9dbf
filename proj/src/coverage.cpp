#include "banditlab/coverage.hpp"

#include "banditlab/environments.hpp"
#include "banditlab/policies.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace banditlab {

CoverageResult coverage_test(const CoverageConfig& config) {
  if (config.kernel.family != KernelFamily::linear) {
    throw UnsupportedConfigurationError("coverage_test: only the linear kernel has an explicit feature map");
  }
  if (config.replays < 1 || config.horizon < 1 || !(config.lambda > 0) || config.radius_scale < 0) {
    throw std::invalid_argument("coverage_test: invalid configuration");
  }
  const double big_t = double(config.horizon);
  const double delta = config.delta > 0 ? config.delta : 1.0 / (big_t * big_t);
  const double kappa = config.kernel.kappa;
  const double lambda = config.lambda;

  CoverageResult result;
  result.replays = config.replays;
  for (int r = 0; r < config.replays; ++r) {
    EnvSpec spec = EnvSpec::defaults(EnvFamily::linear_sanity);
    spec.context_dim = config.context_dim;
    spec.action_grid = config.action_grid;
    spec.noise_sigma = config.noise_sigma;
    spec.seed = derive_seed(config.seed, StreamTag::env_parameters) + std::uint64_t(r);
    Environment env(spec);
    const Vector<double>& theta_star = env.linear_theta();
    const double norm_bound = theta_star.norm();
    const Index d = theta_star.size();
    const Matrix<double>& grid = env.action_grid();

    Matrix<double> v = lambda * Matrix<double>::Identity(d, d);
    Vector<double> b = Vector<double>::Zero(d);
    Matrix<double> v_inv = Matrix<double>::Identity(d, d) / lambda;
    bool covered = true;

    auto radius = [&](double t) {
      const double d_eff = double(d) - lambda * v_inv.trace();
      return config.radius_scale * theoretical_beta(RadiusKind::exact, t, lambda, lambda,
                                                    norm_bound, delta, kappa, d_eff);
    };

    for (long t = 1; t <= config.horizon; ++t) {
      const Vector<double> x = env.sample_context();
      const Matrix<double> candidates = candidate_states<double>(x, grid);
      const Vector<double> theta_hat = v_inv * b;
      const double beta = radius(double(t - 1));
      Index best = 0;
      double best_value = -std::numeric_limits<double>::infinity();
      for (Index i = 0; i < candidates.cols(); ++i) {
        const auto phi = candidates.col(i);
        const double value = phi.dot(theta_hat) + beta * std::sqrt(phi.dot(v_inv * phi));
        if (value > best_value) {
          best_value = value;
          best = i;
        }
      }
      const RoundOutcome outcome = env.step(x, best);
      const Vector<double> phi = candidates.col(best);
      v.noalias() += phi * phi.transpose();
      b += outcome.reward * phi;
      v_inv = v.llt().solve(Matrix<double>::Identity(d, d));

      const Vector<double> err = v_inv * b - theta_star;
      const double dist = std::sqrt(err.dot(v * err));
      const double bound = radius(double(t));
      const double ratio = bound > 0 ? dist / bound : (dist > 0 ? std::numeric_limits<double>::infinity() : 0.0);
      result.worst_ratio = std::max(result.worst_ratio, ratio);
      if (dist > bound) covered = false;
    }
    if (covered) ++result.covered;
  }
  result.coverage = double(result.covered) / double(result.replays);
  return result;
}

}  // namespace banditlab
