#pragma once

// Synthetic contextual environments on the unit cube.
//
//   bump           r(x, a) = max(0, 1 - |a - a*|_1 - <w*, x - x*>), p = 5 by default
//   chessboard     [0,1]^2 cut into an n x n grid, cell values cycling 1, 0.5, 0
//   step_diagonal  1 on the band |a - x| < w, 0.5 on -2w < a - x <= -w, else 0
//   linear_sanity  r(x, a) = <theta*, [x; a]>, the only environment with a finite
//                  feature map (used for confidence-set coverage checks)
//
// Contexts, noise and the environment's own random parameters come from three
// independent streams derived from the environment seed.

#include "banditlab/random.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <string_view>

namespace banditlab {

enum class EnvFamily { bump, chessboard, step_diagonal, linear_sanity };

EnvFamily parse_env_family(std::string_view name);
std::string_view to_string(EnvFamily family);

struct EnvSpec {
  EnvFamily family = EnvFamily::bump;
  int context_dim = 5;
  int action_grid = 50;
  double noise_sigma = 0.1;
  std::uint64_t seed = 0;
  int chessboard_cells = 4;
  double band_width = 0.1;

  /// Spec with the family's default context dimension.
  static EnvSpec defaults(EnvFamily family);
  void validate() const;
};

struct RoundOutcome {
  Eigen::VectorXd context;
  double best_value = 0;
  double chosen_value = 0;
  double reward = 0;
};

class Environment {
 public:
  explicit Environment(EnvSpec spec);

  [[nodiscard]] const EnvSpec& spec() const { return spec_; }

  /// Uniform draw on [0,1]^context_dim from the context stream.
  Eigen::VectorXd sample_context();

  /// Noiseless reward. Throws std::invalid_argument outside the unit cube.
  [[nodiscard]] double reward_mean(const Eigen::VectorXd& context,
                                   const Eigen::VectorXd& action) const;

  /// Plays grid action `action_index` in `context`; reward carries gaussian
  /// noise from the noise stream.
  RoundOutcome step(const Eigen::VectorXd& context, Eigen::Index action_index);

  /// 1 x C matrix of equally spaced actions {0, 1/(C-1), ..., 1}.
  [[nodiscard]] const Eigen::MatrixXd& action_grid() const { return grid_; }

  /// max over the grid of reward_mean(context, .).
  [[nodiscard]] double best_value(const Eigen::VectorXd& context) const;

  // Randomly drawn parameters (bump: a*, x*, w*; linear_sanity: theta*).
  [[nodiscard]] double bump_action_optimum() const { return a_star_; }
  [[nodiscard]] const Eigen::VectorXd& bump_context_optimum() const { return x_star_; }
  [[nodiscard]] const Eigen::VectorXd& bump_weights() const { return w_star_; }
  [[nodiscard]] const Eigen::VectorXd& linear_theta() const { return theta_star_; }

 private:
  EnvSpec spec_;
  Rng context_rng_;
  Rng noise_rng_;
  Eigen::MatrixXd grid_;
  double a_star_ = 0;
  Eigen::VectorXd x_star_;
  Eigen::VectorXd w_star_;
  Eigen::VectorXd theta_star_;
};

}  // namespace banditlab
