#include "banditlab/environments.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace banditlab {

EnvFamily parse_env_family(std::string_view name) {
  if (name == "bump") return EnvFamily::bump;
  if (name == "chessboard") return EnvFamily::chessboard;
  if (name == "step_diagonal") return EnvFamily::step_diagonal;
  if (name == "linear_sanity") return EnvFamily::linear_sanity;
  throw std::invalid_argument("unknown environment family: " + std::string(name));
}

std::string_view to_string(EnvFamily family) {
  switch (family) {
    case EnvFamily::bump:
      return "bump";
    case EnvFamily::chessboard:
      return "chessboard";
    case EnvFamily::step_diagonal:
      return "step_diagonal";
    case EnvFamily::linear_sanity:
      return "linear_sanity";
  }
  return "unknown";
}

EnvSpec EnvSpec::defaults(EnvFamily family) {
  EnvSpec spec;
  spec.family = family;
  switch (family) {
    case EnvFamily::bump:
      spec.context_dim = 5;
      break;
    case EnvFamily::chessboard:
    case EnvFamily::step_diagonal:
      spec.context_dim = 1;
      break;
    case EnvFamily::linear_sanity:
      spec.context_dim = 2;
      break;
  }
  return spec;
}

void EnvSpec::validate() const {
  if (context_dim < 1) throw std::invalid_argument("EnvSpec: context_dim must be >= 1");
  if (action_grid < 2) throw std::invalid_argument("EnvSpec: action_grid must be >= 2");
  if (!(noise_sigma >= 0)) throw std::invalid_argument("EnvSpec: noise_sigma must be >= 0");
  if ((family == EnvFamily::chessboard || family == EnvFamily::step_diagonal) && context_dim != 1) {
    throw std::invalid_argument("EnvSpec: chessboard and step_diagonal use context_dim = 1");
  }
  if (chessboard_cells < 1) throw std::invalid_argument("EnvSpec: chessboard_cells must be >= 1");
  if (!(band_width > 0)) throw std::invalid_argument("EnvSpec: band_width must be positive");
}

Environment::Environment(EnvSpec spec)
    : spec_(spec),
      context_rng_(make_stream(spec.seed, StreamTag::env_context)),
      noise_rng_(make_stream(spec.seed, StreamTag::env_noise)) {
  spec_.validate();
  const int c = spec_.action_grid;
  grid_.resize(1, c);
  for (int i = 0; i < c; ++i) grid_(0, i) = double(i) / double(c - 1);

  Rng params = make_stream(spec_.seed, StreamTag::env_parameters);
  const int p = spec_.context_dim;
  if (spec_.family == EnvFamily::bump) {
    a_star_ = uniform01(params);
    x_star_.resize(p);
    w_star_.resize(p);
    for (int i = 0; i < p; ++i) x_star_(i) = uniform01(params);
    for (int i = 0; i < p; ++i) w_star_(i) = uniform01(params) - 0.5;
  } else if (spec_.family == EnvFamily::linear_sanity) {
    theta_star_.resize(p + 1);
    for (int i = 0; i <= p; ++i) theta_star_(i) = standard_normal(params);
    theta_star_.normalize();
  }
}

Eigen::VectorXd Environment::sample_context() {
  Eigen::VectorXd x(spec_.context_dim);
  for (int i = 0; i < spec_.context_dim; ++i) x(i) = uniform01(context_rng_);
  return x;
}

namespace {

bool in_unit_cube(const Eigen::VectorXd& v) {
  return v.allFinite() && (v.array() >= 0.0).all() && (v.array() <= 1.0).all();
}

int cell_of(double v, int n) { return std::min(int(v * n), n - 1); }

}  // namespace

double Environment::reward_mean(const Eigen::VectorXd& x, const Eigen::VectorXd& a) const {
  if (x.size() != spec_.context_dim || a.size() != 1) {
    throw std::invalid_argument("reward_mean: dimension mismatch");
  }
  if (!in_unit_cube(x) || !in_unit_cube(a)) {
    throw std::invalid_argument("reward_mean: input outside the unit cube");
  }
  switch (spec_.family) {
    case EnvFamily::bump:
      return std::max(0.0, 1.0 - std::abs(a(0) - a_star_) - w_star_.dot(x - x_star_));
    case EnvFamily::chessboard: {
      static constexpr double kValues[3] = {1.0, 0.5, 0.0};
      const int n = spec_.chessboard_cells;
      return kValues[(cell_of(x(0), n) + cell_of(a(0), n)) % 3];
    }
    case EnvFamily::step_diagonal: {
      const double gap = a(0) - x(0);
      const double w = spec_.band_width;
      if (std::abs(gap) < w) return 1.0;
      if (gap > -2.0 * w && gap <= -w) return 0.5;
      return 0.0;
    }
    case EnvFamily::linear_sanity:
      return theta_star_.head(spec_.context_dim).dot(x) + theta_star_(spec_.context_dim) * a(0);
  }
  throw std::logic_error("reward_mean: unknown family");
}

double Environment::best_value(const Eigen::VectorXd& context) const {
  double best = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < grid_.cols(); ++i) {
    best = std::max(best, reward_mean(context, grid_.col(i)));
  }
  return best;
}

RoundOutcome Environment::step(const Eigen::VectorXd& context, Eigen::Index action_index) {
  if (action_index < 0 || action_index >= grid_.cols()) {
    throw std::invalid_argument("step: action index outside the grid");
  }
  RoundOutcome out;
  out.context = context;
  out.best_value = best_value(context);
  out.chosen_value = reward_mean(context, grid_.col(action_index));
  out.reward = out.chosen_value;
  if (spec_.noise_sigma > 0) out.reward += spec_.noise_sigma * standard_normal(noise_rng_);
  return out;
}

}  // namespace banditlab
