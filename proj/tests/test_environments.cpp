#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "banditlab/environments.hpp"

#include <cmath>
#include <set>

using namespace banditlab;
using Vec = Eigen::VectorXd;
using Index = Eigen::Index;

namespace {

Vec scalar(double v) { return (Vec(1) << v).finished(); }

EnvSpec spec_for(EnvFamily family, std::uint64_t seed = 1) {
  EnvSpec s = EnvSpec::defaults(family);
  s.seed = seed;
  return s;
}

}  // namespace

TEST_CASE("defaults and validation") {
  CHECK(EnvSpec::defaults(EnvFamily::bump).context_dim == 5);
  CHECK(EnvSpec::defaults(EnvFamily::chessboard).context_dim == 1);
  CHECK(EnvSpec::defaults(EnvFamily::step_diagonal).context_dim == 1);
  EnvSpec bad = spec_for(EnvFamily::chessboard);
  bad.context_dim = 2;
  CHECK_THROWS_AS(Environment{bad}, std::invalid_argument);
  bad = spec_for(EnvFamily::bump);
  bad.action_grid = 1;
  CHECK_THROWS_AS(Environment{bad}, std::invalid_argument);
  CHECK(parse_env_family("step_diagonal") == EnvFamily::step_diagonal);
  CHECK(to_string(EnvFamily::linear_sanity) == "linear_sanity");
  CHECK_THROWS_AS(parse_env_family("nope"), std::invalid_argument);
}

TEST_CASE("action grid") {
  EnvSpec s = spec_for(EnvFamily::bump);
  s.action_grid = 2;
  CHECK(Environment(s).action_grid() == (Eigen::MatrixXd(1, 2) << 0, 1).finished());
  s.action_grid = 5;
  Environment env(s);
  CHECK(env.action_grid() == (Eigen::MatrixXd(1, 5) << 0, 0.25, 0.5, 0.75, 1).finished());
  const Eigen::MatrixXd before = env.action_grid();
  for (int i = 0; i < 10; ++i) env.step(env.sample_context(), 2);
  CHECK(env.action_grid() == before);
}

TEST_CASE("sample_context: support, determinism and mean") {
  Environment a(spec_for(EnvFamily::bump, 3)), b(spec_for(EnvFamily::bump, 3));
  Vec sum = Vec::Zero(5);
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const Vec x = a.sample_context();
    CHECK(x == b.sample_context());
    CHECK((x.array() >= 0.0).all());
    CHECK((x.array() <= 1.0).all());
    sum += x;
  }
  const double sigma = std::sqrt(1.0 / 12.0 / n);
  for (int i = 0; i < 5; ++i) CHECK(std::abs(sum(i) / n - 0.5) <= 3 * sigma);
}

TEST_CASE("bump: optimum, Lipschitz and determinism") {
  Environment env(spec_for(EnvFamily::bump, 4));
  CHECK(env.reward_mean(env.bump_context_optimum(), scalar(env.bump_action_optimum())) == doctest::Approx(1.0));
  Environment twin(spec_for(EnvFamily::bump, 4));
  CHECK(twin.bump_action_optimum() == env.bump_action_optimum());
  CHECK(twin.bump_weights() == env.bump_weights());
  CHECK(twin.bump_context_optimum() == env.bump_context_optimum());
  CHECK((env.bump_weights().array().abs() <= 0.5).all());
  Rng rng(5);
  for (int i = 0; i < 2000; ++i) {
    const Vec x = env.sample_context();
    const Vec a = scalar(uniform01(rng)), b = scalar(uniform01(rng));
    CHECK(std::abs(env.reward_mean(x, a) - env.reward_mean(x, b)) <= std::abs(a(0) - b(0)) + 1e-15);
    CHECK(env.reward_mean(x, a) >= 0.0);
  }
}

TEST_CASE("chessboard values") {
  Environment env(spec_for(EnvFamily::chessboard));
  std::set<double> seen;
  Rng rng(6);
  for (int i = 0; i < 5000; ++i) {
    const double v = env.reward_mean(scalar(uniform01(rng)), scalar(uniform01(rng)));
    CHECK((v == 0.0 || v == 0.5 || v == 1.0));
    seen.insert(v);
  }
  CHECK(seen.size() == 3);
  CHECK(env.reward_mean(scalar(0.1), scalar(0.1)) == 1.0);
  CHECK(env.reward_mean(scalar(0.1), scalar(0.3)) == 0.5);
  CHECK(env.reward_mean(scalar(0.3), scalar(0.3)) == 0.0);
  CHECK(env.reward_mean(scalar(1.0), scalar(1.0)) == env.reward_mean(scalar(0.9), scalar(0.9)));
}

TEST_CASE("step diagonal bands") {
  Environment env(spec_for(EnvFamily::step_diagonal));
  for (double x : {0.0, 0.3, 0.77, 1.0}) CHECK(env.reward_mean(scalar(x), scalar(x)) == 1.0);
  CHECK(env.reward_mean(scalar(0.5), scalar(0.35)) == 0.5);
  CHECK(env.reward_mean(scalar(0.5), scalar(0.38)) == 0.5);
  CHECK(env.reward_mean(scalar(0.5), scalar(0.25)) == 0.0);
  CHECK(env.reward_mean(scalar(0.5), scalar(0.7)) == 0.0);
}

TEST_CASE("linear sanity") {
  Environment env(spec_for(EnvFamily::linear_sanity, 7));
  const Vec& theta = env.linear_theta();
  CHECK(theta.size() == 3);
  CHECK(theta.norm() == doctest::Approx(1.0));
  const Vec x = (Vec(2) << 0.2, 0.4).finished();
  CHECK(env.reward_mean(x, scalar(0.6)) == doctest::Approx(theta(0) * 0.2 + theta(1) * 0.4 + theta(2) * 0.6));
}

TEST_CASE("reward_mean rejects inputs outside the unit cube") {
  Environment env(spec_for(EnvFamily::chessboard));
  CHECK_THROWS_AS((void)env.reward_mean(scalar(1.1), scalar(0.5)), std::invalid_argument);
  CHECK_THROWS_AS((void)env.reward_mean(scalar(0.5), scalar(-0.1)), std::invalid_argument);
  CHECK_THROWS_AS((void)env.reward_mean(scalar(NAN), scalar(0.5)), std::invalid_argument);
  CHECK_THROWS_AS((void)env.reward_mean((Vec(2) << 0.1, 0.1).finished(), scalar(0.5)), std::invalid_argument);
}

TEST_CASE("step: noise, best value and regret nonnegativity") {
  for (auto family : {EnvFamily::bump, EnvFamily::chessboard, EnvFamily::step_diagonal, EnvFamily::linear_sanity}) {
    EnvSpec s = spec_for(family, 8);
    s.noise_sigma = 0.0;
    Environment env(s);
    double cumulative = 0;
    for (int i = 0; i < 200; ++i) {
      const Vec x = env.sample_context();
      const Index a = Index(i % s.action_grid);
      const auto out = env.step(x, a);
      CHECK(out.reward == out.chosen_value);
      CHECK(out.best_value >= out.chosen_value - 1e-12);
      for (Index j = 0; j < env.action_grid().cols(); ++j) {
        CHECK(out.best_value >= env.reward_mean(x, env.action_grid().col(j)));
      }
      const double next = cumulative + out.best_value - out.chosen_value;
      CHECK(next >= cumulative);
      cumulative = next;
    }
  }
  EnvSpec s = spec_for(EnvFamily::bump, 9);
  Environment env(s);
  CHECK_THROWS_AS(env.step(env.sample_context(), 50), std::invalid_argument);
}

TEST_CASE("step: empirical reward mean") {
  EnvSpec s = spec_for(EnvFamily::bump, 10);
  s.noise_sigma = 0.1;
  Environment env(s);
  const Vec x = env.sample_context();
  const Index a = 17;
  const double truth = env.reward_mean(x, env.action_grid().col(a));
  double sum = 0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) sum += env.step(x, a).reward;
  CHECK(std::abs(sum / n - truth) <= 3 * s.noise_sigma / 100);

  Environment e1(s), e2(s);
  for (int i = 0; i < 50; ++i) {
    const Vec x1 = e1.sample_context();
    CHECK(e1.step(x1, 3).reward == e2.step(e2.sample_context(), 3).reward);
  }
}

TEST_CASE("streams are independent") {
  EnvSpec s = spec_for(EnvFamily::bump, 11);
  Environment b(s);
  for (int i = 0; i < 20; ++i) b.step(b.sample_context(), 0);
  Environment c(s);
  for (int i = 0; i < 20; ++i) c.sample_context();
  CHECK(b.sample_context() == c.sample_context());
}
