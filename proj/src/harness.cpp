#include "banditlab/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <thread>

namespace banditlab {

KorsParams<double> kors_params_for(const RunConfig& config) {
  const auto& p = config.policy;
  auto kors = KorsParams<double>::with_default_budget(p.mu, config.horizon);
  kors.epsilon = p.kors_epsilon;
  if (p.kors_delta > 0) kors.delta = p.kors_delta;
  if (p.kors_gamma > 0) kors.gamma = p.kors_gamma;
  kors.inclusion = p.inclusion;
  kors.validate();
  return kors;
}

ExplorationSchedule<double> schedule_for(const RunConfig& config) {
  const auto& p = config.policy;
  if (p.beta_mode == ScheduleMode::fixed) return ExplorationSchedule<double>::fixed(p.beta);
  return ExplorationSchedule<double>::theoretical(p.norm_bound, p.delta, config.kernel.kappa);
}

std::unique_ptr<Policy<double>> make_policy(const RunConfig& config, std::uint64_t policy_seed) {
  const auto& p = config.policy;
  switch (p.kind) {
    case PolicyKind::random:
      return std::make_unique<RandomPolicy<double>>(policy_seed);
    case PolicyKind::kucb:
      return std::make_unique<KUcbPolicy<double>>(config.kernel, p.lambda, schedule_for(config),
                                                  policy_seed);
    case PolicyKind::ekucb:
      return std::make_unique<EkUcbPolicy<double>>(config.kernel, p.lambda, kors_params_for(config),
                                                   schedule_for(config), policy_seed);
    case PolicyKind::cbkb:
    case PolicyKind::cbbkb: {
      CbbkbParams<double> params;
      params.accumulation_threshold = p.kind == PolicyKind::cbkb ? 1.0 : p.accumulation_threshold;
      return std::make_unique<CbbkbPolicy<double>>(config.kernel, p.lambda, kors_params_for(config),
                                                   schedule_for(config), params, policy_seed);
    }
  }
  throw ConfigError("make_policy: unknown policy kind");
}

namespace {

std::string describe_failure(std::exception_ptr failure) {
  try {
    std::rethrow_exception(failure);
  } catch (const NumericalInconsistencyError& e) {
    return std::string("numerical_inconsistency: ") + e.what();
  } catch (const NearSingularExtensionError& e) {
    return std::string("near_singular_extension: ") + e.what();
  } catch (const SingularUpdateError& e) {
    return std::string("singular_update: ") + e.what();
  } catch (const FactorizationError& e) {
    return std::string("factorization: ") + e.what();
  } catch (const std::exception& e) {
    return std::string("policy_error: ") + e.what();
  }
}

using Clock = std::chrono::steady_clock;

std::int64_t elapsed_ns(Clock::time_point from, Clock::time_point to) {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(to - from).count();
}

}  // namespace

RunRecord run_single(const RunConfig& config, std::uint64_t seed) {
  config.validate();
  RunRecord rec;
  rec.label = config.display_label();
  rec.policy = std::string(to_string(config.policy.kind));
  rec.seed = seed;

  EnvSpec env_spec = config.env;
  env_spec.seed = effective_env_seed(config, seed);
  Environment env(env_spec);
  auto policy = make_policy(config, effective_policy_seed(config, seed));
  const Matrix<double>& grid = env.action_grid();
  rec.rows.reserve(std::size_t(config.horizon));

  double cumulative = 0;
  for (long t = 1; t <= config.horizon; ++t) {
    const Vector<double> context = env.sample_context();
    StepRow row;
    row.t = t;
    std::int64_t wall = 0;
    try {
      const auto start = Clock::now();
      const Index choice = policy->choose(context, grid);
      wall += elapsed_ns(start, Clock::now());

      const RoundOutcome outcome = env.step(context, choice);
      const StatePoint<double> state(context, grid.col(choice));

      const auto resume = Clock::now();
      policy->observe(state, outcome.reward);
      if (config.refactor_every > 0 && t % config.refactor_every == 0) policy->refactor();
      wall += elapsed_ns(resume, Clock::now());

      row.action_index = long(choice);
      row.reward = outcome.reward;
      row.instantaneous_regret = outcome.best_value - outcome.chosen_value;
    } catch (...) {
      rec.error = describe_failure(std::current_exception());
      break;
    }
    cumulative += row.instantaneous_regret;
    row.cumulative_regret = cumulative;
    row.dictionary_size = long(policy->dictionary_size());
    row.step_wall_time_ns = wall;
    rec.total_wall_time_ns += wall;
    rec.rows.push_back(row);
  }
  rec.total_regret = cumulative;
  rec.final_m = long(policy->dictionary_size());

  if (config.dump_dictionary) {
    if (const auto* dict = policy->dictionary()) {
      DictionarySnapshot snap;
      snap.anchors = dict->anchors().matrix();
      snap.probs = dict->probs();
      snap.inclusion_times = dict->inclusion_times();
      rec.dictionary = std::move(snap);
    }
  }
  return rec;
}

int effective_parallelism(int requested) {
  int out = std::max(requested, 1);
  if (const char* env = std::getenv("BANDIT_LAB_THREADS")) {
    const int cap = std::atoi(env);
    if (cap > 0) out = std::min(out, cap);
  }
  return out;
}

std::pair<double, double> mean_std(const std::vector<double>& values) {
  if (values.empty()) return {0.0, 0.0};
  double mean = 0;
  for (double v : values) mean += v;
  mean /= double(values.size());
  if (values.size() < 2) return {mean, 0.0};
  double ss = 0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / double(values.size() - 1))};
}

SweepSummary summarize(const std::vector<RunRecord>& records) {
  SweepSummary s;
  s.runs = records.size();
  std::vector<double> regrets, times, sizes;
  for (const auto& r : records) {
    if (s.label.empty()) {
      s.label = r.label;
      s.policy = r.policy;
    }
    if (!r.ok()) {
      ++s.failed;
      continue;
    }
    regrets.push_back(r.total_regret);
    times.push_back(double(r.total_wall_time_ns) * 1e-9);
    sizes.push_back(double(r.final_m));
  }
  std::tie(s.regret_mean, s.regret_std) = mean_std(regrets);
  std::tie(s.time_mean_s, s.time_std_s) = mean_std(times);
  s.final_m_mean = mean_std(sizes).first;
  return s;
}

SweepResult run_sweep(const std::vector<RunConfig>& configs, int parallelism) {
  if (configs.empty()) throw std::invalid_argument("run_sweep: no configurations");
  struct Cell {
    std::size_t config;
    std::size_t seed;
  };
  std::vector<Cell> cells;
  SweepResult result;
  result.records.resize(configs.size());
  for (std::size_t i = 0; i < configs.size(); ++i) {
    if (configs[i].seeds.empty()) throw std::invalid_argument("run_sweep: empty seed list");
    result.records[i].resize(configs[i].seeds.size());
    for (std::size_t j = 0; j < configs[i].seeds.size(); ++j) cells.push_back({i, j});
  }

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < cells.size(); k = next++) {
      const auto [ci, si] = cells[k];
      const RunConfig& config = configs[ci];
      const std::uint64_t seed = config.seeds[si];
      RunRecord rec;
      try {
        rec = run_single(config, seed);
      } catch (const std::exception& e) {
        rec.label = config.display_label();
        rec.policy = std::string(to_string(config.policy.kind));
        rec.seed = seed;
        rec.error = std::string("setup_error: ") + e.what();
      }
      result.records[ci][si] = std::move(rec);
    }
  };

  const int threads = std::min<int>(effective_parallelism(parallelism), int(cells.size()));
  {
    std::vector<std::jthread> pool;
    for (int i = 1; i < threads; ++i) pool.emplace_back(worker);
    worker();
  }
  for (const auto& group : result.records) result.summaries.push_back(summarize(group));
  return result;
}

StateBuffer<double> replay_states(const RunConfig& config, std::uint64_t seed,
                                  const std::vector<StepRow>& rows) {
  EnvSpec env_spec = config.env;
  env_spec.seed = effective_env_seed(config, seed);
  Environment env(env_spec);
  const Matrix<double>& grid = env.action_grid();
  StateBuffer<double> states(env_spec.context_dim, env_spec.context_dim + 1);
  for (const auto& row : rows) {
    const Vector<double> context = env.sample_context();
    if (row.action_index < 0 || row.action_index >= grid.cols()) {
      throw std::invalid_argument("replay_states: action index outside the grid");
    }
    states.push_back(StatePoint<double>(context, grid.col(row.action_index)));
  }
  return states;
}

std::vector<ComplexityReport<double>> trace_diagnostics(const RunConfig& config,
                                                        const StateBuffer<double>& states,
                                                        const std::vector<long>& checkpoints) {
  std::vector<ComplexityReport<double>> out;
  const double lambda = config.policy.lambda;
  for (long c : checkpoints) {
    if (c < 1 || c > long(states.size())) {
      throw std::invalid_argument("trace_diagnostics: checkpoint outside the history");
    }
    const auto prefix = states.matrix().leftCols(c);
    const Matrix<double> k = gram(config.kernel, prefix, prefix, states.context_dim());
    out.push_back(complexity_report(k, lambda, config.kernel.kappa, Index(config.horizon)));
  }
  return out;
}

}  // namespace banditlab
