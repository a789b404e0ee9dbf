#pragma once

// Policy-versus-environment experiment loops.

#include "banditlab/config.hpp"
#include "banditlab/diagnostics.hpp"
#include "banditlab/policies.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace banditlab {

struct StepRow {
  long t = 0;
  long action_index = 0;
  double reward = 0;
  double instantaneous_regret = 0;
  double cumulative_regret = 0;
  long dictionary_size = 0;
  std::int64_t step_wall_time_ns = 0;

  friend bool operator==(const StepRow&, const StepRow&) = default;
};

struct DictionarySnapshot {
  Matrix<double> anchors;  // one joint state per column
  std::vector<double> probs;
  std::vector<Index> inclusion_times;
};

struct RunRecord {
  std::string label;
  std::string policy;
  std::uint64_t seed = 0;
  std::vector<StepRow> rows;
  double total_regret = 0;
  std::int64_t total_wall_time_ns = 0;
  long final_m = 0;
  // Set when a policy step threw; rows hold everything up to the failure.
  std::optional<std::string> error;
  std::optional<DictionarySnapshot> dictionary;

  [[nodiscard]] bool ok() const { return !error.has_value(); }
};

std::unique_ptr<Policy<double>> make_policy(const RunConfig& config, std::uint64_t policy_seed);

/// KORS parameters implied by the policy section (default budget when
/// kors_gamma / kors_delta are unset).
KorsParams<double> kors_params_for(const RunConfig& config);
ExplorationSchedule<double> schedule_for(const RunConfig& config);

/// T rounds of sample_context -> choose -> step -> observe. Wall time covers
/// choose and observe only. Policy failures are captured in `error`.
RunRecord run_single(const RunConfig& config, std::uint64_t seed);

struct SweepSummary {
  std::string label;
  std::string policy;
  std::size_t runs = 0;
  std::size_t failed = 0;
  double regret_mean = 0;
  double regret_std = 0;
  double time_mean_s = 0;
  double time_std_s = 0;
  double final_m_mean = 0;
};

struct SweepResult {
  // Grouped per configuration, in seed order.
  std::vector<std::vector<RunRecord>> records;
  std::vector<SweepSummary> summaries;
};

/// Thread cap: BANDIT_LAB_THREADS when set and positive, else `requested`.
int effective_parallelism(int requested);

/// Every (config, seed) cell, at most `parallelism` at a time. A cell whose
/// construction or loop throws is recorded as failed.
SweepResult run_sweep(const std::vector<RunConfig>& configs, int parallelism);

/// Mean and sample standard deviation (n - 1 denominator, 0 for n < 2).
std::pair<double, double> mean_std(const std::vector<double>& values);

SweepSummary summarize(const std::vector<RunRecord>& records);

/// Joint states played in a recorded run, recovered by replaying the context
/// stream of the run's environment.
StateBuffer<double> replay_states(const RunConfig& config, std::uint64_t seed,
                                  const std::vector<StepRow>& rows);

/// Complexity reports of the played-state Gram matrix at `checkpoints`
/// prefixes of the history.
std::vector<ComplexityReport<double>> trace_diagnostics(const RunConfig& config,
                                                        const StateBuffer<double>& states,
                                                        const std::vector<long>& checkpoints);

}  // namespace banditlab
