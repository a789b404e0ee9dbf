#pragma once

// Run configuration and its flat text format.
//
//   # comment
//   env.family = bump
//   policy.name = ekucb
//   policy.lambda = 10
//   run.seeds = 0,1,2
//   variant.mu10.policy.mu = 10
//
// Every `variant.<name>.<key> = value` line defines a named copy of the base
// configuration with that key overridden; a file without variants describes a
// single configuration labelled by its policy name.

#include "banditlab/environments.hpp"
#include "banditlab/kernels.hpp"
#include "banditlab/policies.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace banditlab {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class PolicyKind { kucb, ekucb, cbkb, cbbkb, random };

PolicyKind parse_policy_kind(std::string_view name);
std::string_view to_string(PolicyKind kind);

struct PolicyConfig {
  PolicyKind kind = PolicyKind::ekucb;
  double lambda = 1.0;
  double mu = 1.0;
  // Non-positive values select the default budget 12 log(T / delta), delta = 1/T^2.
  double kors_gamma = 0.0;
  double kors_epsilon = 0.5;
  double kors_delta = 0.0;
  InclusionOverride inclusion = InclusionOverride::none;
  ScheduleMode beta_mode = ScheduleMode::fixed;
  double beta = 1.0;
  double norm_bound = 1.0;
  double delta = 0.01;
  double accumulation_threshold = 10.0;
  std::uint64_t seed = 0;
};

struct RunConfig {
  std::string label;
  EnvSpec env = EnvSpec::defaults(EnvFamily::bump);
  KernelSpec<double> kernel = KernelSpec<double>::gaussian(0.2);
  PolicyConfig policy;
  long horizon = 1000;
  std::vector<std::uint64_t> seeds{0};
  std::filesystem::path output_dir = "out";
  bool dump_dictionary = false;
  long refactor_every = 0;
  int parallelism = 1;

  /// Throws ConfigError on an inconsistent configuration.
  void validate() const;
  /// Label used in output file names: the explicit label or the policy name.
  [[nodiscard]] std::string display_label() const;
};

/// Applies one `section.key = value` setting.
void apply_setting(RunConfig& config, std::string_view key, std::string_view value);

struct ConfigFile {
  RunConfig base;
  // Variant name and its overrides, in file order.
  std::vector<std::pair<std::string, std::vector<std::pair<std::string, std::string>>>> variants;

  /// One configuration per variant (or just the base), with `overrides`
  /// applied last to each of them.
  [[nodiscard]] std::vector<RunConfig> expand(
      const std::vector<std::pair<std::string, std::string>>& overrides = {}) const;
};

ConfigFile parse_config(std::string_view text);
ConfigFile load_config(const std::filesystem::path& path);

std::vector<std::uint64_t> parse_seed_list(std::string_view text);

/// Per-run seeds: the run seed is mixed into env.seed and policy.seed
/// separately so the two can be varied independently.
std::uint64_t effective_env_seed(const RunConfig& config, std::uint64_t run_seed);
std::uint64_t effective_policy_seed(const RunConfig& config, std::uint64_t run_seed);

}  // namespace banditlab
