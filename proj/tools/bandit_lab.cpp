// bandit-lab: run, sweep and diagnose kernel contextual-bandit experiments.
//
// On failure prints one line `error\t<kind>\t<message>` to stderr and exits
// with status 2 (configuration / I/O) or 3 (a run aborted).

#include "banditlab/config.hpp"
#include "banditlab/harness.hpp"
#include "banditlab/outputs.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace bl = banditlab;

namespace {

struct Overrides {
  std::optional<std::string> policy, lambda, mu, horizon, seeds, env, out;
  bool dump_dictionary = false;

  [[nodiscard]] std::vector<std::pair<std::string, std::string>> settings() const {
    std::vector<std::pair<std::string, std::string>> s;
    if (policy) s.emplace_back("policy.name", *policy);
    if (lambda) s.emplace_back("policy.lambda", *lambda);
    if (mu) s.emplace_back("policy.mu", *mu);
    if (horizon) s.emplace_back("run.horizon", *horizon);
    if (seeds) s.emplace_back("run.seeds", *seeds);
    if (env) s.emplace_back("env.family", *env);
    if (out) s.emplace_back("run.output_dir", *out);
    if (dump_dictionary) s.emplace_back("run.dump_dictionary", "true");
    return s;
  }
};

void add_override_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--policy", o.policy, "kucb, ekucb, cbkb, cbbkb or random");
  cmd->add_option("--lambda", o.lambda, "ridge regularization");
  cmd->add_option("--mu", o.mu, "KORS regularization");
  cmd->add_option("--T", o.horizon, "horizon");
  cmd->add_option("--seeds", o.seeds, "seed list, e.g. 0,1,2 or 0..4");
  cmd->add_option("--env", o.env, "bump, chessboard, step_diagonal or linear_sanity");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_flag("--dump-dictionary", o.dump_dictionary, "write the final dictionary of each run");
}

int fail(std::string_view kind, const std::string& message, int code = 2) {
  std::string line = message;
  std::replace(line.begin(), line.end(), '\n', ' ');
  std::replace(line.begin(), line.end(), '\t', ' ');
  std::cerr << "error\t" << kind << '\t' << line << '\n';
  return code;
}

int execute(const std::vector<bl::RunConfig>& configs, int parallelism) {
  const auto result = bl::run_sweep(configs, parallelism);
  const auto& dir = configs.front().output_dir;
  bl::emit_outputs(result.records, dir, configs.front().env.context_dim);

  std::cout << "label\tpolicy\truns\tfailed\tregret_mean\tregret_std\ttime_mean_s\tfinal_m_mean\n";
  for (const auto& s : result.summaries) {
    std::cout << s.label << '\t' << s.policy << '\t' << s.runs << '\t' << s.failed << '\t'
              << bl::format_double(s.regret_mean) << '\t' << bl::format_double(s.regret_std)
              << '\t' << bl::format_double(s.time_mean_s) << '\t'
              << bl::format_double(s.final_m_mean) << '\n';
  }
  std::cout << "outputs written to " << dir.string() << '\n';

  for (const auto& group : result.records) {
    for (const auto& rec : group) {
      if (!rec.ok()) {
        return fail("run_failed",
                    rec.label + " seed " + std::to_string(rec.seed) + ": " + *rec.error, 3);
      }
    }
  }
  return 0;
}

int diagnose(const bl::RunConfig& config, std::optional<std::string> trace,
             std::optional<std::uint64_t> seed_opt, int points) {
  const std::uint64_t seed = seed_opt.value_or(config.seeds.front());
  bl::RunRecord probe;
  probe.label = config.display_label();
  probe.seed = seed;
  const std::filesystem::path trace_file =
      trace ? std::filesystem::path(*trace) : bl::trace_path(config.output_dir, probe);
  const auto rows = bl::read_trace_csv(trace_file);
  if (rows.empty()) return fail("empty_trace", trace_file.string() + " has no rows");

  const auto states = bl::replay_states(config, seed, rows);
  std::vector<long> checkpoints;
  const long n = long(rows.size());
  for (int i = 1; i <= points; ++i) {
    const long c = std::max<long>(1, (n * i) / points);
    if (checkpoints.empty() || checkpoints.back() != c) checkpoints.push_back(c);
  }
  const auto reports = bl::trace_diagnostics(config, states, checkpoints);

  std::filesystem::create_directories(config.output_dir);
  const auto path = config.output_dir / "diagnostics.csv";
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) return fail("io", "cannot write " + path.string());
  bl::write_diagnostics_csv(out, reports);

  int violations = 0;
  for (const auto& r : reports) {
    if (r.prop1_lhs > r.prop1_rhs + 1e-9) ++violations;
    if (r.chain_lhs > r.chain_rhs + 1e-6) ++violations;
    if (r.d_eff > 2 * r.info_gain + 1e-9) ++violations;
  }
  const auto& last = reports.back();
  std::cout << "trace\t" << trace_file.string() << '\n'
            << "t\t" << last.t << "\nd_eff\t" << bl::format_double(last.d_eff) << "\ninfo_gain\t"
            << bl::format_double(last.info_gain) << "\nvalko_d\t" << last.valko_d
            << "\nviolations\t" << violations << '\n'
            << "diagnostics written to " << path.string() << '\n';
  if (violations > 0) return fail("bound_violation", std::to_string(violations) + " checks failed", 3);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kernel contextual-bandit experiments"};
  app.require_subcommand(1);

  std::string run_config, sweep_config, diag_config;
  Overrides run_overrides, sweep_overrides, diag_overrides;
  std::optional<int> threads;
  std::optional<std::string> trace;
  std::optional<std::uint64_t> diag_seed;
  int diag_points = 10;

  auto* run = app.add_subcommand("run", "run every configuration in a file, one run at a time");
  run->add_option("--config", run_config, "configuration file")->required();
  add_override_flags(run, run_overrides);

  auto* sweep = app.add_subcommand("sweep", "run all (configuration, seed) cells in parallel");
  sweep->add_option("--config", sweep_config, "configuration file")->required();
  sweep->add_option("--threads", threads, "parallel cells (capped by BANDIT_LAB_THREADS)");
  add_override_flags(sweep, sweep_overrides);

  auto* diag = app.add_subcommand("diag", "complexity diagnostics of a recorded trace");
  diag->add_option("--config", diag_config, "configuration file")->required();
  diag->add_option("--trace", trace, "trace CSV (default: the first seed's trace in the output dir)");
  diag->add_option("--seed", diag_seed, "run seed of the trace");
  diag->add_option("--points", diag_points, "number of checkpoints")->check(CLI::PositiveNumber);
  add_override_flags(diag, diag_overrides);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what());
  }

  try {
    if (*run) {
      const auto configs = bl::load_config(run_config).expand(run_overrides.settings());
      return execute(configs, 1);
    }
    if (*sweep) {
      const auto configs = bl::load_config(sweep_config).expand(sweep_overrides.settings());
      return execute(configs, threads.value_or(configs.front().parallelism));
    }
    const auto configs = bl::load_config(diag_config).expand(diag_overrides.settings());
    return diagnose(configs.front(), trace, diag_seed, diag_points);
  } catch (const bl::ConfigError& e) {
    return fail("config", e.what());
  } catch (const bl::OutputError& e) {
    return fail("io", e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail("io", e.what());
  } catch (const std::exception& e) {
    return fail("internal", e.what());
  }
}
