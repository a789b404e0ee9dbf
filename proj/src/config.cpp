#include "banditlab/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace banditlab {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double to_double(std::string_view key, std::string_view value) {
  double out = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size() || !std::isfinite(out)) {
    throw ConfigError("config: " + std::string(key) + " expects a number, got '" +
                      std::string(value) + "'");
  }
  return out;
}

template <typename Int>
Int to_integer(std::string_view key, std::string_view value) {
  Int out = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw ConfigError("config: " + std::string(key) + " expects an integer, got '" +
                      std::string(value) + "'");
  }
  return out;
}

bool to_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ConfigError("config: " + std::string(key) + " expects a boolean, got '" +
                    std::string(value) + "'");
}

BaseKernelFamily to_base_family(std::string_view key, std::string_view value) {
  if (value == "gaussian") return BaseKernelFamily::gaussian;
  if (value == "linear") return BaseKernelFamily::linear;
  throw ConfigError("config: " + std::string(key) + " must be gaussian or linear");
}

}  // namespace

PolicyKind parse_policy_kind(std::string_view name) {
  if (name == "kucb") return PolicyKind::kucb;
  if (name == "ekucb") return PolicyKind::ekucb;
  if (name == "cbkb") return PolicyKind::cbkb;
  if (name == "cbbkb") return PolicyKind::cbbkb;
  if (name == "random") return PolicyKind::random;
  throw ConfigError("unknown policy: " + std::string(name));
}

std::string_view to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::kucb:
      return "kucb";
    case PolicyKind::ekucb:
      return "ekucb";
    case PolicyKind::cbkb:
      return "cbkb";
    case PolicyKind::cbbkb:
      return "cbbkb";
    case PolicyKind::random:
      return "random";
  }
  return "unknown";
}

std::vector<std::uint64_t> parse_seed_list(std::string_view text) {
  std::vector<std::uint64_t> seeds;
  std::string_view rest = trim(text);
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    const std::string_view item = trim(rest.substr(0, comma));
    const auto range = item.find("..");
    if (range != std::string_view::npos) {
      const auto lo = to_integer<std::uint64_t>("run.seeds", trim(item.substr(0, range)));
      const auto hi = to_integer<std::uint64_t>("run.seeds", trim(item.substr(range + 2)));
      if (hi < lo) throw ConfigError("run.seeds: empty range " + std::string(item));
      for (auto s = lo; s <= hi; ++s) seeds.push_back(s);
    } else if (!item.empty()) {
      seeds.push_back(to_integer<std::uint64_t>("run.seeds", item));
    }
    if (comma == std::string_view::npos) break;
    rest = rest.substr(comma + 1);
  }
  return seeds;
}

void apply_setting(RunConfig& c, std::string_view key, std::string_view value) {
  key = trim(key);
  value = trim(value);
  const std::string k(key);

  if (k == "label") c.label = std::string(value);
  else if (k == "env.family") {
    const EnvFamily family = parse_env_family(value);
    if (family != c.env.family) {
      const EnvSpec fresh = EnvSpec::defaults(family);
      c.env.family = family;
      c.env.context_dim = fresh.context_dim;
    }
  }
  else if (k == "env.context_dim") c.env.context_dim = to_integer<int>(k, value);
  else if (k == "env.action_grid") c.env.action_grid = to_integer<int>(k, value);
  else if (k == "env.noise_sigma") c.env.noise_sigma = to_double(k, value);
  else if (k == "env.seed") c.env.seed = to_integer<std::uint64_t>(k, value);
  else if (k == "env.chessboard_cells") c.env.chessboard_cells = to_integer<int>(k, value);
  else if (k == "env.band_width") c.env.band_width = to_double(k, value);
  else if (k == "kernel.family") {
    if (value == "gaussian") c.kernel.family = KernelFamily::gaussian;
    else if (value == "linear") c.kernel.family = KernelFamily::linear;
    else if (value == "tensor_product") c.kernel.family = KernelFamily::tensor_product;
    else throw ConfigError("kernel.family must be gaussian, linear or tensor_product");
  }
  else if (k == "kernel.bandwidth") c.kernel.bandwidth = to_double(k, value);
  else if (k == "kernel.kappa") c.kernel.kappa = to_double(k, value);
  else if (k == "kernel.context_family") c.kernel.context_kernel.family = to_base_family(k, value);
  else if (k == "kernel.context_bandwidth") c.kernel.context_kernel.bandwidth = to_double(k, value);
  else if (k == "kernel.action_family") c.kernel.action_kernel.family = to_base_family(k, value);
  else if (k == "kernel.action_bandwidth") c.kernel.action_kernel.bandwidth = to_double(k, value);
  else if (k == "policy.name") c.policy.kind = parse_policy_kind(value);
  else if (k == "policy.lambda") c.policy.lambda = to_double(k, value);
  else if (k == "policy.mu") c.policy.mu = to_double(k, value);
  else if (k == "policy.kors_gamma") c.policy.kors_gamma = to_double(k, value);
  else if (k == "policy.kors_epsilon") c.policy.kors_epsilon = to_double(k, value);
  else if (k == "policy.kors_delta") c.policy.kors_delta = to_double(k, value);
  else if (k == "policy.force_full_dictionary") {
    c.policy.inclusion = to_bool(k, value) ? InclusionOverride::always : InclusionOverride::none;
  }
  else if (k == "policy.beta_mode") {
    if (value == "fixed") c.policy.beta_mode = ScheduleMode::fixed;
    else if (value == "theoretical") c.policy.beta_mode = ScheduleMode::theoretical;
    else throw ConfigError("policy.beta_mode must be fixed or theoretical");
  }
  else if (k == "policy.beta") c.policy.beta = to_double(k, value);
  else if (k == "policy.norm_bound") c.policy.norm_bound = to_double(k, value);
  else if (k == "policy.delta") c.policy.delta = to_double(k, value);
  else if (k == "policy.accumulation_threshold") c.policy.accumulation_threshold = to_double(k, value);
  else if (k == "policy.seed") c.policy.seed = to_integer<std::uint64_t>(k, value);
  else if (k == "run.horizon") c.horizon = to_integer<long>(k, value);
  else if (k == "run.seeds") c.seeds = parse_seed_list(value);
  else if (k == "run.output_dir") c.output_dir = std::string(value);
  else if (k == "run.dump_dictionary") c.dump_dictionary = to_bool(k, value);
  else if (k == "run.refactor_every") c.refactor_every = to_integer<long>(k, value);
  else if (k == "run.parallelism") c.parallelism = to_integer<int>(k, value);
  else throw ConfigError("unknown config key: " + k);
}

void RunConfig::validate() const {
  if (horizon < 1) throw ConfigError("run.horizon must be >= 1");
  if (seeds.empty()) throw ConfigError("run.seeds must not be empty");
  if (refactor_every < 0) throw ConfigError("run.refactor_every must be >= 0");
  if (parallelism < 1) throw ConfigError("run.parallelism must be >= 1");
  try {
    env.validate();
    kernel.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (policy.kind == PolicyKind::random) return;
  if (!(policy.lambda > 0)) throw ConfigError("policy.lambda must be positive");
  if (!(policy.mu > 0)) throw ConfigError("policy.mu must be positive");
  if (!(policy.kors_epsilon > 0 && policy.kors_epsilon < 1)) {
    throw ConfigError("policy.kors_epsilon must lie in (0, 1)");
  }
  if (policy.kors_delta < 0 || policy.kors_delta >= 1) {
    throw ConfigError("policy.kors_delta must lie in [0, 1)");
  }
  if (policy.beta_mode == ScheduleMode::fixed && !(policy.beta >= 0)) {
    throw ConfigError("policy.beta must be >= 0");
  }
  if (policy.beta_mode == ScheduleMode::theoretical &&
      (!(policy.norm_bound > 0) || !(policy.delta > 0 && policy.delta < 1))) {
    throw ConfigError("theoretical schedule needs norm_bound > 0 and delta in (0, 1)");
  }
  if (policy.kind == PolicyKind::cbbkb && !(policy.accumulation_threshold >= 1)) {
    throw ConfigError("policy.accumulation_threshold must be >= 1");
  }
}

std::string RunConfig::display_label() const {
  return label.empty() ? std::string(to_string(policy.kind)) : label;
}

std::vector<RunConfig> ConfigFile::expand(
    const std::vector<std::pair<std::string, std::string>>& overrides) const {
  std::vector<RunConfig> out;
  auto finish = [&](RunConfig c) {
    for (const auto& [key, value] : overrides) apply_setting(c, key, value);
    c.validate();
    out.push_back(std::move(c));
  };
  if (variants.empty()) {
    finish(base);
    return out;
  }
  for (const auto& [name, settings] : variants) {
    RunConfig c = base;
    c.label = name;
    for (const auto& [key, value] : settings) apply_setting(c, key, value);
    finish(std::move(c));
  }
  return out;
}

ConfigFile parse_config(std::string_view text) {
  ConfigFile file;
  std::map<std::string, std::size_t> variant_index;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string_view key = trim(line.substr(0, eq));
    const std::string_view value = trim(line.substr(eq + 1));
    try {
      if (key.starts_with("variant.")) {
        const std::string_view rest = key.substr(8);
        const auto dot = rest.find('.');
        if (dot == std::string_view::npos || dot == 0) {
          throw ConfigError("variant keys look like variant.<name>.<section>.<key>");
        }
        const std::string name(rest.substr(0, dot));
        const std::string setting(rest.substr(dot + 1));
        RunConfig probe = file.base;
        apply_setting(probe, setting, value);
        auto [it, inserted] = variant_index.try_emplace(name, file.variants.size());
        if (inserted) file.variants.emplace_back(name, std::vector<std::pair<std::string, std::string>>{});
        file.variants[it->second].second.emplace_back(setting, std::string(value));
      } else {
        apply_setting(file.base, key, value);
      }
    } catch (const std::invalid_argument& e) {
      throw ConfigError("config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return file;
}

ConfigFile load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

std::uint64_t effective_env_seed(const RunConfig& config, std::uint64_t run_seed) {
  return splitmix64(config.env.seed ^ splitmix64(run_seed));
}

std::uint64_t effective_policy_seed(const RunConfig& config, std::uint64_t run_seed) {
  return splitmix64(config.policy.seed ^ splitmix64(run_seed ^ 0x5bd1e9955bd1e995ULL));
}

}  // namespace banditlab
