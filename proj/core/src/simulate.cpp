#include "casp/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "casp/errors.hpp"
#include "casp/util.hpp"

namespace casp {

namespace {

std::size_t uz(int v) { return static_cast<std::size_t>(v); }

// Component tags under the environment stream, so a draw-count change in one
// component never shifts another.
constexpr std::uint64_t kProbsTag = 1;
constexpr std::uint64_t kFeaturesTag = 2;
constexpr std::uint64_t kBaseTag = 3;
constexpr std::uint64_t kInteractionTag = 4;
constexpr std::uint64_t kFeasibleTag = 5;
constexpr std::uint64_t kBehaviorTag = 6;

constexpr double kSharpTemperature = 0.1;

std::vector<double> normalized_positive(CounterRng& rng, std::size_t k) {
  std::vector<double> v(k, 0.0);
  double total = 0.0;
  for (double& x : v) {
    x = 0.05 + rng.next_double();  // bounded away from 0 so rows stay positive
    total += x;
  }
  for (double& x : v) x /= total;
  return v;
}

}  // namespace

Block block_from_string(const std::string& name) {
  if (name == "counterexample") return Block::counterexample;
  if (name == "coupling") return Block::coupling;
  if (name == "support_stress") return Block::support_stress;
  if (name == "large_action") return Block::large_action;
  if (name == "sample_size") return Block::sample_size;
  throw ConfigError("unknown block '" + name + "'");
}

std::string to_string(Block block) {
  switch (block) {
    case Block::counterexample: return "counterexample";
    case Block::coupling: return "coupling";
    case Block::support_stress: return "support_stress";
    case Block::large_action: return "large_action";
    case Block::sample_size: return "sample_size";
  }
  return "coupling";
}

std::vector<double> default_sweep(Block block) {
  switch (block) {
    case Block::counterexample:
      return {0.85};
    case Block::coupling: {
      std::vector<double> grid;
      for (int i = 0; i < 8; ++i) grid.push_back(static_cast<double>(i) / 7.0);
      return grid;
    }
    case Block::support_stress:
      return {1.0, 0.5, 0.25, 0.1};
    case Block::large_action:
      return {20.0, 50.0, 100.0};
    case Block::sample_size:
      return {600.0, 1200.0, 2400.0, 4800.0};
  }
  return {};
}

BlockConfig apply_sweep_value(const BlockConfig& cfg, double value) {
  BlockConfig out = cfg;
  switch (cfg.block) {
    case Block::counterexample:
      out.reward_bound = value;
      break;
    case Block::coupling:
      out.coupling_strength = value;
      break;
    case Block::support_stress:
      out.overlap_severity = value;
      break;
    case Block::large_action:
      out.k2 = static_cast<int>(value);
      out.feasible_size = std::max(1, out.k2 / 5);
      break;
    case Block::sample_size:
      out.n = static_cast<int>(value);
      break;
  }
  return out;
}

Environment build_counterexample(double reward_bound) {
  if (!(reward_bound > 0.0)) throw ConfigError("counterexample needs a positive reward bound");
  Environment env;
  env.id = "counterexample";
  env.context_probs = {1.0};
  env.features = {{0.0}};
  env.num_generators = 2;
  env.num_items = 2;
  env.feasible = {{{0}, {1}}};
  env.reward = {{{0.0}, {reward_bound}}};
  env.reward_bound = reward_bound;
  env.behavior.id = "behavior";
  env.behavior.stage1 = {{0.5, 0.5}};
  env.behavior.stage2 = {{{1.0}, {1.0}}};
  env.proxy_scores = {{1.0, 0.0}};  // continuation-blind proxy prefers the worthless generator
  validate_environment(env);
  return env;
}

Environment build_block_env(const BlockConfig& cfg) {
  if (cfg.block == Block::counterexample) return build_counterexample(cfg.reward_bound);
  if (cfg.feasible_size > cfg.k2) {
    throw ConfigError("feasible size exceeds item count");
  }
  if (cfg.num_contexts < 1 || cfg.k1 < 1 || cfg.k2 < 1 || cfg.feasible_size < 1) {
    throw ConfigError("block dimensions must be positive");
  }
  if (cfg.coupling_strength < 0.0 || cfg.coupling_strength > 1.0) {
    throw ConfigError("coupling strength must lie in [0, 1]");
  }
  if (cfg.overlap_severity < 0.0 || cfg.overlap_severity > 1.0) {
    throw ConfigError("overlap severity must lie in [0, 1]");
  }

  const CounterRng env_stream = CounterRng(cfg.seed).substream(kEnvStream);
  const double M = cfg.reward_bound;
  const double kappa = cfg.coupling_strength;
  const double sev = cfg.overlap_severity;

  Environment env;
  env.id = to_string(cfg.block) + "-seed" + std::to_string(cfg.seed);
  env.num_generators = cfg.k1;
  env.num_items = cfg.k2;
  env.reward_bound = M;

  {
    CounterRng r = env_stream.substream(kProbsTag);
    env.context_probs = normalized_positive(r, uz(cfg.num_contexts));
  }
  {
    CounterRng r = env_stream.substream(kFeaturesTag);
    env.features.resize(uz(cfg.num_contexts));
    for (auto& f : env.features) f = {r.next_double(), r.next_double()};
  }

  std::vector<std::vector<double>> base(uz(cfg.num_contexts),
                                        std::vector<double>(uz(cfg.k2), 0.0));
  {
    CounterRng r = env_stream.substream(kBaseTag);
    for (auto& row : base) {
      for (double& v : row) v = M * r.next_double();
    }
  }
  std::vector<std::vector<std::vector<double>>> interaction(
      uz(cfg.num_contexts),
      std::vector<std::vector<double>>(uz(cfg.k1), std::vector<double>(uz(cfg.k2), 0.0)));
  {
    CounterRng r = env_stream.substream(kInteractionTag);
    for (auto& per_g : interaction) {
      for (auto& row : per_g) {
        for (double& v : row) v = M * r.next_double();
      }
    }
  }

  env.feasible.resize(uz(cfg.num_contexts));
  env.reward.resize(uz(cfg.num_contexts));
  {
    CounterRng r = env_stream.substream(kFeasibleTag);
    for (int c = 0; c < cfg.num_contexts; ++c) {
      env.feasible[uz(c)].resize(uz(cfg.k1));
      env.reward[uz(c)].resize(uz(cfg.k1));
      for (int g = 0; g < cfg.k1; ++g) {
        auto items = r.sample_without_replacement(cfg.k2, cfg.feasible_size);
        std::sort(items.begin(), items.end());
        auto& rew = env.reward[uz(c)][uz(g)];
        rew.resize(items.size());
        for (std::size_t i = 0; i < items.size(); ++i) {
          const double q = (1.0 - kappa) * base[uz(c)][uz(items[i])] +
                           kappa * interaction[uz(c)][uz(g)][uz(items[i])];
          rew[i] = std::clamp(q, 0.0, M);
        }
        env.feasible[uz(c)][uz(g)] = std::move(items);
      }
    }
  }

  env.behavior.id = "behavior";
  env.behavior.stage1.resize(uz(cfg.num_contexts));
  env.behavior.stage2.resize(uz(cfg.num_contexts));
  {
    CounterRng r = env_stream.substream(kBehaviorTag);
    for (int c = 0; c < cfg.num_contexts; ++c) {
      std::vector<double> s1_scores(uz(cfg.k1), 0.0);
      for (double& v : s1_scores) v = r.next_double();
      const auto sharp1 = softmax(s1_scores, kSharpTemperature);
      auto& mu1 = env.behavior.stage1[uz(c)];
      mu1.resize(uz(cfg.k1));
      for (int g = 0; g < cfg.k1; ++g) {
        mu1[uz(g)] = sev / static_cast<double>(cfg.k1) + (1.0 - sev) * sharp1[uz(g)];
      }
      env.behavior.stage2[uz(c)].resize(uz(cfg.k1));
      for (int g = 0; g < cfg.k1; ++g) {
        const std::size_t L = env.feasible[uz(c)][uz(g)].size();
        std::vector<double> s2_scores(L, 0.0);
        for (double& v : s2_scores) v = r.next_double();
        const auto sharp2 = softmax(s2_scores, kSharpTemperature);
        auto& mu2 = env.behavior.stage2[uz(c)][uz(g)];
        mu2.resize(L);
        for (std::size_t i = 0; i < L; ++i) {
          mu2[i] = sev / static_cast<double>(L) + (1.0 - sev) * sharp2[i];
        }
      }
    }
  }

  validate_environment(env);
  return env;
}

LoggedDataset sample_log(const Environment& env, int n, std::uint64_t seed,
                         bool bernoulli_rewards) {
  if (n < 1) throw ConfigError("sample size must be at least 1");
  LoggedDataset data;
  data.environment_id = env.id;
  data.seed = seed;
  data.records.reserve(uz(n));
  CounterRng rng = CounterRng(seed).substream(kLogStream);
  const double M = env.reward_bound;
  for (int i = 0; i < n; ++i) {
    LoggedRecord rec;
    rec.context = rng.discrete(env.context_probs);
    rec.generator = rng.discrete(env.behavior.stage1[uz(rec.context)]);
    rec.index = rng.discrete(env.behavior.stage2[uz(rec.context)][uz(rec.generator)]);
    rec.item = env.feasible_set(rec.context, rec.generator)[uz(rec.index)];
    rec.mu1 = env.behavior.stage1[uz(rec.context)][uz(rec.generator)];
    rec.mu2 = env.behavior.stage2[uz(rec.context)][uz(rec.generator)][uz(rec.index)];
    const double q = env.reward_at(rec.context, rec.generator, rec.index);
    if (bernoulli_rewards) {
      // y in {0, M} with mean q keeps rewards inside [0, M] for any bound.
      rec.y = rng.bernoulli(q / M) ? M : 0.0;
    } else {
      rec.y = std::clamp(q + 0.1 * M * rng.normal(), 0.0, M);
    }
    data.records.push_back(rec);
  }
  return data;
}

TwoStagePolicy random_feasible_policy(const Environment& env, CounterRng& rng,
                                      const std::string& id) {
  TwoStagePolicy pi;
  pi.id = id;
  pi.stage1.resize(uz(env.num_contexts()));
  pi.stage2.resize(uz(env.num_contexts()));
  for (int c = 0; c < env.num_contexts(); ++c) {
    pi.stage1[uz(c)] = normalized_positive(rng, uz(env.num_generators));
    pi.stage2[uz(c)].resize(uz(env.num_generators));
    for (int g = 0; g < env.num_generators; ++g) {
      pi.stage2[uz(c)][uz(g)] = normalized_positive(rng, env.feasible_set(c, g).size());
    }
  }
  return pi;
}

}  // namespace casp
