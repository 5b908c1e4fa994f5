#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "casp/environment.hpp"
#include "casp/rng.hpp"

namespace casp {

enum class Block { counterexample, coupling, support_stress, large_action, sample_size };

Block block_from_string(const std::string& name);
std::string to_string(Block block);

struct BlockConfig {
  Block block = Block::coupling;
  double coupling_strength = 0.6;  // kappa in [0, 1]
  int num_contexts = 6;
  int k1 = 4;            // generators
  int k2 = 20;           // items
  int feasible_size = 5; // L, per (context, generator)
  double overlap_severity = 0.5;  // 1 = uniform logging, ->0 = sharp logging
  int n = 2400;
  std::uint64_t seed = 1;
  std::vector<double> sweep;  // grid of the block's varied parameter
  int replications = 24;
  bool bernoulli_rewards = true;  // y = M * Bernoulli(q / M); else clipped Gaussian
  double reward_bound = 1.0;
};

/// The grid each block sweeps by default: coupling 8 points in [0,1];
/// severity {1.0, 0.5, 0.25, 0.1}; item count {20, 50, 100} with L = K2/5;
/// sample size {600, 1200, 2400, 4800}; counterexample a single point at
/// reward bound 0.85.
std::vector<double> default_sweep(Block block);

/// Returns cfg with the block's varied parameter set to `value`.
BlockConfig apply_sweep_value(const BlockConfig& cfg, double value);

struct LoggedRecord {
  int context = 0;
  int generator = 0;
  int index = 0;  // position in the feasible set
  int item = 0;   // item id (redundant with index, kept for export)
  double y = 0.0;
  double mu1 = 0.0;
  double mu2 = 0.0;
};

struct LoggedDataset {
  std::string environment_id;
  std::uint64_t seed = 0;
  std::vector<LoggedRecord> records;

  int size() const { return static_cast<int>(records.size()); }
};

/// Degenerate one-context environment where the stage-1 proxy points at the
/// worthless generator: two generators with singleton feasible sets, rewards
/// 0 and M, uniform stage-1 logging, proxy maximized by the zero-reward
/// generator. Any continuation-blind stage-1 rule has value 0; the optimal
/// policy has value M.
Environment build_counterexample(double reward_bound);

/// Seeded block environment. Rewards follow
///   q(x, a1, a2) = (1 - kappa) * base(x, a2) + kappa * interaction(x, a1, a2)
/// with base/interaction uniform on [0, M]; feasible sets are seeded size-L
/// item subsets; behavior is a severity-blended softmax per stage
/// (severity 1 = exactly uniform over feasible pairs).
Environment build_block_env(const BlockConfig& cfg);

/// n i.i.d. draws: context from the environment distribution, stages from the
/// behavior policy, reward from the configured model. Records carry the exact
/// generating propensities.
LoggedDataset sample_log(const Environment& env, int n, std::uint64_t seed,
                         bool bernoulli_rewards = true);

/// Random feasible policy for property tests and theory checks: stage-1 and
/// stage-2 rows are normalized positive uniforms.
TwoStagePolicy random_feasible_policy(const Environment& env, CounterRng& rng,
                                      const std::string& id);

}  // namespace casp
