#pragma once

#include <string>
#include <vector>

namespace casp {

/// Per-context feasible item sets, indexed [context][generator] -> ordered
/// item list. Ordering is the tie-break baseline everywhere: stage-2
/// probability vectors and reward tables are aligned with these lists.
using FeasibleMap = std::vector<std::vector<std::vector<int>>>;

/// A feasible two-stage policy: a stage-1 distribution over generators per
/// context and a stage-2 distribution over the feasible set per
/// (context, generator). Stage-2 vectors are aligned with the feasible map,
/// so mass outside a feasible set is unrepresentable by construction.
struct TwoStagePolicy {
  std::string id;
  std::vector<std::vector<double>> stage1;               // [context][generator]
  std::vector<std::vector<std::vector<double>>> stage2;  // [context][generator][feasible index]

  int num_contexts() const { return static_cast<int>(stage1.size()); }
  int num_generators() const { return stage1.empty() ? 0 : static_cast<int>(stage1[0].size()); }

  /// Joint probability of picking (generator, feasible index) at a context.
  double joint(int context, int generator, int index) const {
    return stage1[static_cast<std::size_t>(context)][static_cast<std::size_t>(generator)] *
           stage2[static_cast<std::size_t>(context)][static_cast<std::size_t>(generator)]
                 [static_cast<std::size_t>(index)];
  }
};

/// Finite-support ground truth: enumerated contexts with explicit
/// probabilities, a feasible-set map, a bounded reward table aligned with the
/// feasible sets, and the logging (behavior) policy. Population values,
/// burdens, and regrets over this object are exact weighted sums.
struct Environment {
  std::string id;
  std::vector<double> context_probs;               // sums to 1
  std::vector<std::vector<double>> features;       // optional, [context][d]
  int num_generators = 0;                          // K1
  int num_items = 0;                               // K2
  FeasibleMap feasible;                            // nonempty ordered sets
  std::vector<std::vector<std::vector<double>>> reward;  // aligned with feasible, in [0, M]
  double reward_bound = 1.0;                       // M
  TwoStagePolicy behavior;
  /// Optional continuation-blind stage-1 proxy scores, [context][generator].
  /// Empty means "no engineered proxy"; the stagewise baseline then falls
  /// back to empirical per-generator mean reward.
  std::vector<std::vector<double>> proxy_scores;

  int num_contexts() const { return static_cast<int>(context_probs.size()); }

  const std::vector<int>& feasible_set(int context, int generator) const {
    return feasible[static_cast<std::size_t>(context)][static_cast<std::size_t>(generator)];
  }

  double reward_at(int context, int generator, int index) const {
    return reward[static_cast<std::size_t>(context)][static_cast<std::size_t>(generator)]
                 [static_cast<std::size_t>(index)];
  }

  /// Smallest strictly positive behavior propensity (stage 1 or stage 2) over
  /// contexts with positive probability. This is the computed overlap floor
  /// used by the deviation-bound checks; it is a property of the logging
  /// design, never an assumption.
  double overlap_floor() const;
};

/// Ordered list of candidate policies with unique ids.
struct PolicyLibrary {
  std::vector<TwoStagePolicy> policies;

  int size() const { return static_cast<int>(policies.size()); }
  const TwoStagePolicy& at(int i) const { return policies[static_cast<std::size_t>(i)]; }
};

/// Validates structural invariants of an environment: probabilities
/// normalized, feasible sets nonempty, rewards within [0, M], behavior
/// feasible. Throws FeasibilityError / ConfigError on violation.
void validate_environment(const Environment& env);

/// Validates that a policy is feasible for the environment: matching shape,
/// nonnegative vectors summing to 1 within 1e-12. Throws FeasibilityError.
void validate_policy(const Environment& env, const TwoStagePolicy& pi);

/// Validates id uniqueness and feasibility of every library member.
void validate_library(const Environment& env, const PolicyLibrary& library);

/// The uniform-over-feasible policy: stage 1 uniform over generators with
/// nonempty feasible sets, stage 2 uniform within each feasible set.
TwoStagePolicy uniform_policy(const FeasibleMap& feasible, const std::string& id = "uniform");

/// Deterministic policy from per-context generator picks and per
/// (context, generator) feasible-index picks.
TwoStagePolicy deterministic_policy(const FeasibleMap& feasible,
                                    const std::vector<int>& generator_pick,
                                    const std::vector<std::vector<int>>& index_pick,
                                    const std::string& id);

}  // namespace casp
