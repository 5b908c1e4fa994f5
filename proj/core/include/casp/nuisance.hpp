#pragma once

#include <cstdint>
#include <unordered_map>
#include <vector>

#include "casp/environment.hpp"
#include "casp/simulate.hpp"

namespace casp {

/// Cell scheme for the tabular reward model. context_pair keys cells by
/// (context, generator, item) and suits simulation, where contexts repeat.
/// item_only keys by item alone and suits the application, where every
/// context is unique so per-context cells would always be empty out of
/// sample.
enum class RewardCells { context_pair, item_only };

/// Cross-fitted tabular reward estimates. tables[f] holds the smoothed cell
/// means fit on all records outside fold f; queries for unseen cells fall
/// back to the training-fold prior. Values are clipped to [0, reward_bound].
struct RewardModel {
  int folds = 1;
  RewardCells cells = RewardCells::context_pair;
  double reward_bound = 1.0;
  std::vector<int> fold_of;                                    // per training record
  std::vector<double> fold_prior;                              // per fold
  std::vector<std::unordered_map<std::uint64_t, double>> tables;  // per fold

  double value(int fold, int context, int generator, int item) const;

  static std::uint64_t cell_key(RewardCells cells, int context, int generator, int item);
};

/// Behavior propensity source: full per-context tables aligned with a
/// feasible map, plus a denominator floor. raw joints can be zero
/// (off-support pairs); floored joints are max(raw, floor), and a zero raw
/// joint with no floor raises OffSupportError.
struct Propensities {
  FeasibleMap feasible;
  TwoStagePolicy behavior;
  double floor = 0.0;

  double raw_joint(int context, int generator, int index) const {
    return behavior.stage1[static_cast<std::size_t>(context)][static_cast<std::size_t>(generator)] *
           behavior.stage2[static_cast<std::size_t>(context)][static_cast<std::size_t>(generator)]
                          [static_cast<std::size_t>(index)];
  }

  /// max(raw, floor); throws OffSupportError when raw is 0 and floor is 0.
  double floored_joint(int context, int generator, int index) const;

  /// True when the raw joint is zero, i.e. the pair only exists post-floor.
  bool at_floor(int context, int generator, int index) const {
    return raw_joint(context, generator, index) == 0.0;
  }
};

/// Exact logged propensities taken from the environment's behavior tables.
Propensities logged_propensities(const Environment& env, double floor = 0.0);

/// Propensities as engineered by a reconstruction pipeline: caller supplies
/// the support map and the logger's closed-form tables.
Propensities reconstructed_propensities(FeasibleMap support, TwoStagePolicy logger_tables,
                                        double floor);

/// Logged propensities with multiplicative noise of relative size delta on
/// every strictly positive entry, renormalized per row; delta = 0 returns the
/// logged tables bit-identically. Used to study value/burden bias under
/// propensity misspecification.
Propensities perturbed_propensities(const Environment& env, double delta, std::uint64_t seed,
                                    double floor = 0.0);

/// Cross-fitted tabular fit: q_hat(cell) = (sum y + smoothing * prior) /
/// (count + smoothing) over the records outside each fold, prior = that
/// training set's mean reward.
RewardModel fit_reward_crossfit(const LoggedDataset& data, int folds, double smoothing,
                                std::uint64_t seed, double reward_bound = 1.0,
                                RewardCells cells = RewardCells::context_pair);

/// Single-fold tabular fit on the whole dataset (no cross-fitting); used for
/// candidate construction on a training split that is disjoint from the
/// selection split.
RewardModel fit_reward_pooled(const LoggedDataset& data, double smoothing,
                              double reward_bound = 1.0,
                              RewardCells cells = RewardCells::context_pair);

/// Single-fold model equal to the environment's true rewards on every
/// feasible cell (for exactness audits).
RewardModel exact_reward_model(const Environment& env);

/// Mean over folds of the model's estimate at one cell.
double reward_fold_mean(const RewardModel& model, int context, int generator, int item);

struct NuisanceGap {
  double delta_v = 0.0;  // worst conditional value bias over the library
  double delta_b = 0.0;  // worst conditional burden bias over the library
};

/// Exact conditional bias of the doubly robust value and of the estimated
/// burden given a fixed nuisance bundle, maximized over the library. Computed
/// by full enumeration against the environment's ground truth: the value bias
/// vanishes whenever the propensities or the rewards are exact.
NuisanceGap audit_nuisance_gap(const Environment& env, const RewardModel& reward,
                               const Propensities& prop, const PolicyLibrary& library);

}  // namespace casp
