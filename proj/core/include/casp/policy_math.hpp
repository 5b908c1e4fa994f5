#pragma once

#include <string>
#include <vector>

#include "casp/environment.hpp"

namespace casp {

/// Burden accounting variants. raw_full is the defining second moment of the
/// coupled ratio. stage1_only / stage2_only replace the other stage's ratio
/// by 1 inside the expectation, so each isolates one stage's support
/// reliance. normalized_full divides the raw conditional burden by the
/// conditional burden of the uniform-over-feasible policy at the same
/// context, making scores comparable across feasible-set sizes.
enum class BurdenMode { raw_full, stage1_only, stage2_only, normalized_full };

BurdenMode burden_mode_from_string(const std::string& name);
std::string to_string(BurdenMode mode);

/// Exact end-to-end value V(pi) = sum_x P(x) sum_g pi1 sum_items pi2 q.
/// Throws FeasibilityError if pi is not feasible for env.
double policy_value(const Environment& env, const TwoStagePolicy& pi);

/// Continuation values m_{pi2}(x, a1) = sum over the feasible set of
/// pi2(item | x, a1) * q(x, a1, item), for every (context, generator).
std::vector<std::vector<double>> continuation_values(const Environment& env,
                                                     const TwoStagePolicy& pi);

/// Optimal continuation m*(x, a1) = max over the feasible set of q.
std::vector<std::vector<double>> optimal_continuation(const Environment& env);

/// Deterministic value-optimal policy: stage 2 greedy in q per
/// (context, generator), stage 1 greedy in m*(x, .). Ties resolve to the
/// lowest index.
TwoStagePolicy oracle_policy(const Environment& env);

/// Coupled importance ratio w = pi1*pi2 / (mu1*mu2) at a feasible-index
/// triple. A zero behavior denominator under positive target mass throws
/// OffSupportError unless floor > 0, in which case the joint denominator is
/// floored: w = pi1*pi2 / max(mu1*mu2, floor).
double coupled_weight_index(const Environment& env, const TwoStagePolicy& pi, int context,
                            int generator, int index, double floor = 0.0);

/// Same ratio addressed by item id (resolved against the ordered feasible
/// set). Throws FeasibilityError if the item is not feasible.
double coupled_weight(const Environment& env, const TwoStagePolicy& pi, int context,
                      int generator, int item, double floor = 0.0);

/// Conditional support burden B(pi; x) under the requested mode, computed
/// from the feasible map and behavior tables. raw_full equals the exact
/// second moment E_mu[w^2 | x]. Floor semantics match coupled_weight.
double conditional_burden(const FeasibleMap& feasible, const TwoStagePolicy& behavior,
                          const TwoStagePolicy& pi, int context,
                          BurdenMode mode = BurdenMode::raw_full, double floor = 0.0);

struct BurdenResult {
  std::vector<double> per_context;
  double global = 0.0;  // context-probability-weighted average
};

/// Population burden: per-context conditional burdens and their
/// context-probability-weighted average.
BurdenResult burden(const Environment& env, const TwoStagePolicy& pi,
                    BurdenMode mode = BurdenMode::raw_full, double floor = 0.0);

}  // namespace casp
