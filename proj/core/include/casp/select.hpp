#pragma once

#include <limits>
#include <string>
#include <vector>

#include "casp/environment.hpp"
#include "casp/estimate.hpp"
#include "casp/nuisance.hpp"
#include "casp/policy_math.hpp"
#include "casp/simulate.hpp"

namespace casp {

enum class SelectorKind {
  casp,
  constrained,
  dr_only,
  dr_lcb,
  plugin,
  stagewise,
  ma_style,
  wang_style,
  oracle,
};

SelectorKind selector_from_string(const std::string& name);
std::string to_string(SelectorKind kind);

struct SelectorConfig {
  SelectorKind kind = SelectorKind::casp;
  double lambda = 0.05;
  double beta = 0.50;
  double burden_max = std::numeric_limits<double>::infinity();
  BurdenMode burden_mode = BurdenMode::raw_full;
  std::vector<double> lambda_grid = {0.0, 0.01, 0.02, 0.05, 0.1, 0.2};
  unsigned threads = 0;  // 0 = hardware default
};

struct SelectionReport {
  SelectorKind kind = SelectorKind::casp;
  double lambda = 0.0;
  double beta = 0.0;
  double burden_max = std::numeric_limits<double>::infinity();
  BurdenMode burden_mode = BurdenMode::raw_full;
  std::string selected_id;
  int selected_index = -1;
  std::vector<double> scores;          // the selector's own objective per policy
  std::vector<PolicyEstimate> table;   // shared estimate rows, library order
};

/// Evaluates every library policy once (parallel over policies) and returns
/// the shared estimate table all selectors score against.
std::vector<PolicyEstimate> evaluate_library(const PolicyLibrary& library,
                                             const LoggedDataset& data,
                                             const RewardModel& reward, const Propensities& prop,
                                             const SelectorConfig& cfg);

/// Argmax with the deterministic tie-break used everywhere: higher score,
/// then lower estimated burden, then lexicographically smaller policy id.
int argmax_with_tiebreak(const std::vector<double>& scores,
                         const std::vector<PolicyEstimate>& table);

/// CASP selection: argmax of V_DR - lambda * B over the library.
SelectionReport select_casp(const PolicyLibrary& library, const LoggedDataset& data,
                            const RewardModel& reward, const Propensities& prop,
                            const SelectorConfig& cfg);

/// Constrained variant: argmax of V_DR among policies with B <= burden_max.
/// An unsatisfiable constraint raises ConfigError naming the minimum-burden
/// policy.
SelectionReport select_constrained(const PolicyLibrary& library, const LoggedDataset& data,
                                   const RewardModel& reward, const Propensities& prop,
                                   const SelectorConfig& cfg);

/// Comparator selectors (dr_only, dr_lcb, plugin, stagewise, ma_style,
/// wang_style, oracle). oracle requires the ground-truth environment and is
/// simulation-only; ma_style and wang_style are interpretive renderings of
/// two-stage counterparts, not reimplementations.
SelectionReport select_baseline(SelectorKind kind, const PolicyLibrary& library,
                                const LoggedDataset& data, const RewardModel& reward,
                                const Propensities& prop, const SelectorConfig& cfg,
                                const Environment* truth = nullptr);

/// Single entry point covering every kind (casp/constrained dispatch too).
SelectionReport run_selector(const SelectorConfig& cfg, const PolicyLibrary& library,
                             const LoggedDataset& data, const RewardModel& reward,
                             const Propensities& prop, const Environment* truth = nullptr);

/// Rescoring a precomputed table lets replication drivers evaluate once and
/// run every selector. stagewise and ma_style still need the dataset/model.
SelectionReport score_selector(const SelectorConfig& cfg, const PolicyLibrary& library,
                               const std::vector<PolicyEstimate>& table,
                               const LoggedDataset& data, const RewardModel& reward,
                               const Propensities& prop, const Environment* truth = nullptr);

/// Candidate library: the cross product of stage-1 rules (each deterministic
/// generator, softmax over estimated optimal continuations at temperatures
/// {0.1, 0.5, 1.0}, the behavior stage-1) with stage-2 rules (greedy in the
/// model, softmax at the same temperatures, uniform over feasible), truncated
/// to max_policies - 1 and closed with the behavior policy itself.
PolicyLibrary build_policy_library(const FeasibleMap& feasible, const TwoStagePolicy& behavior,
                                   const RewardModel& model, int max_policies = 40);

struct LambdaPathRow {
  double lambda = 0.0;
  std::string selected_id;
  double dr_value = 0.0;
  double burden = 0.0;
  double ess = 0.0;
  double max_weight = 0.0;
  double mode_frequency = 1.0;  // filled by replicated drivers
};

/// Value-burden path over a penalty grid; estimates are computed once.
std::vector<LambdaPathRow> lambda_sweep(const PolicyLibrary& library, const LoggedDataset& data,
                                        const RewardModel& reward, const Propensities& prop,
                                        const std::vector<double>& lambdas,
                                        const SelectorConfig& cfg);

struct StabilityResult {
  std::string mode_id;
  double mode_frequency = 0.0;
  int unique_count = 0;
};

/// Modal selected id, its frequency, and the distinct-selection count across
/// replications. Frequency ties resolve to the lexicographically smaller id.
StabilityResult replication_stability(const std::vector<std::string>& selected_ids);

}  // namespace casp
