#pragma once

#include <string>
#include <vector>

#include "casp/environment.hpp"
#include "casp/nuisance.hpp"
#include "casp/policy_math.hpp"
#include "casp/simulate.hpp"

namespace casp {

struct Diagnostics {
  double ess = 0.0;
  double max_weight = 0.0;
  double off_support_mass = 0.0;          // target mass on pre-floor-zero pairs
  std::vector<double> generator_share;    // mean stage-1 distribution over logged contexts
};

struct PolicyEstimate {
  std::string policy_id;
  double v_ips = 0.0;
  double v_dr = 0.0;
  double v_plugin = 0.0;
  double burden = 0.0;
  double ess = 0.0;
  double max_weight = 0.0;
  double off_support_mass = 0.0;
  std::vector<double> generator_share;
  std::vector<double> j_lambda;    // aligned with the lambda grid it was built for
  std::vector<double> dr_scores;   // per record, kept for LCB standard errors
};

/// Importance-weighted value: mean of w * y; the self-normalized variant
/// divides by the mean weight instead of n.
double ips_value(const LoggedDataset& data, const TwoStagePolicy& pi, const Propensities& prop,
                 bool self_normalized = false);

/// Per-record doubly robust scores
///   psi_i = m_{q_hat_i}(x_i; pi) + w_i * (y_i - q_hat_i(x_i, a1_i, a2_i)),
/// with each record scored by its own out-of-sample fold. The model term sums
/// pi over the full feasible map of the record's context.
std::vector<double> dr_score_records(const LoggedDataset& data, const TwoStagePolicy& pi,
                                     const RewardModel& reward, const Propensities& prop);

double dr_value(const LoggedDataset& data, const TwoStagePolicy& pi, const RewardModel& reward,
                const Propensities& prop);

/// Plug-in model value (1/n) sum_i m_{q_hat_i}(x_i; pi): the pure reward-model
/// estimate with no propensity correction.
double plugin_value(const LoggedDataset& data, const TwoStagePolicy& pi,
                    const RewardModel& reward, const Propensities& prop);

/// Sample average over logged contexts of the conditional burden, evaluated
/// against the full feasible map.
double empirical_burden(const LoggedDataset& data, const TwoStagePolicy& pi,
                        const Propensities& prop, BurdenMode mode = BurdenMode::raw_full);

/// J_lambda = V - lambda * B. Negative lambda is a configuration error.
double casp_score(double value, double burden, double lambda);

Diagnostics compute_diagnostics(const LoggedDataset& data, const TwoStagePolicy& pi,
                                const Propensities& prop);

/// Full estimate row: DR, IPS, burden, diagnostics, and J_lambda over a grid.
PolicyEstimate evaluate_policy(const LoggedDataset& data, const TwoStagePolicy& pi,
                               const RewardModel& reward, const Propensities& prop,
                               const std::vector<double>& lambdas,
                               BurdenMode mode = BurdenMode::raw_full);

/// CSV header and row form of a PolicyEstimate (headers are pinned:
/// policy_id, v_dr, v_ips, burden, ess, max_w, off_support_mass,
/// j_lambda_{lambda}).
std::vector<std::string> estimate_csv_header(const std::vector<double>& lambdas);
std::vector<std::string> estimate_csv_row(const PolicyEstimate& est);

}  // namespace casp
