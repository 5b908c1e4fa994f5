#include "casp/estimate.hpp"

#include <algorithm>
#include <cstddef>
#include <unordered_map>

#include "casp/errors.hpp"
#include "casp/io.hpp"
#include "casp/util.hpp"

namespace casp {

namespace {

std::size_t uz(int v) { return static_cast<std::size_t>(v); }

double record_weight(const LoggedRecord& rec, const TwoStagePolicy& pi,
                     const Propensities& prop) {
  const double target = pi.joint(rec.context, rec.generator, rec.index);
  if (target == 0.0) return 0.0;
  return target / prop.floored_joint(rec.context, rec.generator, rec.index);
}

/// Model value m_{q_hat}(x; pi) over the full feasible map of one context.
double model_value_at(const TwoStagePolicy& pi, const Propensities& prop,
                      const RewardModel& reward, int fold, int context) {
  const auto& sets = prop.feasible[uz(context)];
  KahanSum m;
  for (std::size_t g = 0; g < sets.size(); ++g) {
    const double p1 = pi.stage1[uz(context)][g];
    if (p1 <= 0.0) continue;
    const auto& row = pi.stage2[uz(context)][g];
    for (std::size_t i = 0; i < sets[g].size(); ++i) {
      if (row[i] <= 0.0) continue;
      m.add(p1 * row[i] * reward.value(fold, context, static_cast<int>(g), sets[g][i]));
    }
  }
  return m.value();
}

int fold_for(const RewardModel& reward, int record_index) {
  if (reward.fold_of.empty()) return 0;
  return reward.fold_of[uz(record_index)];
}

}  // namespace

double ips_value(const LoggedDataset& data, const TwoStagePolicy& pi, const Propensities& prop,
                 bool self_normalized) {
  if (data.size() == 0) throw DataError("cannot estimate on an empty dataset");
  KahanSum weighted;
  KahanSum weights;
  for (const LoggedRecord& rec : data.records) {
    const double w = record_weight(rec, pi, prop);
    weighted.add(w * rec.y);
    weights.add(w);
  }
  const double n = static_cast<double>(data.size());
  if (self_normalized) {
    const double z = weights.value();
    return z > 0.0 ? weighted.value() / z : 0.0;
  }
  return weighted.value() / n;
}

std::vector<double> dr_score_records(const LoggedDataset& data, const TwoStagePolicy& pi,
                                     const RewardModel& reward, const Propensities& prop) {
  if (data.size() == 0) throw DataError("cannot estimate on an empty dataset");
  std::vector<double> scores(uz(data.size()), 0.0);
  // Contexts repeat in simulation logs, so cache the model term per
  // (fold, context). Application contexts are unique and fall through.
  std::unordered_map<std::uint64_t, double> m_cache;
  m_cache.reserve(64);
  for (int i = 0; i < data.size(); ++i) {
    const LoggedRecord& rec = data.records[uz(i)];
    const int fold = fold_for(reward, i);
    const std::uint64_t key =
        (static_cast<std::uint64_t>(fold) << 40) | static_cast<std::uint64_t>(rec.context);
    double m = 0.0;
    if (const auto it = m_cache.find(key); it != m_cache.end()) {
      m = it->second;
    } else {
      m = model_value_at(pi, prop, reward, fold, rec.context);
      m_cache.emplace(key, m);
    }
    const double w = record_weight(rec, pi, prop);
    const double qhat = reward.value(fold, rec.context, rec.generator, rec.item);
    scores[uz(i)] = m + w * (rec.y - qhat);
  }
  return scores;
}

double dr_value(const LoggedDataset& data, const TwoStagePolicy& pi, const RewardModel& reward,
                const Propensities& prop) {
  const auto scores = dr_score_records(data, pi, reward, prop);
  return mean(scores);
}

double plugin_value(const LoggedDataset& data, const TwoStagePolicy& pi,
                    const RewardModel& reward, const Propensities& prop) {
  if (data.size() == 0) throw DataError("cannot estimate on an empty dataset");
  KahanSum total;
  std::unordered_map<std::uint64_t, double> m_cache;
  for (int i = 0; i < data.size(); ++i) {
    const LoggedRecord& rec = data.records[uz(i)];
    const int fold = fold_for(reward, i);
    const std::uint64_t key =
        (static_cast<std::uint64_t>(fold) << 40) | static_cast<std::uint64_t>(rec.context);
    if (const auto it = m_cache.find(key); it != m_cache.end()) {
      total.add(it->second);
    } else {
      const double m = model_value_at(pi, prop, reward, fold, rec.context);
      m_cache.emplace(key, m);
      total.add(m);
    }
  }
  return total.value() / static_cast<double>(data.size());
}

double empirical_burden(const LoggedDataset& data, const TwoStagePolicy& pi,
                        const Propensities& prop, BurdenMode mode) {
  if (data.size() == 0) throw DataError("cannot estimate on an empty dataset");
  // Conditional burden depends on the record only through its context.
  std::unordered_map<int, double> cache;
  KahanSum total;
  for (const LoggedRecord& rec : data.records) {
    if (const auto it = cache.find(rec.context); it != cache.end()) {
      total.add(it->second);
    } else {
      const double b =
          conditional_burden(prop.feasible, prop.behavior, pi, rec.context, mode, prop.floor);
      cache.emplace(rec.context, b);
      total.add(b);
    }
  }
  return total.value() / static_cast<double>(data.size());
}

double casp_score(double value, double burden, double lambda) {
  if (lambda < 0.0) throw ConfigError("penalty lambda must be nonnegative");
  return value - lambda * burden;
}

Diagnostics compute_diagnostics(const LoggedDataset& data, const TwoStagePolicy& pi,
                                const Propensities& prop) {
  if (data.size() == 0) throw DataError("cannot compute diagnostics on an empty dataset");
  Diagnostics diag;
  const int k1 = pi.num_generators();
  diag.generator_share.assign(uz(k1), 0.0);
  KahanSum w_sum;
  KahanSum w2_sum;
  KahanSum off_mass;
  std::unordered_map<int, double> off_cache;
  for (const LoggedRecord& rec : data.records) {
    const double w = record_weight(rec, pi, prop);
    w_sum.add(w);
    w2_sum.add(w * w);
    diag.max_weight = std::max(diag.max_weight, w);
    for (int g = 0; g < k1; ++g) {
      diag.generator_share[uz(g)] += pi.stage1[uz(rec.context)][uz(g)];
    }
    if (const auto it = off_cache.find(rec.context); it != off_cache.end()) {
      off_mass.add(it->second);
    } else {
      const auto& sets = prop.feasible[uz(rec.context)];
      KahanSum mass;
      for (std::size_t g = 0; g < sets.size(); ++g) {
        const double p1 = pi.stage1[uz(rec.context)][g];
        if (p1 <= 0.0) continue;
        for (std::size_t i = 0; i < sets[g].size(); ++i) {
          const double p = p1 * pi.stage2[uz(rec.context)][g][i];
          if (p > 0.0 &&
              prop.at_floor(rec.context, static_cast<int>(g), static_cast<int>(i))) {
            mass.add(p);
          }
        }
      }
      off_cache.emplace(rec.context, mass.value());
      off_mass.add(mass.value());
    }
  }
  const double n = static_cast<double>(data.size());
  const double s = w_sum.value();
  const double s2 = w2_sum.value();
  diag.ess = s2 > 0.0 ? (s * s) / s2 : 0.0;
  diag.off_support_mass = off_mass.value() / n;
  for (double& share : diag.generator_share) share /= n;
  return diag;
}

PolicyEstimate evaluate_policy(const LoggedDataset& data, const TwoStagePolicy& pi,
                               const RewardModel& reward, const Propensities& prop,
                               const std::vector<double>& lambdas, BurdenMode mode) {
  PolicyEstimate est;
  est.policy_id = pi.id;
  est.dr_scores = dr_score_records(data, pi, reward, prop);
  est.v_dr = mean(est.dr_scores);
  est.v_ips = ips_value(data, pi, prop);
  est.v_plugin = plugin_value(data, pi, reward, prop);
  est.burden = empirical_burden(data, pi, prop, mode);
  const Diagnostics diag = compute_diagnostics(data, pi, prop);
  est.ess = diag.ess;
  est.max_weight = diag.max_weight;
  est.off_support_mass = diag.off_support_mass;
  est.generator_share = diag.generator_share;
  est.j_lambda.reserve(lambdas.size());
  for (double lam : lambdas) est.j_lambda.push_back(casp_score(est.v_dr, est.burden, lam));
  return est;
}

std::vector<std::string> estimate_csv_header(const std::vector<double>& lambdas) {
  std::vector<std::string> header = {"policy_id", "v_dr",  "v_ips",
                                     "burden",    "ess",   "max_w",
                                     "off_support_mass"};
  for (double lam : lambdas) header.push_back("j_lambda_" + format_double(lam));
  return header;
}

std::vector<std::string> estimate_csv_row(const PolicyEstimate& est) {
  std::vector<std::string> row = {est.policy_id,
                                  format_double(est.v_dr),
                                  format_double(est.v_ips),
                                  format_double(est.burden),
                                  format_double(est.ess),
                                  format_double(est.max_weight),
                                  format_double(est.off_support_mass)};
  for (double j : est.j_lambda) row.push_back(format_double(j));
  return row;
}

}  // namespace casp
