#include "casp/nuisance.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>

#include "casp/errors.hpp"
#include "casp/policy_math.hpp"
#include "casp/rng.hpp"
#include "casp/util.hpp"

namespace casp {

namespace {

std::size_t uz(int v) { return static_cast<std::size_t>(v); }

}  // namespace

std::uint64_t RewardModel::cell_key(RewardCells cells, int context, int generator, int item) {
  if (cells == RewardCells::item_only) return static_cast<std::uint64_t>(item);
  // context < 2^32, generator < 2^8, item < 2^24 by construction everywhere.
  return (static_cast<std::uint64_t>(context) << 32) |
         (static_cast<std::uint64_t>(generator) << 24) | static_cast<std::uint64_t>(item);
}

double RewardModel::value(int fold, int context, int generator, int item) const {
  const auto& table = tables[uz(fold)];
  const auto it = table.find(cell_key(cells, context, generator, item));
  if (it != table.end()) return it->second;
  return fold_prior[uz(fold)];
}

double Propensities::floored_joint(int context, int generator, int index) const {
  const double raw = raw_joint(context, generator, index);
  if (floor > 0.0) return std::max(raw, floor);
  if (raw <= 0.0) {
    throw OffSupportError(context, generator,
                          feasible[uz(context)][uz(generator)][uz(index)]);
  }
  return raw;
}

Propensities logged_propensities(const Environment& env, double floor) {
  Propensities p;
  p.feasible = env.feasible;
  p.behavior = env.behavior;
  p.floor = floor;
  return p;
}

Propensities reconstructed_propensities(FeasibleMap support, TwoStagePolicy logger_tables,
                                        double floor) {
  Propensities p;
  p.feasible = std::move(support);
  p.behavior = std::move(logger_tables);
  p.floor = floor;
  return p;
}

Propensities perturbed_propensities(const Environment& env, double delta, std::uint64_t seed,
                                    double floor) {
  if (delta < 0.0 || delta > 1.0) throw ConfigError("perturbation size must lie in [0, 1]");
  Propensities p = logged_propensities(env, floor);
  if (delta == 0.0) return p;
  CounterRng rng = CounterRng(seed).substream(kPerturbStream);
  auto perturb_row = [&](std::vector<double>& row) {
    double total = 0.0;
    for (double& v : row) {
      if (v > 0.0) {
        v *= 1.0 + delta * (2.0 * rng.next_double() - 1.0);
        total += v;
      }
    }
    if (total <= 0.0) return;
    for (double& v : row) {
      if (v > 0.0) v /= total;
    }
  };
  for (auto& row : p.behavior.stage1) perturb_row(row);
  for (auto& per_g : p.behavior.stage2) {
    for (auto& row : per_g) perturb_row(row);
  }
  return p;
}

RewardModel fit_reward_crossfit(const LoggedDataset& data, int folds, double smoothing,
                                std::uint64_t seed, double reward_bound, RewardCells cells) {
  const int n = data.size();
  if (n == 0) throw DataError("cannot fit a reward model on an empty dataset");
  if (folds < 2) throw ConfigError("cross-fitting needs at least 2 folds");
  if (folds > n) throw ConfigError("more folds than records");
  if (smoothing < 0.0) throw ConfigError("smoothing must be nonnegative");

  RewardModel model;
  model.folds = folds;
  model.cells = cells;
  model.reward_bound = reward_bound;
  model.fold_of.assign(uz(n), 0);
  model.fold_prior.assign(uz(folds), 0.0);
  model.tables.assign(uz(folds), {});

  CounterRng rng = CounterRng(seed).substream(kFoldStream);
  const std::vector<int> order = rng.sample_without_replacement(n, n);
  for (int pos = 0; pos < n; ++pos) {
    model.fold_of[uz(order[uz(pos)])] = pos % folds;
  }

  struct Cell {
    double sum = 0.0;
    int count = 0;
  };
  for (int f = 0; f < folds; ++f) {
    std::unordered_map<std::uint64_t, Cell> agg;
    KahanSum label_sum;
    int train_count = 0;
    for (int i = 0; i < n; ++i) {
      if (model.fold_of[uz(i)] == f) continue;
      const LoggedRecord& rec = data.records[uz(i)];
      auto& cell = agg[RewardModel::cell_key(cells, rec.context, rec.generator, rec.item)];
      cell.sum += rec.y;
      cell.count += 1;
      label_sum.add(rec.y);
      ++train_count;
    }
    const double prior =
        train_count > 0 ? label_sum.value() / static_cast<double>(train_count) : 0.0;
    model.fold_prior[uz(f)] = std::clamp(prior, 0.0, reward_bound);
    auto& table = model.tables[uz(f)];
    table.reserve(agg.size());
    for (const auto& [key, cell] : agg) {
      const double fit =
          (cell.sum + smoothing * prior) / (static_cast<double>(cell.count) + smoothing);
      table[key] = std::clamp(fit, 0.0, reward_bound);
    }
  }
  return model;
}

RewardModel fit_reward_pooled(const LoggedDataset& data, double smoothing, double reward_bound,
                              RewardCells cells) {
  const int n = data.size();
  if (n == 0) throw DataError("cannot fit a reward model on an empty dataset");
  if (smoothing < 0.0) throw ConfigError("smoothing must be nonnegative");
  RewardModel model;
  model.folds = 1;
  model.cells = cells;
  model.reward_bound = reward_bound;
  model.fold_prior.assign(1, 0.0);
  model.tables.assign(1, {});

  struct Cell {
    double sum = 0.0;
    int count = 0;
  };
  std::unordered_map<std::uint64_t, Cell> agg;
  KahanSum label_sum;
  for (const LoggedRecord& rec : data.records) {
    auto& cell = agg[RewardModel::cell_key(cells, rec.context, rec.generator, rec.item)];
    cell.sum += rec.y;
    cell.count += 1;
    label_sum.add(rec.y);
  }
  const double prior = label_sum.value() / static_cast<double>(n);
  model.fold_prior[0] = std::clamp(prior, 0.0, reward_bound);
  auto& table = model.tables[0];
  table.reserve(agg.size());
  for (const auto& [key, cell] : agg) {
    const double fit =
        (cell.sum + smoothing * prior) / (static_cast<double>(cell.count) + smoothing);
    table[key] = std::clamp(fit, 0.0, reward_bound);
  }
  return model;
}

RewardModel exact_reward_model(const Environment& env) {
  RewardModel model;
  model.folds = 1;
  model.cells = RewardCells::context_pair;
  model.reward_bound = env.reward_bound;
  model.fold_prior = {0.5 * env.reward_bound};
  model.tables.assign(1, {});
  auto& table = model.tables[0];
  for (int c = 0; c < env.num_contexts(); ++c) {
    for (int g = 0; g < env.num_generators; ++g) {
      const auto& set = env.feasible_set(c, g);
      for (std::size_t i = 0; i < set.size(); ++i) {
        table[RewardModel::cell_key(model.cells, c, g, set[i])] =
            env.reward_at(c, g, static_cast<int>(i));
      }
    }
  }
  return model;
}

double reward_fold_mean(const RewardModel& model, int context, int generator, int item) {
  KahanSum sum;
  for (int f = 0; f < model.folds; ++f) sum.add(model.value(f, context, generator, item));
  return sum.value() / static_cast<double>(model.folds);
}

NuisanceGap audit_nuisance_gap(const Environment& env, const RewardModel& reward,
                               const Propensities& prop, const PolicyLibrary& library) {
  if (library.size() == 0) throw ConfigError("nuisance audit needs a nonempty library");

  std::vector<double> fold_weight(uz(reward.folds), 1.0 / static_cast<double>(reward.folds));
  if (!reward.fold_of.empty()) {
    std::vector<int> counts(uz(reward.folds), 0);
    for (int f : reward.fold_of) counts[uz(f)] += 1;
    for (int f = 0; f < reward.folds; ++f) {
      fold_weight[uz(f)] =
          static_cast<double>(counts[uz(f)]) / static_cast<double>(reward.fold_of.size());
    }
  }

  NuisanceGap gap;
  for (const TwoStagePolicy& pi : library.policies) {
    const double true_value = policy_value(env, pi);
    const double true_burden = burden(env, pi).global;

    // Conditional mean of the doubly robust value given the fixed bundle:
    // full enumeration over (fold, context, pair) with data drawn from the
    // true environment but nuisances from the bundle.
    KahanSum cond_value;
    for (int f = 0; f < reward.folds; ++f) {
      KahanSum fold_mean;
      for (int c = 0; c < env.num_contexts(); ++c) {
        const double px = env.context_probs[uz(c)];
        if (px <= 0.0) continue;
        KahanSum model_term;   // m_{q_hat}(x; pi)
        KahanSum residual;     // E_mu[w * (q - q_hat) | x]
        for (int g = 0; g < env.num_generators; ++g) {
          const auto& set = env.feasible_set(c, g);
          const double p1 = pi.stage1[uz(c)][uz(g)];
          const double m1 = env.behavior.stage1[uz(c)][uz(g)];
          for (std::size_t i = 0; i < set.size(); ++i) {
            const double qhat = reward.value(f, c, g, set[i]);
            const double p2 = pi.stage2[uz(c)][uz(g)][i];
            model_term.add(p1 * p2 * qhat);
            const double target = p1 * p2;
            if (target <= 0.0) continue;
            const double mu = m1 * env.behavior.stage2[uz(c)][uz(g)][i];
            if (mu <= 0.0) continue;  // pair never logged, no residual contribution
            const double w = target / prop.floored_joint(c, g, static_cast<int>(i));
            residual.add(mu * w * (env.reward_at(c, g, static_cast<int>(i)) - qhat));
          }
        }
        fold_mean.add(px * (model_term.value() + residual.value()));
      }
      cond_value.add(fold_weight[uz(f)] * fold_mean.value());
    }
    gap.delta_v = std::max(gap.delta_v, std::abs(cond_value.value() - true_value));

    KahanSum cond_burden;
    for (int c = 0; c < env.num_contexts(); ++c) {
      cond_burden.add(env.context_probs[uz(c)] *
                      conditional_burden(prop.feasible, prop.behavior, pi, c,
                                         BurdenMode::raw_full, prop.floor));
    }
    gap.delta_b = std::max(gap.delta_b, std::abs(cond_burden.value() - true_burden));
  }
  return gap;
}

}  // namespace casp
