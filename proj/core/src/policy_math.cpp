#include "casp/policy_math.hpp"

#include <algorithm>
#include <cstddef>

#include "casp/errors.hpp"
#include "casp/util.hpp"

namespace casp {

namespace {

std::size_t uz(int v) { return static_cast<std::size_t>(v); }

double floored_den(double raw, double floor, int context, int generator, int item) {
  if (floor > 0.0) return std::max(raw, floor);
  if (raw <= 0.0) throw OffSupportError(context, generator, item);
  return raw;
}

}  // namespace

BurdenMode burden_mode_from_string(const std::string& name) {
  if (name == "raw_full") return BurdenMode::raw_full;
  if (name == "stage1_only") return BurdenMode::stage1_only;
  if (name == "stage2_only") return BurdenMode::stage2_only;
  if (name == "normalized_full") return BurdenMode::normalized_full;
  throw ConfigError("unknown burden mode '" + name + "'");
}

std::string to_string(BurdenMode mode) {
  switch (mode) {
    case BurdenMode::raw_full: return "raw_full";
    case BurdenMode::stage1_only: return "stage1_only";
    case BurdenMode::stage2_only: return "stage2_only";
    case BurdenMode::normalized_full: return "normalized_full";
  }
  return "raw_full";
}

double policy_value(const Environment& env, const TwoStagePolicy& pi) {
  validate_policy(env, pi);
  KahanSum total;
  for (int c = 0; c < env.num_contexts(); ++c) {
    const double px = env.context_probs[uz(c)];
    if (px <= 0.0) continue;
    for (int g = 0; g < env.num_generators; ++g) {
      const double p1 = pi.stage1[uz(c)][uz(g)];
      if (p1 <= 0.0) continue;
      const auto& row = pi.stage2[uz(c)][uz(g)];
      const auto& rew = env.reward[uz(c)][uz(g)];
      for (std::size_t i = 0; i < row.size(); ++i) {
        total.add(px * p1 * row[i] * rew[i]);
      }
    }
  }
  return total.value();
}

std::vector<std::vector<double>> continuation_values(const Environment& env,
                                                     const TwoStagePolicy& pi) {
  std::vector<std::vector<double>> m(uz(env.num_contexts()),
                                     std::vector<double>(uz(env.num_generators), 0.0));
  for (int c = 0; c < env.num_contexts(); ++c) {
    for (int g = 0; g < env.num_generators; ++g) {
      const auto& row = pi.stage2[uz(c)][uz(g)];
      const auto& rew = env.reward[uz(c)][uz(g)];
      KahanSum sum;
      for (std::size_t i = 0; i < row.size(); ++i) sum.add(row[i] * rew[i]);
      m[uz(c)][uz(g)] = sum.value();
    }
  }
  return m;
}

std::vector<std::vector<double>> optimal_continuation(const Environment& env) {
  std::vector<std::vector<double>> m(uz(env.num_contexts()),
                                     std::vector<double>(uz(env.num_generators), 0.0));
  for (int c = 0; c < env.num_contexts(); ++c) {
    for (int g = 0; g < env.num_generators; ++g) {
      const auto& rew = env.reward[uz(c)][uz(g)];
      double best = 0.0;
      if (!rew.empty()) best = *std::max_element(rew.begin(), rew.end());
      m[uz(c)][uz(g)] = best;
    }
  }
  return m;
}

TwoStagePolicy oracle_policy(const Environment& env) {
  const auto m_star = optimal_continuation(env);
  std::vector<int> generator_pick(uz(env.num_contexts()), 0);
  std::vector<std::vector<int>> index_pick(uz(env.num_contexts()),
                                           std::vector<int>(uz(env.num_generators), 0));
  for (int c = 0; c < env.num_contexts(); ++c) {
    generator_pick[uz(c)] = argmax_index(m_star[uz(c)]);
    for (int g = 0; g < env.num_generators; ++g) {
      const auto& rew = env.reward[uz(c)][uz(g)];
      if (!rew.empty()) index_pick[uz(c)][uz(g)] = argmax_index(rew);
    }
  }
  return deterministic_policy(env.feasible, generator_pick, index_pick, "oracle");
}

double coupled_weight_index(const Environment& env, const TwoStagePolicy& pi, int context,
                            int generator, int index, double floor) {
  const double p = pi.stage1[uz(context)][uz(generator)] *
                   pi.stage2[uz(context)][uz(generator)][uz(index)];
  if (p == 0.0) return 0.0;
  const double raw = env.behavior.stage1[uz(context)][uz(generator)] *
                     env.behavior.stage2[uz(context)][uz(generator)][uz(index)];
  const int item = env.feasible_set(context, generator)[uz(index)];
  return p / floored_den(raw, floor, context, generator, item);
}

double coupled_weight(const Environment& env, const TwoStagePolicy& pi, int context,
                      int generator, int item, double floor) {
  const auto& set = env.feasible_set(context, generator);
  const auto it = std::find(set.begin(), set.end(), item);
  if (it == set.end()) {
    throw FeasibilityError("item " + std::to_string(item) + " is not feasible at context " +
                           std::to_string(context) + ", generator " + std::to_string(generator));
  }
  return coupled_weight_index(env, pi, context, generator,
                              static_cast<int>(it - set.begin()), floor);
}

double conditional_burden(const FeasibleMap& feasible, const TwoStagePolicy& behavior,
                          const TwoStagePolicy& pi, int context, BurdenMode mode, double floor) {
  const auto& sets = feasible[uz(context)];
  const auto& mu1 = behavior.stage1[uz(context)];
  const auto& mu2 = behavior.stage2[uz(context)];
  const auto& p1 = pi.stage1[uz(context)];
  const auto& p2 = pi.stage2[uz(context)];
  KahanSum sum;
  switch (mode) {
    case BurdenMode::stage1_only: {
      for (std::size_t g = 0; g < sets.size(); ++g) {
        const double p = p1[g];
        if (p <= 0.0) continue;
        const double den =
            floored_den(mu1[g], floor, context, static_cast<int>(g), -1);
        sum.add(p * p / den);
      }
      return sum.value();
    }
    case BurdenMode::stage2_only: {
      for (std::size_t g = 0; g < sets.size(); ++g) {
        const double m1 = mu1[g];
        if (m1 <= 0.0) continue;
        KahanSum inner;
        for (std::size_t i = 0; i < sets[g].size(); ++i) {
          const double p = p2[g][i];
          if (p <= 0.0) continue;
          const double den =
              floored_den(mu2[g][i], floor, context, static_cast<int>(g), sets[g][i]);
          inner.add(p * p / den);
        }
        sum.add(m1 * inner.value());
      }
      return sum.value();
    }
    case BurdenMode::normalized_full: {
      const TwoStagePolicy uni = uniform_policy(feasible, "uniform-reference");
      const double raw =
          conditional_burden(feasible, behavior, pi, context, BurdenMode::raw_full, floor);
      const double ref =
          conditional_burden(feasible, behavior, uni, context, BurdenMode::raw_full, floor);
      return ref > 0.0 ? raw / ref : 0.0;
    }
    case BurdenMode::raw_full:
      break;
  }
  for (std::size_t g = 0; g < sets.size(); ++g) {
    const double pg = p1[g];
    if (pg <= 0.0) continue;
    for (std::size_t i = 0; i < sets[g].size(); ++i) {
      const double p = pg * p2[g][i];
      if (p <= 0.0) continue;
      const double den =
          floored_den(mu1[g] * mu2[g][i], floor, context, static_cast<int>(g), sets[g][i]);
      sum.add(p * p / den);
    }
  }
  return sum.value();
}

BurdenResult burden(const Environment& env, const TwoStagePolicy& pi, BurdenMode mode,
                    double floor) {
  BurdenResult out;
  out.per_context.resize(uz(env.num_contexts()), 0.0);
  KahanSum total;
  for (int c = 0; c < env.num_contexts(); ++c) {
    const double b = conditional_burden(env.feasible, env.behavior, pi, c, mode, floor);
    out.per_context[uz(c)] = b;
    total.add(env.context_probs[uz(c)] * b);
  }
  out.global = total.value();
  return out;
}

}  // namespace casp
