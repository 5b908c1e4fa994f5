#include "casp/theory.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "casp/environment.hpp"
#include "casp/estimate.hpp"
#include "casp/io.hpp"
#include "casp/nuisance.hpp"
#include "casp/policy_math.hpp"
#include "casp/rng.hpp"
#include "casp/select.hpp"
#include "casp/simulate.hpp"
#include "casp/util.hpp"

namespace casp {

namespace {

std::size_t uz(int v) { return static_cast<std::size_t>(v); }

/// Small enumerable environment with randomized dimensions, derived entirely
/// from one rng stream.
Environment small_random_env(CounterRng& rng) {
  BlockConfig cfg;
  cfg.block = Block::coupling;
  cfg.num_contexts = 2 + static_cast<int>(rng.next_below(4));  // 2..5
  cfg.k1 = 2 + static_cast<int>(rng.next_below(2));            // 2..3
  cfg.k2 = 4 + static_cast<int>(rng.next_below(3));            // 4..6
  cfg.feasible_size = 2 + static_cast<int>(rng.next_below(2)); // 2..3
  cfg.coupling_strength = rng.next_double();
  cfg.overlap_severity = 0.3 + 0.7 * rng.next_double();
  cfg.seed = rng.next_u64();
  return build_block_env(cfg);
}

PolicyLibrary random_library(const Environment& env, CounterRng& rng, int extra_policies) {
  PolicyLibrary library;
  TwoStagePolicy mu = env.behavior;
  mu.id = "behavior";
  library.policies.push_back(std::move(mu));
  library.policies.push_back(oracle_policy(env));
  for (int i = 0; i < extra_policies; ++i) {
    library.policies.push_back(
        random_feasible_policy(env, rng, "random" + std::to_string(i)));
  }
  return library;
}

CheckResult make_result(const std::string& name, bool pass, double statistic, double threshold,
                        const std::string& detail) {
  return CheckResult{name, pass, statistic, threshold, detail};
}

}  // namespace

CheckResult check_second_moment_identity(const TheoryConfig& cfg) {
  CounterRng master = CounterRng(cfg.seed).substream(1);
  double worst = 0.0;
  for (int e = 0; e < cfg.identity_envs; ++e) {
    CounterRng env_rng = master.substream(static_cast<std::uint64_t>(e));
    const Environment env = small_random_env(env_rng);
    for (int p = 0; p < cfg.identity_policies; ++p) {
      const TwoStagePolicy pi =
          random_feasible_policy(env, env_rng, "pi" + std::to_string(p));
      const double b = burden(env, pi).global + cfg.burden_perturbation;
      // Second moment computed from the other side of the identity:
      // E_mu[w^2] = sum_x P(x) sum_pairs mu1 mu2 w^2.
      KahanSum moment;
      for (int c = 0; c < env.num_contexts(); ++c) {
        KahanSum inner;
        for (int g = 0; g < env.num_generators; ++g) {
          const auto& set = env.feasible_set(c, g);
          for (std::size_t i = 0; i < set.size(); ++i) {
            const double mu = env.behavior.stage1[uz(c)][uz(g)] *
                              env.behavior.stage2[uz(c)][uz(g)][i];
            if (mu <= 0.0) continue;
            const double w = coupled_weight_index(env, pi, c, g, static_cast<int>(i));
            inner.add(mu * w * w);
          }
        }
        moment.add(env.context_probs[uz(c)] * inner.value());
      }
      worst = std::max(worst, std::abs(b - moment.value()));
    }
  }
  const double threshold = 1e-10;
  return make_result("second_moment_identity", worst <= threshold, worst, threshold,
                     std::to_string(cfg.identity_envs) + " environments x " +
                         std::to_string(cfg.identity_policies) + " policies");
}

CheckResult check_dr_unbiasedness(const TheoryConfig& cfg) {
  CounterRng master = CounterRng(cfg.seed).substream(2);
  double worst_z = 0.0;
  for (int pair = 0; pair < cfg.unbiasedness_pairs; ++pair) {
    CounterRng pair_rng = master.substream(static_cast<std::uint64_t>(pair));
    const Environment env = small_random_env(pair_rng);
    const TwoStagePolicy pi = random_feasible_policy(env, pair_rng, "target");
    const double truth = policy_value(env, pi);
    // Frozen arbitrary reward model: fit once on a pilot log, reuse across
    // every resample. Propensities are the exact logged ones.
    const LoggedDataset pilot = sample_log(env, 400, pair_rng.next_u64());
    const RewardModel frozen = fit_reward_pooled(pilot, 1.0, env.reward_bound);
    const Propensities prop = logged_propensities(env);
    std::vector<double> estimates(uz(cfg.unbiasedness_resamples), 0.0);
    parallel_for(
        uz(cfg.unbiasedness_resamples),
        [&](std::size_t r) {
          CounterRng rep_rng = pair_rng.substream(100 + r);
          const LoggedDataset data =
              sample_log(env, cfg.unbiasedness_n, rep_rng.next_u64());
          estimates[r] = dr_value(data, pi, frozen, prop);
        },
        cfg.threads);
    const double m = mean(estimates);
    const double se = sample_std(estimates) /
                      std::sqrt(static_cast<double>(cfg.unbiasedness_resamples));
    const double z = se > 0.0 ? std::abs(m - truth) / se : 0.0;
    worst_z = std::max(worst_z, z);
  }
  return make_result("dr_unbiasedness", worst_z <= 3.0, worst_z, 3.0,
                     std::to_string(cfg.unbiasedness_pairs) + " pairs x " +
                         std::to_string(cfg.unbiasedness_resamples) + " resamples, n=" +
                         std::to_string(cfg.unbiasedness_n));
}

CheckResult check_population_guarantee(const TheoryConfig& cfg) {
  CounterRng master = CounterRng(cfg.seed).substream(3);
  double worst_violation = -1.0;
  for (int t = 0; t < cfg.guarantee_triples; ++t) {
    CounterRng rng = master.substream(static_cast<std::uint64_t>(t));
    const Environment env = small_random_env(rng);
    const PolicyLibrary library = random_library(env, rng, 8);
    const double lambda = rng.next_double();
    std::vector<double> values(uz(library.size()), 0.0);
    std::vector<double> burdens(uz(library.size()), 0.0);
    for (int i = 0; i < library.size(); ++i) {
      values[uz(i)] = policy_value(env, library.at(i));
      burdens[uz(i)] = burden(env, library.at(i)).global;
    }
    std::size_t best_value = 0;
    std::size_t best_pen = 0;
    for (std::size_t i = 1; i < values.size(); ++i) {
      if (values[i] > values[best_value]) best_value = i;
      const double ji = values[i] - lambda * burdens[i];
      const double jb = values[best_pen] - lambda * burdens[best_pen];
      if (ji > jb) best_pen = i;
    }
    const double gap = values[best_value] - values[best_pen];
    const double bound = lambda * burdens[best_value];
    worst_violation = std::max(worst_violation, gap - bound);
  }
  const double threshold = 1e-12;
  return make_result("population_guarantee", worst_violation <= threshold, worst_violation,
                     threshold,
                     std::to_string(cfg.guarantee_triples) + " exact (env, library, lambda) triples");
}

CheckResult check_uniform_selection_reduction(const TheoryConfig& cfg) {
  CounterRng master = CounterRng(cfg.seed).substream(4);
  double worst_violation = -1.0;
  for (int t = 0; t < cfg.guarantee_triples; ++t) {
    CounterRng rng = master.substream(static_cast<std::uint64_t>(t));
    const Environment env = small_random_env(rng);
    const PolicyLibrary library = random_library(env, rng, 8);
    const double lambda = rng.next_double();
    const double eps_v = 0.2 * rng.next_double();
    const double eps_b = 0.2 * rng.next_double();
    std::vector<double> values(uz(library.size()), 0.0);
    std::vector<double> burdens(uz(library.size()), 0.0);
    std::vector<double> scores(uz(library.size()), 0.0);
    for (int i = 0; i < library.size(); ++i) {
      values[uz(i)] = policy_value(env, library.at(i));
      burdens[uz(i)] = burden(env, library.at(i)).global;
      const double v_hat = values[uz(i)] + eps_v * (2.0 * rng.next_double() - 1.0);
      const double b_hat = burdens[uz(i)] + eps_b * (2.0 * rng.next_double() - 1.0);
      scores[uz(i)] = v_hat - lambda * b_hat;
    }
    std::size_t best_value = 0;
    std::size_t best_score = 0;
    for (std::size_t i = 1; i < values.size(); ++i) {
      if (values[i] > values[best_value]) best_value = i;
      if (scores[i] > scores[best_score]) best_score = i;
    }
    const double gap = values[best_value] - values[best_score];
    const double bound =
        lambda * burdens[best_value] + 2.0 * eps_v + 2.0 * lambda * eps_b;
    worst_violation = std::max(worst_violation, gap - bound);
  }
  const double threshold = 1e-12;
  return make_result("uniform_selection_reduction", worst_violation <= threshold,
                     worst_violation, threshold,
                     std::to_string(cfg.guarantee_triples) +
                         " perturbed selections against the reduction bound");
}

CheckResult check_finite_class_coverage(const TheoryConfig& cfg) {
  CounterRng master = CounterRng(cfg.seed).substream(5);
  BlockConfig env_cfg;
  env_cfg.block = Block::coupling;
  env_cfg.num_contexts = 4;
  env_cfg.k1 = 3;
  env_cfg.k2 = 6;
  env_cfg.feasible_size = 3;
  env_cfg.coupling_strength = 0.7;
  env_cfg.overlap_severity = 0.6;
  env_cfg.seed = master.next_u64();
  const Environment env = build_block_env(env_cfg);

  CounterRng lib_rng = master.substream(17);
  const PolicyLibrary library = random_library(env, lib_rng, cfg.coverage_library - 2);
  const int num_policies = library.size();

  std::vector<double> values(uz(num_policies), 0.0);
  std::vector<double> burdens(uz(num_policies), 0.0);
  for (int i = 0; i < num_policies; ++i) {
    values[uz(i)] = policy_value(env, library.at(i));
    burdens[uz(i)] = burden(env, library.at(i)).global;
  }

  const double nu = env.overlap_floor();
  const double inv_nu2 = 1.0 / (nu * nu);
  const double M = env.reward_bound;
  const double log_term = std::log(4.0 * static_cast<double>(num_policies) / cfg.alpha);
  const double rate = std::sqrt(log_term / (2.0 * static_cast<double>(cfg.coverage_n)));
  const double value_band = M * (1.0 + inv_nu2) * rate;
  const double burden_band = inv_nu2 * rate;

  const Propensities prop = logged_propensities(env);
  std::vector<char> covered(uz(cfg.coverage_reps), 0);
  parallel_for(
      uz(cfg.coverage_reps),
      [&](std::size_t r) {
        CounterRng rep_rng = master.substream(1000 + r);
        const std::uint64_t data_seed = rep_rng.next_u64();
        const LoggedDataset data = sample_log(env, cfg.coverage_n, data_seed);
        const RewardModel model =
            fit_reward_crossfit(data, 5, 1.0, rep_rng.next_u64(), env.reward_bound);
        double sup_v = 0.0;
        double sup_b = 0.0;
        for (int i = 0; i < num_policies; ++i) {
          const double v_hat = dr_value(data, library.at(i), model, prop);
          const double b_hat = empirical_burden(data, library.at(i), prop);
          sup_v = std::max(sup_v, std::abs(v_hat - values[uz(i)]));
          sup_b = std::max(sup_b, std::abs(b_hat - burdens[uz(i)]));
        }
        covered[r] = (sup_v <= value_band && sup_b <= burden_band) ? 1 : 0;
      },
      cfg.threads);
  int hits = 0;
  for (char c : covered) hits += c;
  const double coverage =
      static_cast<double>(hits) / static_cast<double>(cfg.coverage_reps);
  const double target = 1.0 - cfg.alpha - 0.02;
  return make_result("finite_class_coverage", coverage >= target, coverage, target,
                     "joint deviation event over " + std::to_string(cfg.coverage_reps) +
                         " replications, n=" + std::to_string(cfg.coverage_n) +
                         ", library " + std::to_string(num_policies) + ", value band " +
                         format_double(value_band) + ", burden band " +
                         format_double(burden_band));
}

CheckResult check_nuisance_gap(const TheoryConfig& cfg) {
  CounterRng master = CounterRng(cfg.seed).substream(6);
  double worst = 0.0;
  for (int e = 0; e < cfg.gap_envs; ++e) {
    CounterRng rng = master.substream(static_cast<std::uint64_t>(e));
    const Environment env = small_random_env(rng);
    const PolicyLibrary library = random_library(env, rng, 4);
    // Exact propensities with an arbitrary cross-fitted reward model.
    const LoggedDataset data = sample_log(env, 500, rng.next_u64());
    const RewardModel fitted =
        fit_reward_crossfit(data, 4, 1.0, rng.next_u64(), env.reward_bound);
    const NuisanceGap gap_e =
        audit_nuisance_gap(env, fitted, logged_propensities(env), library);
    // Exact reward model with perturbed propensities.
    const RewardModel exact = exact_reward_model(env);
    const Propensities perturbed = perturbed_propensities(env, 0.35, rng.next_u64());
    const NuisanceGap gap_q = audit_nuisance_gap(env, exact, perturbed, library);
    worst = std::max({worst, gap_e.delta_v, gap_q.delta_v});
  }
  const double threshold = 1e-10;
  return make_result("nuisance_gap", worst <= threshold, worst, threshold,
                     "value bias with one exact nuisance, " + std::to_string(cfg.gap_envs) +
                         " environments, both directions");
}

std::vector<CheckResult> run_theory_checks(const TheoryConfig& cfg) {
  std::vector<CheckResult> out;
  out.push_back(check_second_moment_identity(cfg));
  out.push_back(check_dr_unbiasedness(cfg));
  out.push_back(check_population_guarantee(cfg));
  out.push_back(check_uniform_selection_reduction(cfg));
  out.push_back(check_finite_class_coverage(cfg));
  out.push_back(check_nuisance_gap(cfg));
  return out;
}

}  // namespace casp
