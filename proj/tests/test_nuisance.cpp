#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "casp/environment.hpp"
#include "casp/errors.hpp"
#include "casp/nuisance.hpp"
#include "casp/policy_math.hpp"
#include "casp/rng.hpp"
#include "casp/util.hpp"
#include "fixtures.hpp"

using namespace casp;

namespace {
doctest::Approx near(double v) { return doctest::Approx(v).epsilon(1e-13); }
}  // namespace

TEST_CASE("floored joints") {
  Environment env = fixture_env();
  env.behavior.stage1[0] = {1.0, 0.0};
  const Propensities bare = logged_propensities(env, 0.0);

  CHECK(bare.raw_joint(0, 0, 0) == near(0.5));
  CHECK(bare.floored_joint(0, 0, 0) == near(0.5));
  CHECK(bare.raw_joint(0, 1, 0) == 0.0);
  CHECK(bare.at_floor(0, 1, 0));
  CHECK_FALSE(bare.at_floor(0, 0, 0));

  try {
    (void)bare.floored_joint(0, 1, 0);
    FAIL("expected OffSupportError");
  } catch (const OffSupportError& e) {
    CHECK(e.context_id == 0);
    CHECK(e.generator_id == 1);
    CHECK(e.item_id == 2);  // sole feasible item of that generator
  }

  const Propensities floored = logged_propensities(env, 1e-6);
  CHECK(floored.floored_joint(0, 1, 0) == near(1e-6));
  CHECK(floored.floored_joint(0, 0, 0) == near(0.5));  // floor never inflates live pairs
  CHECK(floored.at_floor(0, 1, 0));                    // raw zero stays flagged post-floor
}

TEST_CASE("crossfit fold assignment and cell values are pinned") {
  const LoggedDataset data = fixture_log();
  const RewardModel model = fit_reward_crossfit(data, /*folds=*/2, /*smoothing=*/1.0,
                                                /*seed=*/11);
  // Fold order derives from the dedicated fold stream of seed 11.
  CHECK(model.fold_of == std::vector<int>{1, 1, 0, 0, 1, 0});
  REQUIRE(model.fold_prior.size() == 2);
  CHECK(model.fold_prior[0] == near(2.0 / 3.0));
  CHECK(model.fold_prior[1] == near(2.0 / 3.0));

  // Fold 0 is trained on records {0, 1, 4}.
  CHECK(model.value(0, 0, 0, /*item=*/0) == near(5.0 / 6.0));
  CHECK(model.value(0, 0, 0, /*item=*/1) == near(1.0 / 3.0));
  CHECK(model.value(0, 1, 0, /*item=*/1) == near(5.0 / 6.0));
  // Unseen cell falls back to the fold prior.
  CHECK(model.value(0, 1, 1, /*item=*/0) == near(2.0 / 3.0));

  // Fold 1 is trained on records {2, 3, 5}.
  CHECK(model.value(1, 0, 1, /*item=*/2) == near(5.0 / 6.0));
  CHECK(model.value(1, 1, 1, /*item=*/0) == near(5.0 / 6.0));
  CHECK(model.value(1, 1, 1, /*item=*/2) == near(1.0 / 3.0));

  CHECK(reward_fold_mean(model, 0, 0, 0) ==
        near(0.5 * (model.value(0, 0, 0, 0) + model.value(1, 0, 0, 0))));
}

TEST_CASE("crossfit is deterministic in the seed") {
  const LoggedDataset data = fixture_log();
  const RewardModel a = fit_reward_crossfit(data, 2, 1.0, 11);
  const RewardModel b = fit_reward_crossfit(data, 2, 1.0, 11);
  CHECK(a.fold_of == b.fold_of);
  const RewardModel c = fit_reward_crossfit(data, 2, 1.0, 12);
  bool same = a.fold_of == c.fold_of;
  // Different seeds shuffle differently (allowing the rare coincidence on
  // these six records would make this test flaky; the pinned seed above is
  // the real guarantee).
  const RewardModel d = fit_reward_crossfit(data, 3, 1.0, 11);
  CHECK(d.folds == 3);
  (void)same;
}

TEST_CASE("fit configuration errors") {
  const LoggedDataset data = fixture_log();
  CHECK_THROWS_AS((void)fit_reward_crossfit(data, 1, 1.0, 7), ConfigError);
  CHECK_THROWS_AS((void)fit_reward_crossfit(data, 7, 1.0, 7), ConfigError);
  CHECK_THROWS_AS((void)fit_reward_crossfit(data, 2, -0.5, 7), ConfigError);
  LoggedDataset empty;
  CHECK_THROWS_AS((void)fit_reward_crossfit(empty, 2, 1.0, 7), DataError);
  CHECK_THROWS_AS((void)fit_reward_pooled(empty, 1.0), DataError);
}

TEST_CASE("pooled fit uses one table for every fold query") {
  const LoggedDataset data = fixture_log();
  const RewardModel model = fit_reward_pooled(data, 1.0);
  CHECK(model.folds == 1);
  // Records 0 and 1: y = {1, 0} at (0,0,items {0,1}); prior = 4/6.
  CHECK(model.value(0, 0, 0, 0) == near((1.0 + 4.0 / 6.0) / 2.0));
  CHECK(model.value(0, 0, 0, 1) == near((0.0 + 4.0 / 6.0) / 2.0));
}

TEST_CASE("smoothing zero reproduces raw cell means") {
  const LoggedDataset data = fixture_log();
  const RewardModel model = fit_reward_pooled(data, 0.0);
  CHECK(model.value(0, 0, 0, 0) == near(1.0));
  CHECK(model.value(0, 0, 0, 1) == near(0.0));
}

TEST_CASE("item-only cells pool across generators") {
  LoggedDataset data = fixture_log();
  const RewardModel model = fit_reward_pooled(data, 0.0, 1.0, RewardCells::item_only);
  // Item 0 appears as (0,0,idx0,y=1), (1,1,idx0,y=1): pooled mean 1.
  CHECK(model.value(0, 0, 0, /*item=*/0) == near(1.0));
  CHECK(model.value(0, 1, 1, /*item=*/0) == near(1.0));  // generator is ignored
}

TEST_CASE("exact model reproduces environment rewards") {
  const Environment env = fixture_env();
  const RewardModel model = exact_reward_model(env);
  for (int c = 0; c < env.num_contexts(); ++c) {
    for (int g = 0; g < env.num_generators; ++g) {
      const auto& set = env.feasible_set(c, g);
      for (std::size_t i = 0; i < set.size(); ++i) {
        CHECK(model.value(0, c, g, set[i]) == near(env.reward_at(c, g, static_cast<int>(i))));
      }
    }
  }
}

TEST_CASE("perturbation delta zero is bit identical") {
  const Environment env = fixture_env();
  const Propensities base = logged_propensities(env);
  const Propensities same = perturbed_propensities(env, 0.0, /*seed=*/5);
  CHECK(same.behavior.stage1 == base.behavior.stage1);
  CHECK(same.behavior.stage2 == base.behavior.stage2);
}

TEST_CASE("perturbation keeps rows normalized and zeros dead") {
  Environment env = fixture_env();
  env.behavior.stage1[0] = {1.0, 0.0};
  const Propensities pert = perturbed_propensities(env, 0.35, /*seed=*/5, /*floor=*/1e-6);
  for (const auto& row : pert.behavior.stage1) {
    CHECK(kahan_total(row) == near(1.0));
    for (double p : row) CHECK(p >= 0.0);
  }
  for (const auto& ctx : pert.behavior.stage2) {
    for (const auto& row : ctx) {
      CHECK(kahan_total(row) == near(1.0));
    }
  }
  CHECK(pert.behavior.stage1[0][1] == 0.0);  // structural zero survives
  CHECK(pert.floor == near(1e-6));
  // The noise actually moved something.
  const Propensities base = logged_propensities(env);
  CHECK(pert.behavior.stage1[1] != base.behavior.stage1[1]);
  // Same seed, same draw.
  const Propensities again = perturbed_propensities(env, 0.35, 5, 1e-6);
  CHECK(again.behavior.stage1 == pert.behavior.stage1);
  CHECK(again.behavior.stage2 == pert.behavior.stage2);

  CHECK_THROWS_AS((void)perturbed_propensities(env, 1.5, 5), ConfigError);
  CHECK_THROWS_AS((void)perturbed_propensities(env, -0.1, 5), ConfigError);
}

TEST_CASE("value bias vanishes when either nuisance is exact") {
  const Environment env = fixture_env();
  PolicyLibrary library;
  library.policies = {fixture_target(), env.behavior, uniform_policy(env.feasible)};

  const RewardModel exact_q = exact_reward_model(env);
  const Propensities exact_e = logged_propensities(env);

  const NuisanceGap both = audit_nuisance_gap(env, exact_q, exact_e, library);
  CHECK(std::abs(both.delta_v) <= 1e-12);
  CHECK(std::abs(both.delta_b) <= 1e-12);

  // Exact propensities, wrong rewards.
  LoggedDataset data = fixture_log();
  const RewardModel rough_q = fit_reward_pooled(data, 5.0);
  const NuisanceGap prop_exact = audit_nuisance_gap(env, rough_q, exact_e, library);
  CHECK(std::abs(prop_exact.delta_v) <= 1e-10);

  // Exact rewards, perturbed propensities.
  const Propensities rough_e = perturbed_propensities(env, 0.4, /*seed=*/5);
  const NuisanceGap reward_exact = audit_nuisance_gap(env, exact_q, rough_e, library);
  CHECK(std::abs(reward_exact.delta_v) <= 1e-10);

  // Both wrong: the bias is generically nonzero.
  const NuisanceGap both_wrong = audit_nuisance_gap(env, rough_q, rough_e, library);
  CHECK(both_wrong.delta_v > 1e-6);
}

TEST_CASE("reconstructed propensities require a positive floor story") {
  const Environment env = fixture_env();
  const Propensities prop =
      reconstructed_propensities(env.feasible, env.behavior, /*floor=*/1e-9);
  CHECK(prop.floor == near(1e-9));
  CHECK(prop.raw_joint(0, 0, 0) == near(0.35));
}
