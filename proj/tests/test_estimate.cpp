#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "casp/environment.hpp"
#include "casp/errors.hpp"
#include "casp/estimate.hpp"
#include "casp/nuisance.hpp"
#include "casp/policy_math.hpp"
#include "casp/util.hpp"
#include "fixtures.hpp"

using namespace casp;

namespace {
doctest::Approx near(double v) { return doctest::Approx(v).epsilon(1e-13); }
}  // namespace

// All pins below were computed by independent arithmetic over the fixture
// tables (see tests/fixtures.hpp for the exact log).

TEST_CASE("importance-weighted value pins") {
  const Environment env = fixture_env();
  const LoggedDataset data = fixture_log();
  const Propensities prop = logged_propensities(env);
  const TwoStagePolicy pi = fixture_target();

  CHECK(ips_value(data, pi, prop) == near(1.0563492063492064));
  CHECK(ips_value(data, pi, prop, /*self_normalized=*/true) == near(0.92537659327925836));
}

TEST_CASE("doubly robust pins with exact rewards") {
  const Environment env = fixture_env();
  const LoggedDataset data = fixture_log();
  const Propensities prop = logged_propensities(env);
  const RewardModel model = exact_reward_model(env);
  const TwoStagePolicy pi = fixture_target();

  const std::vector<double> want = {
      0.49914285714285711, 0.40199999999999997, 1.8153333333333335,
      0.55388888888888899, 1.7650000000000001,  0.86499999999999999,
  };
  const std::vector<double> got = dr_score_records(data, pi, model, prop);
  REQUIRE(got.size() == want.size());
  for (std::size_t i = 0; i < want.size(); ++i) CHECK(got[i] == near(want[i]));

  CHECK(dr_value(data, pi, model, prop) == near(0.98339417989417999));
  CHECK(plugin_value(data, pi, model, prop) == near(0.52349999999999997));
  CHECK(sample_std(got) == near(0.64405604195348309));
}

TEST_CASE("empirical burden and diagnostics pins") {
  const Environment env = fixture_env();
  const LoggedDataset data = fixture_log();
  const Propensities prop = logged_propensities(env);
  const TwoStagePolicy pi = fixture_target();

  CHECK(empirical_burden(data, pi, prop) == near(1.9400873015873017));

  const Diagnostics diag = compute_diagnostics(data, pi, prop);
  CHECK(diag.ess == near(3.4588339826192862));
  CHECK(diag.max_weight == near(2.666666666666667));
  CHECK(diag.off_support_mass == near(0.0));
  REQUIRE(diag.generator_share.size() == 2);
  CHECK(diag.generator_share[0] == near(0.35));
  CHECK(diag.generator_share[1] == near(0.65));
}

TEST_CASE("behavior policy diagnostics are exact") {
  const Environment env = fixture_env();
  const LoggedDataset data = fixture_log();
  const Propensities prop = logged_propensities(env);

  const Diagnostics diag = compute_diagnostics(data, env.behavior, prop);
  CHECK(diag.ess == near(6.0));
  CHECK(diag.max_weight == near(1.0));
  CHECK(empirical_burden(data, env.behavior, prop) == near(1.0));
}

TEST_CASE("penalized score") {
  CHECK(casp_score(0.9, 2.0, 0.05) == near(0.8));
  CHECK(casp_score(0.9, 2.0, 0.0) == near(0.9));
  CHECK_THROWS_AS((void)casp_score(0.9, 2.0, -0.01), ConfigError);
}

TEST_CASE("policy estimate bundles the grid") {
  const Environment env = fixture_env();
  const LoggedDataset data = fixture_log();
  const Propensities prop = logged_propensities(env);
  const RewardModel model = exact_reward_model(env);

  const std::vector<double> grid = {0.0, 0.05};
  const PolicyEstimate est = evaluate_policy(data, fixture_target(), model, prop, grid);
  CHECK(est.policy_id == "target");
  CHECK(est.v_dr == near(0.98339417989417999));
  CHECK(est.v_ips == near(1.0563492063492064));
  CHECK(est.v_plugin == near(0.52349999999999997));
  CHECK(est.burden == near(1.9400873015873017));
  REQUIRE(est.j_lambda.size() == 2);
  CHECK(est.j_lambda[0] == near(est.v_dr));
  CHECK(est.j_lambda[1] == near(0.88638981481481494));
  REQUIRE(est.dr_scores.size() == 6);
}

TEST_CASE("estimate csv header is pinned") {
  const std::vector<std::string> header = estimate_csv_header({0.0, 0.05});
  const std::vector<std::string> want = {
      "policy_id", "v_dr", "v_ips", "burden", "ess", "max_w", "off_support_mass",
      "j_lambda_0", "j_lambda_0.05",
  };
  CHECK(header == want);
}

TEST_CASE("off-support handling in estimators") {
  Environment env = fixture_env();
  env.behavior.stage1[0] = {1.0, 0.0};  // context 0 generator 1 unsupported
  LoggedDataset data = fixture_log();
  // Keep only the records the modified logger could have produced.
  LoggedDataset kept;
  kept.environment_id = data.environment_id;
  for (const auto& rec : data.records) {
    if (rec.context == 0 && rec.generator == 1) continue;
    auto r = rec;
    if (r.context == 0) r.mu1 = 1.0;
    kept.records.push_back(r);
  }

  const TwoStagePolicy pi = fixture_target();  // puts mass on the dead pair
  const Propensities bare = logged_propensities(env, /*floor=*/0.0);
  CHECK_THROWS_AS((void)empirical_burden(kept, pi, bare), OffSupportError);

  const Propensities floored = logged_propensities(env, /*floor=*/1e-6);
  const Diagnostics diag = compute_diagnostics(kept, pi, floored);
  // Two of the five kept records sit at context 0, where pi puts 0.8 on the
  // dead generator: mean off-support mass is 1.6 / 5.
  CHECK(diag.off_support_mass == near(0.32));
  CHECK(empirical_burden(kept, pi, floored) > 1e5);
}

TEST_CASE("empty dataset is a data error") {
  const Environment env = fixture_env();
  LoggedDataset data;
  const Propensities prop = logged_propensities(env);
  CHECK_THROWS_AS((void)ips_value(data, fixture_target(), prop), DataError);
}
