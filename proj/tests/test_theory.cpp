#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <string>
#include <vector>

#include "casp/theory.hpp"

using namespace casp;

namespace {
// Reduced sizes keep the whole binary under a few seconds; the full-scale
// runs live in the acceptance harness.
TheoryConfig small_cfg() {
  TheoryConfig cfg;
  cfg.seed = 7;
  cfg.identity_envs = 8;
  cfg.identity_policies = 6;
  cfg.unbiasedness_pairs = 3;
  cfg.unbiasedness_resamples = 200;
  cfg.unbiasedness_n = 200;
  cfg.guarantee_triples = 40;
  cfg.coverage_reps = 60;
  cfg.coverage_n = 400;
  cfg.coverage_library = 8;
  cfg.gap_envs = 2;
  return cfg;
}
}  // namespace

TEST_CASE("second moment identity holds to float precision") {
  const CheckResult r = check_second_moment_identity(small_cfg());
  CHECK(r.pass);
  CHECK(r.statistic <= 1e-10);
  CHECK(r.name == "second_moment_identity");
}

TEST_CASE("a burden miscomputation is caught") {
  TheoryConfig cfg = small_cfg();
  cfg.burden_perturbation = 0.1;
  const CheckResult r = check_second_moment_identity(cfg);
  CHECK_FALSE(r.pass);
  CHECK(r.statistic > 1e-10);
}

TEST_CASE("dr conditional unbiasedness within monte carlo error") {
  const CheckResult r = check_dr_unbiasedness(small_cfg());
  CHECK(r.pass);
  CHECK(r.name == "dr_unbiasedness");
  CHECK(r.statistic <= r.threshold);
}

TEST_CASE("population guarantee never violated") {
  const CheckResult r = check_population_guarantee(small_cfg());
  CHECK(r.pass);
  CHECK(r.name == "population_guarantee");
  CHECK(r.statistic <= r.threshold);
}

TEST_CASE("uniform selection reduction never violated") {
  const CheckResult r = check_uniform_selection_reduction(small_cfg());
  CHECK(r.pass);
  CHECK(r.name == "uniform_selection_reduction");
}

TEST_CASE("finite class coverage clears the banded floor") {
  const CheckResult r = check_finite_class_coverage(small_cfg());
  CHECK(r.pass);
  CHECK(r.name == "finite_class_coverage");
  CHECK(r.threshold == doctest::Approx(1.0 - 0.1 - 0.02));
  CHECK(r.statistic >= r.threshold);
}

TEST_CASE("nuisance gap vanishes with an exact leg") {
  const CheckResult r = check_nuisance_gap(small_cfg());
  CHECK(r.pass);
  CHECK(r.name == "nuisance_gap");
  CHECK(r.statistic <= 1e-10);
}

TEST_CASE("runner preserves order and count") {
  const std::vector<CheckResult> all = run_theory_checks(small_cfg());
  REQUIRE(all.size() == 6);
  CHECK(all[0].name == "second_moment_identity");
  CHECK(all[1].name == "dr_unbiasedness");
  CHECK(all[2].name == "population_guarantee");
  CHECK(all[3].name == "uniform_selection_reduction");
  CHECK(all[4].name == "finite_class_coverage");
  CHECK(all[5].name == "nuisance_gap");
  for (const auto& r : all) CHECK(r.pass);
}
