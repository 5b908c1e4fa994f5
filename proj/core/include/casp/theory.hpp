#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace casp {

struct CheckResult {
  std::string name;
  bool pass = false;
  double statistic = 0.0;  // the quantity compared against threshold
  double threshold = 0.0;
  std::string detail;
};

struct TheoryConfig {
  std::uint64_t seed = 7;

  // second-moment identity
  int identity_envs = 50;
  int identity_policies = 20;

  // doubly robust conditional unbiasedness
  int unbiasedness_pairs = 10;
  int unbiasedness_resamples = 500;
  int unbiasedness_n = 300;

  // population guarantee and uniform-selection reduction
  int guarantee_triples = 200;

  // finite-class coverage
  int coverage_reps = 500;
  int coverage_n = 2000;
  int coverage_library = 12;
  double alpha = 0.1;

  // nuisance-gap audit
  int gap_envs = 5;

  /// Mutation hook: added to every burden inside the second-moment check so
  /// a harness test can verify that a miscomputed burden is caught. 0 in
  /// normal operation.
  double burden_perturbation = 0.0;

  unsigned threads = 0;
};

CheckResult check_second_moment_identity(const TheoryConfig& cfg);
CheckResult check_dr_unbiasedness(const TheoryConfig& cfg);
CheckResult check_population_guarantee(const TheoryConfig& cfg);
CheckResult check_uniform_selection_reduction(const TheoryConfig& cfg);
CheckResult check_finite_class_coverage(const TheoryConfig& cfg);
CheckResult check_nuisance_gap(const TheoryConfig& cfg);

/// All six checks in a fixed order.
std::vector<CheckResult> run_theory_checks(const TheoryConfig& cfg);

}  // namespace casp
