#pragma once

#include <string>
#include <vector>

#include "casp/environment.hpp"
#include "casp/simulate.hpp"

// Hand-enumerable two-context environment plus a fixed six-record log.
// Every estimator test pin in this suite was computed against this exact
// object by independent arithmetic, so any drift in estimator code shows up
// as a pin mismatch rather than a silent behavior change.
inline casp::Environment fixture_env() {
  casp::Environment env;
  env.id = "fixture-2x2";
  env.context_probs = {0.4, 0.6};
  env.num_generators = 2;
  env.num_items = 3;
  env.feasible = {
      {{0, 1}, {2}},
      {{1}, {0, 2}},
  };
  env.reward = {
      {{0.9, 0.2}, {0.5}},
      {{0.4}, {0.8, 0.1}},
  };
  env.reward_bound = 1.0;
  env.behavior.id = "behavior";
  env.behavior.stage1 = {{0.7, 0.3}, {0.25, 0.75}};
  env.behavior.stage2 = {
      {{0.5, 0.5}, {1.0}},
      {{1.0}, {0.4, 0.6}},
  };
  return env;
}

inline casp::TwoStagePolicy fixture_target() {
  casp::TwoStagePolicy pi;
  pi.id = "target";
  pi.stage1 = {{0.2, 0.8}, {0.5, 0.5}};
  pi.stage2 = {
      {{0.3, 0.7}, {1.0}},
      {{1.0}, {0.9, 0.1}},
  };
  return pi;
}

// (context, generator, index, y) tuples; items and propensities follow from
// the environment tables so the log is consistent with the behavior policy.
inline casp::LoggedDataset fixture_log() {
  const casp::Environment env = fixture_env();
  casp::LoggedDataset data;
  data.environment_id = env.id;
  data.seed = 0;
  const int tuples[6][4] = {
      {0, 0, 0, 1}, {0, 0, 1, 0}, {0, 1, 0, 1},
      {1, 1, 1, 0}, {1, 0, 0, 1}, {1, 1, 0, 1},
  };
  for (const auto& t : tuples) {
    casp::LoggedRecord rec;
    rec.context = t[0];
    rec.generator = t[1];
    rec.index = t[2];
    rec.item = env.feasible_set(rec.context, rec.generator)[static_cast<std::size_t>(rec.index)];
    rec.y = static_cast<double>(t[3]);
    rec.mu1 = env.behavior.stage1[static_cast<std::size_t>(rec.context)]
                                 [static_cast<std::size_t>(rec.generator)];
    rec.mu2 = env.behavior.stage2[static_cast<std::size_t>(rec.context)]
                                 [static_cast<std::size_t>(rec.generator)]
                                 [static_cast<std::size_t>(rec.index)];
    data.records.push_back(rec);
  }
  return data;
}
