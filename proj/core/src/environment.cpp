#include "casp/environment.hpp"

#include <cmath>
#include <cstddef>
#include <limits>
#include <set>

#include "casp/errors.hpp"
#include "casp/util.hpp"

namespace casp {

namespace {

constexpr double kSumTol = 1e-9;

void check_distribution(const std::vector<double>& p, const std::string& what) {
  KahanSum total;
  for (double v : p) {
    if (!(v >= 0.0)) {
      throw FeasibilityError(what + " has a negative or NaN entry");
    }
    total.add(v);
  }
  if (std::abs(total.value() - 1.0) > kSumTol) {
    throw FeasibilityError(what + " does not sum to 1 (got " + std::to_string(total.value()) + ")");
  }
}

}  // namespace

double Environment::overlap_floor() const {
  double floor = std::numeric_limits<double>::infinity();
  for (int c = 0; c < num_contexts(); ++c) {
    if (context_probs[static_cast<std::size_t>(c)] <= 0.0) continue;
    for (int g = 0; g < num_generators; ++g) {
      const double p1 = behavior.stage1[static_cast<std::size_t>(c)][static_cast<std::size_t>(g)];
      if (p1 > 0.0 && p1 < floor) floor = p1;
      const auto& row = behavior.stage2[static_cast<std::size_t>(c)][static_cast<std::size_t>(g)];
      for (double p2 : row) {
        if (p2 > 0.0 && p2 < floor) floor = p2;
      }
    }
  }
  return floor;
}

void validate_environment(const Environment& env) {
  const int n = env.num_contexts();
  if (n == 0) throw ConfigError("environment has no contexts");
  if (env.num_generators <= 0) throw ConfigError("environment needs at least one generator");
  if (env.num_items <= 0) throw ConfigError("environment needs at least one item");
  if (!(env.reward_bound > 0.0)) throw ConfigError("reward bound must be positive");
  check_distribution(env.context_probs, "context distribution");
  if (env.feasible.size() != static_cast<std::size_t>(n) ||
      env.reward.size() != static_cast<std::size_t>(n)) {
    throw FeasibilityError("feasible/reward maps do not cover every context");
  }
  for (int c = 0; c < n; ++c) {
    const auto& fc = env.feasible[static_cast<std::size_t>(c)];
    const auto& rc = env.reward[static_cast<std::size_t>(c)];
    if (fc.size() != static_cast<std::size_t>(env.num_generators) ||
        rc.size() != static_cast<std::size_t>(env.num_generators)) {
      throw FeasibilityError("feasible/reward maps do not cover every generator at context " +
                             std::to_string(c));
    }
    for (int g = 0; g < env.num_generators; ++g) {
      const auto& set = fc[static_cast<std::size_t>(g)];
      const auto& rew = rc[static_cast<std::size_t>(g)];
      if (set.empty()) {
        throw FeasibilityError("empty feasible set at context " + std::to_string(c) +
                               ", generator " + std::to_string(g));
      }
      if (rew.size() != set.size()) {
        throw FeasibilityError("reward row misaligned with feasible set at context " +
                               std::to_string(c) + ", generator " + std::to_string(g));
      }
      std::set<int> seen;
      for (int item : set) {
        if (item < 0 || item >= env.num_items) {
          throw FeasibilityError("feasible item id out of range at context " + std::to_string(c));
        }
        if (!seen.insert(item).second) {
          throw FeasibilityError("duplicate feasible item at context " + std::to_string(c) +
                                 ", generator " + std::to_string(g));
        }
      }
      for (double r : rew) {
        if (!(r >= 0.0) || r > env.reward_bound + 1e-12) {
          throw FeasibilityError("reward outside [0, bound] at context " + std::to_string(c));
        }
      }
    }
  }
  validate_policy(env, env.behavior);
}

void validate_policy(const Environment& env, const TwoStagePolicy& pi) {
  const int n = env.num_contexts();
  if (pi.stage1.size() != static_cast<std::size_t>(n) ||
      pi.stage2.size() != static_cast<std::size_t>(n)) {
    throw FeasibilityError("policy '" + pi.id + "' does not cover every context");
  }
  for (int c = 0; c < n; ++c) {
    const auto& s1 = pi.stage1[static_cast<std::size_t>(c)];
    const auto& s2 = pi.stage2[static_cast<std::size_t>(c)];
    if (s1.size() != static_cast<std::size_t>(env.num_generators) ||
        s2.size() != static_cast<std::size_t>(env.num_generators)) {
      throw FeasibilityError("policy '" + pi.id + "' does not cover every generator at context " +
                             std::to_string(c));
    }
    check_distribution(s1, "policy '" + pi.id + "' stage 1 at context " + std::to_string(c));
    for (int g = 0; g < env.num_generators; ++g) {
      const auto& row = s2[static_cast<std::size_t>(g)];
      if (row.size() != env.feasible_set(c, g).size()) {
        throw FeasibilityError("policy '" + pi.id + "' stage 2 misaligned with feasible set at context " +
                               std::to_string(c) + ", generator " + std::to_string(g));
      }
      if (row.empty()) {
        // A generator with no feasible items can carry no stage-1 mass.
        if (s1[static_cast<std::size_t>(g)] != 0.0) {
          throw FeasibilityError("policy '" + pi.id + "' puts mass on an unsupported generator at context " +
                                 std::to_string(c));
        }
        continue;
      }
      // Stage-2 rows on generators the policy never picks may be anything
      // normalized; still insist on a valid distribution so downstream sums
      // are well defined.
      check_distribution(row, "policy '" + pi.id + "' stage 2 at context " + std::to_string(c) +
                                  ", generator " + std::to_string(g));
    }
  }
}

void validate_library(const Environment& env, const PolicyLibrary& library) {
  std::set<std::string> ids;
  for (const auto& pi : library.policies) {
    if (pi.id.empty()) throw ConfigError("library contains a policy with an empty id");
    if (!ids.insert(pi.id).second) {
      throw ConfigError("duplicate policy id '" + pi.id + "' in library");
    }
    validate_policy(env, pi);
  }
}

TwoStagePolicy uniform_policy(const FeasibleMap& feasible, const std::string& id) {
  TwoStagePolicy pi;
  pi.id = id;
  pi.stage1.resize(feasible.size());
  pi.stage2.resize(feasible.size());
  for (std::size_t c = 0; c < feasible.size(); ++c) {
    const auto& fc = feasible[c];
    const std::size_t k1 = fc.size();
    pi.stage1[c].assign(k1, 0.0);
    pi.stage2[c].resize(k1);
    std::size_t nonempty = 0;
    for (std::size_t g = 0; g < k1; ++g) {
      if (!fc[g].empty()) ++nonempty;
    }
    for (std::size_t g = 0; g < k1; ++g) {
      const std::size_t m = fc[g].size();
      if (m == 0) {
        pi.stage2[c][g].clear();
        continue;
      }
      pi.stage1[c][g] = 1.0 / static_cast<double>(nonempty);
      pi.stage2[c][g].assign(m, 1.0 / static_cast<double>(m));
    }
  }
  return pi;
}

TwoStagePolicy deterministic_policy(const FeasibleMap& feasible,
                                    const std::vector<int>& generator_pick,
                                    const std::vector<std::vector<int>>& index_pick,
                                    const std::string& id) {
  TwoStagePolicy pi;
  pi.id = id;
  pi.stage1.resize(feasible.size());
  pi.stage2.resize(feasible.size());
  for (std::size_t c = 0; c < feasible.size(); ++c) {
    const auto& fc = feasible[c];
    pi.stage1[c].assign(fc.size(), 0.0);
    pi.stage1[c][static_cast<std::size_t>(generator_pick[c])] = 1.0;
    pi.stage2[c].resize(fc.size());
    for (std::size_t g = 0; g < fc.size(); ++g) {
      pi.stage2[c][g].assign(fc[g].size(), 0.0);
      if (!fc[g].empty()) {
        pi.stage2[c][g][static_cast<std::size_t>(index_pick[c][g])] = 1.0;
      }
    }
  }
  return pi;
}

}  // namespace casp
