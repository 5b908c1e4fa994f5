// Acceptance harness: every release gate in one binary, one verdict line per
// criterion, full-scale sizes. Exit code is the number of failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "casp/environment.hpp"
#include "casp/estimate.hpp"
#include "casp/movielens.hpp"
#include "casp/nuisance.hpp"
#include "casp/pipeline.hpp"
#include "casp/policy_math.hpp"
#include "casp/rng.hpp"
#include "casp/select.hpp"
#include "casp/simulate.hpp"
#include "casp/theory.hpp"
#include "casp/util.hpp"

using namespace casp;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

Verdict ok(const std::string& detail) { return {true, detail}; }
Verdict fail(const std::string& detail) { return {false, detail}; }

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return std::string(buf);
}

const MethodAggregate& method_row(const std::vector<MethodAggregate>& rows,
                                  const std::string& name) {
  for (const auto& m : rows) {
    if (m.selector == name) return m;
  }
  throw std::runtime_error("selector row missing: " + name);
}

// 1. On the engineered counterexample the stagewise rule is worthless while
//    every coupled selector recovers the full value, exactly.
Verdict counterexample_separation() {
  BlockRunConfig cfg;
  cfg.block.block = Block::counterexample;
  cfg.block.n = 600;
  cfg.block.replications = 8;
  cfg.block.seed = 1;
  const BlockResult result = run_block(cfg);

  const double tol = 1e-12;
  const MethodAggregate& stagewise = method_row(result.overall, "stagewise");
  if (std::abs(stagewise.mean_value - 0.0) > tol) {
    return fail("stagewise value " + num(stagewise.mean_value) + " != 0");
  }
  for (const char* name : {"oracle", "casp", "dr_only", "ma_style", "wang_style"}) {
    const MethodAggregate& m = method_row(result.overall, name);
    if (std::abs(m.mean_value - 0.85) > tol) {
      return fail(std::string(name) + " value " + num(m.mean_value) + " != 0.85");
    }
    if (std::abs(m.mean_regret) > tol) {
      return fail(std::string(name) + " regret " + num(m.mean_regret) + " != 0");
    }
  }
  return ok("stagewise 0, coupled selectors 0.85, gap 0.85");
}

// 2. E[w^2 | x] equals the closed-form burden on enumerable instances.
Verdict second_moment_identity() {
  TheoryConfig cfg;
  const CheckResult r = check_second_moment_identity(cfg);
  if (!r.pass) return fail("max deviation " + num(r.statistic));
  return ok("max deviation " + num(r.statistic) + " over " + r.detail);
}

// 3. The variance of the importance-weighted value stays under the
//    burden-scaled bound M^2 B / n (with Monte Carlo slack 1.5).
Verdict ips_variance_bound() {
  const int kEnvs = 10;
  const int kResamples = 500;
  const int kN = 2000;
  std::vector<std::string> failures(kEnvs);
  std::vector<double> ratios(kEnvs, 0.0);

  parallel_for(
      kEnvs,
      [&](std::size_t e) {
        BlockConfig bc;
        bc.block = Block::coupling;
        bc.seed = 1000 + e;
        const Environment env = build_block_env(bc);
        CounterRng rng = CounterRng(4242).substream(e);
        const TwoStagePolicy pi = random_feasible_policy(env, rng, "target");
        const double bound =
            1.5 * env.reward_bound * env.reward_bound * burden(env, pi).global / kN;

        const Propensities prop = logged_propensities(env);
        std::vector<double> values;
        values.reserve(kResamples);
        for (int r = 0; r < kResamples; ++r) {
          const LoggedDataset data = sample_log(env, kN, rng.next_u64());
          values.push_back(ips_value(data, pi, prop));
        }
        const double sd = sample_std(values);
        const double var = sd * sd;
        ratios[e] = var / bound;
        if (var > bound) {
          failures[e] = "env " + std::to_string(e) + ": var " + num(var) + " > bound " + num(bound);
        }
      },
      0);

  for (const auto& f : failures) {
    if (!f.empty()) return fail(f);
  }
  const double worst = *std::max_element(ratios.begin(), ratios.end());
  return ok("worst var/bound " + num(worst) + " over " + std::to_string(kEnvs) + " environments x " +
            std::to_string(kResamples) + " resamples, n=" + std::to_string(kN));
}

// 4. The doubly robust estimate is unbiased given frozen nuisances.
Verdict dr_unbiasedness() {
  TheoryConfig cfg;
  const CheckResult r = check_dr_unbiasedness(cfg);
  if (!r.pass) return fail("worst |z| " + num(r.statistic));
  return ok("worst |z| " + num(r.statistic) + " <= 3 over " + r.detail);
}

// 5. The population suboptimality bound and its uniform-deviation extension
//    hold with zero violations across seeded triples.
Verdict population_guarantee() {
  TheoryConfig cfg;
  const CheckResult g = check_population_guarantee(cfg);
  if (!g.pass) return fail("guarantee violated by " + num(g.statistic));
  const CheckResult u = check_uniform_selection_reduction(cfg);
  if (!u.pass) return fail("uniform reduction violated by " + num(u.statistic));
  return ok("worst slack " + num(std::max(g.statistic, u.statistic)) + " over " + g.detail);
}

// 6. Finite-class two-sided bands cover the true value-burden pair.
Verdict finite_class_coverage() {
  TheoryConfig cfg;
  const CheckResult r = check_finite_class_coverage(cfg);
  if (!r.pass) return fail("coverage " + num(r.statistic) + " < " + num(r.threshold));
  return ok("coverage " + num(r.statistic) + " >= " + num(r.threshold) + ", " + r.detail);
}

// 7. The doubly robust value bias vanishes when either nuisance is exact.
Verdict nuisance_gap() {
  TheoryConfig cfg;
  const CheckResult r = check_nuisance_gap(cfg);
  if (!r.pass) return fail("worst value bias " + num(r.statistic));
  return ok("worst value bias " + num(r.statistic) + " with one exact nuisance");
}

// 8. Evaluating the logger against its own log is the fixed point: unit
//    burden, full effective sample size, unit maximum weight.
Verdict behavior_diagnostics() {
  BlockConfig bc;
  bc.block = Block::coupling;
  bc.seed = 3;
  const Environment env = build_block_env(bc);
  const int n = 2000;
  const LoggedDataset data = sample_log(env, n, 999);
  const Propensities prop = logged_propensities(env);

  const double b = empirical_burden(data, env.behavior, prop);
  const Diagnostics diag = compute_diagnostics(data, env.behavior, prop);
  if (std::abs(b - 1.0) > 1e-6) return fail("burden " + num(b));
  if (std::abs(diag.ess - n) > 1e-6) return fail("ess " + num(diag.ess));
  if (std::abs(diag.max_weight - 1.0) > 1e-12) return fail("max weight " + num(diag.max_weight));
  return ok("burden " + num(b) + ", ess " + num(diag.ess) + "/" + std::to_string(n) +
            ", max weight " + num(diag.max_weight));
}

// 9. Full coupling sweep: the penalized selector never carries more true
//    burden than unpenalized selection, and the stagewise rule falls strictly
//    behind every coupled learner once interactions dominate.
Verdict coupling_dominance() {
  BlockRunConfig cfg;  // defaults: 8 sweep points x 24 replications, n=2400
  const BlockResult result = run_block(cfg);

  const double casp_burden = method_row(result.overall, "casp").mean_true_burden;
  const double dr_burden = method_row(result.overall, "dr_only").mean_true_burden;
  if (casp_burden > dr_burden) {
    return fail("penalized burden " + num(casp_burden) + " > unpenalized " + num(dr_burden));
  }

  const std::vector<std::string> coupled = {"casp",     "dr_only",  "dr_lcb",
                                            "plugin",   "ma_style", "wang_style"};
  std::string gaps;
  for (std::size_t p = result.points.size() - 2; p < result.points.size(); ++p) {
    const auto& methods = result.points[p].methods;
    const double stagewise = method_row(methods, "stagewise").mean_value;
    double best = -1.0;
    for (const auto& name : coupled) {
      best = std::max(best, method_row(methods, name).mean_value);
    }
    if (stagewise >= best) {
      return fail("kappa " + num(result.points[p].sweep_value) + ": stagewise " + num(stagewise) +
                  " >= best coupled " + num(best));
    }
    gaps += " " + num(best - stagewise);
  }
  return ok("burden " + num(casp_burden) + " <= " + num(dr_burden) +
            "; top-kappa coupled margins:" + gaps);
}

// 10. With a reconstruction-scale floor, zero penalty chases the off-support
//     policy while every positive penalty in the working grid rejects it.
Verdict penalty_threshold() {
  FeasibleMap support = {{{0, 1}, {2}}};
  TwoStagePolicy logger;
  logger.id = "logger";
  logger.stage1 = {{1.0, 0.0}};
  logger.stage2 = {{{0.6, 0.4}, {1.0}}};
  const Propensities prop = reconstructed_propensities(support, logger, 1e-9);

  RewardModel model;
  model.folds = 1;
  model.cells = RewardCells::context_pair;
  model.reward_bound = 1.0;
  model.fold_prior = {0.5};
  model.tables.resize(1);
  model.tables[0][RewardModel::cell_key(model.cells, 0, 0, 0)] = 0.8;
  model.tables[0][RewardModel::cell_key(model.cells, 0, 0, 1)] = 0.5;
  model.tables[0][RewardModel::cell_key(model.cells, 0, 1, 2)] = 0.9;

  PolicyLibrary library;
  library.policies.push_back(deterministic_policy(support, {0}, {{0, 0}}, "supported-greedy"));
  library.policies.push_back(deterministic_policy(support, {0}, {{1, 0}}, "supported-alt"));
  library.policies.push_back(deterministic_policy(support, {1}, {{0, 0}}, "off-support"));

  // Records with y equal to the model value make the correction term vanish,
  // so the selection landscape is exact and deterministic.
  LoggedDataset data;
  data.environment_id = "penalty-threshold";
  for (int i = 0; i < 200; ++i) {
    LoggedRecord rec;
    rec.context = 0;
    rec.generator = 0;
    rec.index = i % 5 < 3 ? 0 : 1;
    rec.item = rec.index;
    rec.y = rec.index == 0 ? 0.8 : 0.5;
    rec.mu1 = 1.0;
    rec.mu2 = rec.index == 0 ? 0.6 : 0.4;
    data.records.push_back(rec);
  }

  SelectorConfig cfg;
  const std::vector<double> grid = {0.0, 0.01, 0.02, 0.05, 0.1, 0.2};
  const auto table = evaluate_library(library, data, model, prop, cfg);
  const auto path = lambda_sweep(library, data, model, prop, grid, cfg);

  const PolicyEstimate* off = nullptr;
  for (const auto& est : table) {
    if (est.policy_id == "off-support") off = &est;
  }
  if (off == nullptr) return fail("off-support row missing");
  if (off->off_support_mass < 1.0 - 1e-12) {
    return fail("off-support mass " + num(off->off_support_mass) + " != 1");
  }
  if (off->burden < 1e7 * off->off_support_mass) {
    return fail("off-support burden " + num(off->burden) + " below floor scale");
  }
  if (path[0].selected_id != "off-support") {
    return fail("lambda 0 picked " + path[0].selected_id);
  }
  for (std::size_t i = 1; i < path.size(); ++i) {
    if (path[i].selected_id.rfind("supported", 0) != 0) {
      return fail("lambda " + num(grid[i]) + " picked " + path[i].selected_id);
    }
  }
  return ok("lambda 0 -> off-support (burden " + num(off->burden) +
            "), every lambda in [0.01, 0.2] -> supported");
}

// 11. Ingestion reproduces known corpus counts: the real corpus when
//     CASP_ML1M_DIR points at it, otherwise the bundled fixture.
Verdict ingestion_counts() {
  const char* real_dir = std::getenv("CASP_ML1M_DIR");
  if (real_dir != nullptr && std::filesystem::exists(std::filesystem::path(real_dir) / "ratings.dat")) {
    const MlTables tables = ingest(real_dir);
    if (tables.ratings.size() != 1000209) {
      return fail("ml-1m event count " + std::to_string(tables.ratings.size()));
    }
    const double rate = positive_rate(tables);
    if (std::abs(rate - 0.575) > 0.003) return fail("ml-1m positive rate " + num(rate));
    return ok("ml-1m: 1000209 events, positive rate " + num(rate));
  }

  const MlTables tables = ingest(CASP_FIXTURE_DIR);
  if (tables.ratings.size() != 1000) {
    return fail("fixture event count " + std::to_string(tables.ratings.size()));
  }
  int positives = 0;
  for (const auto& e : tables.ratings) positives += e.rating >= 4 ? 1 : 0;
  if (positives != 399) return fail("fixture positives " + std::to_string(positives));
  if (tables.movies.movies.size() != 81) {
    return fail("fixture movie count " + std::to_string(tables.movies.movies.size()));
  }
  if (tables.users.users.size() != 40) {
    return fail("fixture user count " + std::to_string(tables.users.users.size()));
  }
  const double rate = positive_rate(tables);
  if (std::abs(rate - 0.399) > 1e-12) return fail("fixture positive rate " + num(rate));
  return ok("fixture: 1000 events, 399 positives, 81 movies, 40 users (set CASP_ML1M_DIR for the "
            "full corpus)");
}

// 12. Strict-prefix reconstruction: no feasible set may contain an item whose
//     first rating does not strictly precede the context, and the injected
//     future-only item never appears anywhere.
Verdict prefix_discipline() {
  const MlTables tables = ingest(CASP_FIXTURE_DIR);
  AppConfig cfg;
  cfg.warm_start = 6;
  cfg.max_contexts = 25000;
  cfg.top_l = 8;
  cfg.min_fill = 2;
  cfg.seed = 3;
  cfg.keep_proposed = true;
  cfg.imputed_labels = true;
  const ReconstructionResult rec = reconstruct(tables, cfg);
  if (rec.data.size() == 0) return fail("no contexts accepted");

  std::unordered_map<long long, int> event_pos;
  std::unordered_map<int, int> first_pos;
  std::unordered_map<int, long long> first_ts;
  for (std::size_t i = 0; i < tables.ratings.size(); ++i) {
    const auto& e = tables.ratings[i];
    event_pos[(static_cast<long long>(e.user) << 32) | e.movie] = static_cast<int>(i);
    if (!first_pos.count(e.movie)) {
      first_pos[e.movie] = static_cast<int>(i);
      first_ts[e.movie] = e.timestamp;
    }
  }

  // Accepted contexts: total-order strictness.
  for (std::size_t c = 0; c < rec.support.size(); ++c) {
    const auto& ctx = rec.contexts[c];
    const int pos = event_pos.at((static_cast<long long>(ctx.user) << 32) | ctx.rated_movie);
    for (const auto& set : rec.support[c]) {
      for (int item : set) {
        if (item == 99) return fail("future-only item in an accepted support set");
        if (first_pos.at(item) >= pos) {
          return fail("item " + std::to_string(item) + " enters a set before its first rating");
        }
      }
    }
  }
  // Every proposed context, accepted or not: timestamp discipline and the
  // injected future-only item.
  for (const auto& audit : rec.proposed_audit) {
    for (const auto& set : audit.feasible) {
      for (int item : set) {
        if (item == 99) return fail("future-only item in a proposed set");
        if (first_ts.at(item) > audit.timestamp) {
          return fail("item " + std::to_string(item) + " proposed before its first rating");
        }
      }
    }
  }
  return ok(std::to_string(rec.proposed) + " proposed / " + std::to_string(rec.data.size()) +
            " accepted contexts audited; future-only item never surfaced");
}

struct Criterion {
  std::string name;
  Verdict (*fn)();
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {"counterexample-separation", counterexample_separation},
      {"second-moment-identity", second_moment_identity},
      {"ips-variance-bound", ips_variance_bound},
      {"dr-unbiasedness", dr_unbiasedness},
      {"population-guarantee", population_guarantee},
      {"finite-class-coverage", finite_class_coverage},
      {"nuisance-gap", nuisance_gap},
      {"behavior-diagnostics", behavior_diagnostics},
      {"coupling-dominance", coupling_dominance},
      {"penalty-threshold", penalty_threshold},
      {"ingestion-counts", ingestion_counts},
      {"prefix-discipline", prefix_discipline},
  };

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = criteria[i].fn();
    } catch (const std::exception& e) {
      v = fail(std::string("exception: ") + e.what());
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failures += v.pass ? 0 : 1;
    std::printf("[%2zu/12] %s %-26s (%s) [%.1fs]\n", i + 1, v.pass ? "PASS" : "FAIL",
                criteria[i].name.c_str(), v.detail.c_str(), secs);
    std::fflush(stdout);
  }
  if (failures == 0) {
    std::printf("all 12 acceptance criteria passed\n");
  } else {
    std::printf("%d acceptance criteria FAILED\n", failures);
  }
  return failures;
}
