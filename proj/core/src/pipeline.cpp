#include "casp/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include "casp/errors.hpp"
#include "casp/estimate.hpp"
#include "casp/io.hpp"
#include "casp/nuisance.hpp"
#include "casp/policy_math.hpp"
#include "casp/rng.hpp"
#include "casp/util.hpp"

namespace casp {

namespace {

std::size_t uz(int v) { return static_cast<std::size_t>(v); }

// Top-level stream tags: run_block uses the block ordinal, run_lambda_sweep
// a disjoint range, the app temporal replications a third.
constexpr std::uint64_t kLambdaSweepTagBase = 100;
constexpr std::uint64_t kAppRepTag = 200;

std::string fixed(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return std::string(buf);
}

/// One replication's shared machinery: a dataset split in half, a candidate
/// library fit on the first half, and a cross-fitted estimate table on the
/// second half.
struct RepArtifacts {
  Environment env;
  PolicyLibrary library;
  LoggedDataset selection;
  RewardModel crossfit;
  Propensities prop;
  std::vector<PolicyEstimate> table;
};

RepArtifacts build_rep_artifacts(const BlockRunConfig& cfg, const BlockConfig& point_cfg,
                                 std::uint64_t rep_seed) {
  RepArtifacts art;
  BlockConfig pc = point_cfg;
  pc.seed = rep_seed;
  art.env = build_block_env(pc);
  const LoggedDataset data = sample_log(art.env, pc.n, rep_seed, pc.bernoulli_rewards);

  const int n = data.size();
  CounterRng split_rng = CounterRng(rep_seed).substream(kSplitStream);
  const std::vector<int> order = split_rng.sample_without_replacement(n, n);
  const int half = n / 2;
  std::vector<int> fit_idx(order.begin(), order.begin() + half);
  std::vector<int> sel_idx(order.begin() + half, order.end());
  std::sort(fit_idx.begin(), fit_idx.end());
  std::sort(sel_idx.begin(), sel_idx.end());

  LoggedDataset fit;
  fit.environment_id = data.environment_id;
  fit.seed = rep_seed;
  for (int i : fit_idx) fit.records.push_back(data.records[uz(i)]);
  art.selection.environment_id = data.environment_id;
  art.selection.seed = rep_seed;
  for (int i : sel_idx) art.selection.records.push_back(data.records[uz(i)]);

  const RewardModel library_model =
      fit_reward_pooled(fit, cfg.smoothing, art.env.reward_bound, RewardCells::context_pair);
  art.library =
      build_policy_library(art.env.feasible, art.env.behavior, library_model, cfg.max_policies);
  art.prop = logged_propensities(art.env, cfg.floor);
  const std::uint64_t fold_seed = CounterRng(rep_seed).substream(kFoldStream).next_u64();
  art.crossfit = fit_reward_crossfit(art.selection, cfg.folds, cfg.smoothing, fold_seed,
                                     art.env.reward_bound, RewardCells::context_pair);

  SelectorConfig scfg;
  scfg.lambda = cfg.lambda;
  scfg.beta = cfg.beta;
  scfg.burden_mode = cfg.burden_mode;
  scfg.lambda_grid = cfg.lambda_grid;
  scfg.threads = 1;  // replications own the outer worker pool
  art.table = evaluate_library(art.library, art.selection, art.crossfit, art.prop, scfg);
  return art;
}

SelectorConfig selector_config(const BlockRunConfig& cfg, SelectorKind kind) {
  SelectorConfig scfg;
  scfg.kind = kind;
  scfg.lambda = cfg.lambda;
  scfg.beta = cfg.beta;
  scfg.burden_mode = cfg.burden_mode;
  scfg.lambda_grid = cfg.lambda_grid;
  scfg.threads = 1;
  return scfg;
}

struct RepRow {
  std::string id;
  double true_value = 0.0;
  double regret = 0.0;
  double true_burden = 0.0;
  double dr = 0.0;
  double burden = 0.0;
  double ess = 0.0;
  double max_weight = 0.0;
  double off_support = 0.0;
};

MethodAggregate reduce_rows(const std::string& name, const std::vector<RepRow>& rows) {
  MethodAggregate agg;
  agg.selector = name;
  KahanSum value, regret, true_burden, dr, burden_est, ess, max_w, off;
  for (const RepRow& row : rows) {
    agg.selected_ids.push_back(row.id);
    value.add(row.true_value);
    regret.add(row.regret);
    true_burden.add(row.true_burden);
    dr.add(row.dr);
    burden_est.add(row.burden);
    ess.add(row.ess);
    max_w.add(row.max_weight);
    off.add(row.off_support);
  }
  const double n = static_cast<double>(rows.size());
  if (n > 0) {
    agg.mean_value = value.value() / n;
    agg.mean_regret = regret.value() / n;
    agg.mean_true_burden = true_burden.value() / n;
    agg.mean_dr_value = dr.value() / n;
    agg.mean_burden = burden_est.value() / n;
    agg.mean_ess = ess.value() / n;
    agg.mean_max_weight = max_w.value() / n;
    agg.mean_off_support = off.value() / n;
  }
  agg.stability = replication_stability(agg.selected_ids);
  return agg;
}

std::vector<LambdaPathRow> path_from_table(const std::vector<PolicyEstimate>& table,
                                           const std::vector<double>& grid) {
  std::vector<LambdaPathRow> path;
  for (std::size_t l = 0; l < grid.size(); ++l) {
    std::vector<double> scores;
    scores.reserve(table.size());
    for (const PolicyEstimate& est : table) scores.push_back(est.j_lambda[l]);
    const int pick = argmax_with_tiebreak(scores, table);
    const PolicyEstimate& est = table[uz(pick)];
    LambdaPathRow row;
    row.lambda = grid[l];
    row.selected_id = est.policy_id;
    row.dr_value = est.v_dr;
    row.burden = est.burden;
    row.ess = est.ess;
    row.max_weight = est.max_weight;
    path.push_back(std::move(row));
  }
  return path;
}

}  // namespace

const std::vector<SelectorKind>& simulation_selectors() {
  static const std::vector<SelectorKind> kinds = {
      SelectorKind::casp,     SelectorKind::dr_only,  SelectorKind::dr_lcb,
      SelectorKind::plugin,   SelectorKind::stagewise, SelectorKind::ma_style,
      SelectorKind::wang_style, SelectorKind::oracle};
  return kinds;
}

const std::vector<SelectorKind>& app_selectors() {
  static const std::vector<SelectorKind> kinds = {
      SelectorKind::casp,   SelectorKind::dr_only,   SelectorKind::dr_lcb,
      SelectorKind::plugin, SelectorKind::stagewise, SelectorKind::ma_style,
      SelectorKind::wang_style};
  return kinds;
}

std::vector<std::string> method_names(const std::vector<SelectorKind>& kinds) {
  std::vector<std::string> names;
  names.reserve(kinds.size());
  for (SelectorKind kind : kinds) names.push_back(to_string(kind));
  return names;
}

std::string block_label(Block block) {
  switch (block) {
    case Block::counterexample: return "B1";
    case Block::coupling: return "B2";
    case Block::support_stress: return "B3";
    case Block::large_action: return "B4";
    case Block::sample_size: return "B5";
  }
  return "B?";
}

BlockResult run_block(const BlockRunConfig& cfg) {
  if (cfg.block.replications < 1) throw ConfigError("replications must be at least 1");
  const std::vector<SelectorKind>& kinds = simulation_selectors();
  BlockResult result;
  result.block = cfg.block.block;
  result.block_label = block_label(cfg.block.block);
  result.sweep = cfg.block.sweep.empty() ? default_sweep(cfg.block.block) : cfg.block.sweep;

  const int points = static_cast<int>(result.sweep.size());
  const int reps = cfg.block.replications;

  // outcomes[point * reps + rep][selector]
  std::vector<std::vector<RepRow>> outcomes(uz(points * reps));
  parallel_for(
      uz(points * reps),
      [&](std::size_t task) {
        const int p = static_cast<int>(task) / reps;
        const int r = static_cast<int>(task) % reps;
        const std::uint64_t rep_seed = block_rep_seed(cfg, p, r);
        const BlockConfig point_cfg = apply_sweep_value(cfg.block, result.sweep[uz(p)]);
        RepArtifacts art = build_rep_artifacts(cfg, point_cfg, rep_seed);

        std::vector<double> true_values(uz(art.library.size()), 0.0);
        double best_true = -1.0;
        for (int i = 0; i < art.library.size(); ++i) {
          true_values[uz(i)] = policy_value(art.env, art.library.at(i));
          best_true = std::max(best_true, true_values[uz(i)]);
        }

        std::vector<RepRow>& rows = outcomes[task];
        rows.resize(kinds.size());
        for (std::size_t s = 0; s < kinds.size(); ++s) {
          const SelectionReport report =
              score_selector(selector_config(cfg, kinds[s]), art.library, art.table,
                             art.selection, art.crossfit, art.prop, &art.env);
          const int pick = report.selected_index;
          const PolicyEstimate& est = art.table[uz(pick)];
          RepRow& row = rows[s];
          row.id = report.selected_id;
          row.true_value = true_values[uz(pick)];
          row.regret = best_true - row.true_value;
          row.true_burden = burden(art.env, art.library.at(pick), cfg.burden_mode).global;
          row.dr = est.v_dr;
          row.burden = est.burden;
          row.ess = est.ess;
          row.max_weight = est.max_weight;
          row.off_support = est.off_support_mass;
        }
      },
      cfg.threads);

  for (int p = 0; p < points; ++p) {
    SweepPointResult point;
    point.sweep_value = result.sweep[uz(p)];
    for (std::size_t s = 0; s < kinds.size(); ++s) {
      std::vector<RepRow> rows;
      rows.reserve(uz(reps));
      for (int r = 0; r < reps; ++r) rows.push_back(outcomes[uz(p * reps + r)][s]);
      point.methods.push_back(reduce_rows(to_string(kinds[s]), rows));
    }
    result.points.push_back(std::move(point));
  }
  for (std::size_t s = 0; s < kinds.size(); ++s) {
    std::vector<RepRow> rows;
    rows.reserve(uz(points * reps));
    for (int p = 0; p < points; ++p) {
      for (int r = 0; r < reps; ++r) rows.push_back(outcomes[uz(p * reps + r)][s]);
    }
    result.overall.push_back(reduce_rows(to_string(kinds[s]), rows));
  }
  return result;
}

std::uint64_t block_rep_seed(const BlockRunConfig& cfg, int point, int rep) {
  return CounterRng(cfg.block.seed)
      .substream(static_cast<std::uint64_t>(cfg.block.block))
      .substream(uz(point))
      .substream(uz(rep))
      .next_u64();
}

LoggedDataset block_rep_dataset(const BlockRunConfig& cfg, int point, int rep) {
  const std::vector<double> sweep =
      cfg.block.sweep.empty() ? default_sweep(cfg.block.block) : cfg.block.sweep;
  BlockConfig pc = apply_sweep_value(cfg.block, sweep.at(uz(point)));
  pc.seed = block_rep_seed(cfg, point, rep);
  const Environment env = build_block_env(pc);
  return sample_log(env, pc.n, pc.seed, pc.bernoulli_rewards);
}

std::vector<LambdaPathRow> run_lambda_sweep(const BlockRunConfig& cfg) {
  if (cfg.block.replications < 1) throw ConfigError("replications must be at least 1");
  if (cfg.lambda_grid.empty()) throw ConfigError("lambda grid must be nonempty");
  for (double l : cfg.lambda_grid) {
    if (l < 0.0) throw ConfigError("lambda grid entries must be nonnegative");
  }
  const int reps = cfg.block.replications;
  const CounterRng master = CounterRng(cfg.block.seed)
                                .substream(kLambdaSweepTagBase +
                                           static_cast<std::uint64_t>(cfg.block.block));
  std::vector<std::vector<LambdaPathRow>> per_rep(uz(reps));
  parallel_for(
      uz(reps),
      [&](std::size_t r) {
        const std::uint64_t rep_seed = master.substream(r).next_u64();
        RepArtifacts art = build_rep_artifacts(cfg, cfg.block, rep_seed);
        per_rep[r] = path_from_table(art.table, cfg.lambda_grid);
      },
      cfg.threads);
  return aggregate_lambda_paths(per_rep);
}

std::vector<LambdaPathRow> aggregate_lambda_paths(
    const std::vector<std::vector<LambdaPathRow>>& per_rep) {
  std::vector<LambdaPathRow> out;
  if (per_rep.empty()) return out;
  const std::size_t grid = per_rep[0].size();
  for (std::size_t l = 0; l < grid; ++l) {
    LambdaPathRow row;
    row.lambda = per_rep[0][l].lambda;
    std::vector<std::string> ids;
    KahanSum dr, burden_sum, ess, max_w;
    for (const auto& path : per_rep) {
      ids.push_back(path[l].selected_id);
      dr.add(path[l].dr_value);
      burden_sum.add(path[l].burden);
      ess.add(path[l].ess);
      max_w.add(path[l].max_weight);
    }
    const double n = static_cast<double>(per_rep.size());
    row.dr_value = dr.value() / n;
    row.burden = burden_sum.value() / n;
    row.ess = ess.value() / n;
    row.max_weight = max_w.value() / n;
    const StabilityResult stability = replication_stability(ids);
    row.selected_id = stability.mode_id;
    row.mode_frequency = stability.mode_frequency;
    out.push_back(std::move(row));
  }
  return out;
}

std::vector<std::string> sweep_csv_header(const std::vector<std::string>& methods) {
  std::vector<std::string> header = {"sweep_value"};
  for (const std::string& m : methods) {
    header.push_back(m + "_value");
    header.push_back(m + "_burden");
    header.push_back(m + "_stability");
  }
  return header;
}

std::vector<std::vector<std::string>> sweep_csv_rows(const BlockResult& result) {
  std::vector<std::vector<std::string>> rows;
  for (const SweepPointResult& point : result.points) {
    std::vector<std::string> row = {format_double(point.sweep_value)};
    for (const MethodAggregate& m : point.methods) {
      row.push_back(format_double(m.mean_value));
      row.push_back(format_double(m.mean_true_burden));
      row.push_back(format_double(m.stability.mode_frequency));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<std::string> frontier_csv_header(const std::vector<std::string>& methods) {
  std::vector<std::string> header = {"block_label"};
  for (const std::string& m : methods) {
    header.push_back(m + "_value");
    header.push_back(m + "_burden");
    header.push_back(m + "_stability");
  }
  return header;
}

std::vector<std::string> frontier_csv_row(const BlockResult& result) {
  std::vector<std::string> row = {result.block_label};
  for (const MethodAggregate& m : result.overall) {
    row.push_back(format_double(m.mean_value));
    row.push_back(format_double(m.mean_true_burden));
    row.push_back(format_double(m.stability.mode_frequency));
  }
  return row;
}

std::vector<std::string> comparator_csv_header() {
  return {"selector", "value", "regret", "burden", "stability", "mode_id"};
}

std::vector<std::vector<std::string>> comparator_csv_rows(
    const std::vector<MethodAggregate>& methods) {
  std::vector<std::vector<std::string>> rows;
  for (const MethodAggregate& m : methods) {
    rows.push_back({m.selector, format_double(m.mean_value), format_double(m.mean_regret),
                    format_double(m.mean_true_burden),
                    format_double(m.stability.mode_frequency), m.stability.mode_id});
  }
  return rows;
}

std::vector<std::string> lambda_path_csv_header() {
  return {"lambda", "dr_value", "burden", "ess", "max_w", "mode_freq"};
}

std::vector<std::vector<std::string>> lambda_path_csv_rows(
    const std::vector<LambdaPathRow>& path) {
  std::vector<std::vector<std::string>> rows;
  for (const LambdaPathRow& row : path) {
    rows.push_back({format_double(row.lambda), format_double(row.dr_value),
                    format_double(row.burden), format_double(row.ess),
                    format_double(row.max_weight), format_double(row.mode_frequency)});
  }
  return rows;
}

std::vector<std::string> dataset_csv_header() {
  return {"rep", "context_id", "a1", "a2", "y", "mu1", "mu2"};
}

std::vector<std::vector<std::string>> dataset_csv_rows(int rep, const LoggedDataset& data) {
  std::vector<std::vector<std::string>> rows;
  rows.reserve(data.records.size());
  for (const LoggedRecord& r : data.records) {
    rows.push_back({std::to_string(rep), std::to_string(r.context), std::to_string(r.generator),
                    std::to_string(r.item), format_double(r.y), format_double(r.mu1),
                    format_double(r.mu2)});
  }
  return rows;
}

std::string block_text_summary(const BlockResult& result) {
  std::string out;
  out += "block " + result.block_label + " (" + to_string(result.block) + ")\n";
  out += "sweep points: " + std::to_string(result.points.size()) + "\n\n";
  out += "overall comparator (mean over sweep x replications)\n";
  out += "selector       value     regret    burden      stability  mode\n";
  for (const MethodAggregate& m : result.overall) {
    char line[256];
    std::snprintf(line, sizeof(line), "%-12s %9.4f %9.4f %11.4f %9.2f   %s\n",
                  m.selector.c_str(), m.mean_value, m.mean_regret, m.mean_true_burden,
                  m.stability.mode_frequency, m.stability.mode_id.c_str());
    out += line;
  }
  out += "\nper sweep point (value | burden)\n";
  for (const SweepPointResult& point : result.points) {
    out += "  sweep=" + fixed(point.sweep_value, 3) + ":";
    for (const MethodAggregate& m : point.methods) {
      out += " " + m.selector + "=" + fixed(m.mean_value, 3) + "|" +
             fixed(m.mean_true_burden, 2);
    }
    out += "\n";
  }
  return out;
}

AppResult run_app(const MlTables& tables, const AppRunConfig& cfg) {
  if (cfg.replications < 1) throw ConfigError("replications must be at least 1");
  if (cfg.floor <= 0.0) {
    throw ConfigError("the application needs a positive propensity floor");
  }
  AppResult result;
  const ReconstructionResult rec = reconstruct(tables, cfg.app);
  result.diagnostics = support_diagnostics(rec);
  result.accepted = static_cast<int>(rec.contexts.size());
  result.proposed = rec.proposed;
  result.dropped_no_generator = rec.dropped_no_generator;
  result.rejected_rated_outside = rec.rejected_rated_outside;
  result.rejected_item_mismatch = rec.rejected_item_mismatch;
  if (result.accepted == 0) throw DataError("reconstruction accepted no contexts");
  {
    KahanSum labels;
    for (const AppContext& ctx : rec.contexts) labels.add(ctx.label);
    result.positive_share = labels.value() / static_cast<double>(result.accepted);
  }

  const Propensities prop = reconstructed_propensities(rec.support, rec.logger, cfg.floor);
  const std::vector<SelectorKind>& kinds = app_selectors();
  const CounterRng master = CounterRng(cfg.app.seed).substream(kAppRepTag);

  const std::size_t reps = uz(cfg.replications);
  std::vector<std::vector<RepRow>> outcomes(reps);          // [rep][selector]
  std::vector<RepRow> behavior_rows(reps);
  std::vector<std::vector<LambdaPathRow>> paths(reps);
  std::vector<std::vector<double>> casp_share(reps);
  std::vector<std::vector<double>> behavior_share(reps);

  parallel_for(
      reps,
      [&](std::size_t r) {
        const std::uint64_t rep_seed = master.substream(r).next_u64();
        const auto [train, eval] =
            temporal_split(rec, cfg.train_fraction, cfg.jitter, rep_seed);
        const RewardModel library_model =
            fit_reward_pooled(train, cfg.smoothing, 1.0, RewardCells::item_only);
        const PolicyLibrary library =
            build_policy_library(rec.support, rec.logger, library_model, cfg.max_policies);
        const std::uint64_t fold_seed = CounterRng(rep_seed).substream(kFoldStream).next_u64();
        const RewardModel crossfit = fit_reward_crossfit(eval, cfg.folds, cfg.smoothing,
                                                         fold_seed, 1.0, RewardCells::item_only);
        SelectorConfig scfg;
        scfg.lambda = cfg.lambda;
        scfg.beta = cfg.beta;
        scfg.burden_mode = cfg.burden_mode;
        scfg.lambda_grid = cfg.lambda_grid;
        scfg.threads = 1;
        const std::vector<PolicyEstimate> table =
            evaluate_library(library, eval, crossfit, prop, scfg);

        outcomes[r].resize(kinds.size());
        for (std::size_t s = 0; s < kinds.size(); ++s) {
          SelectorConfig kcfg = scfg;
          kcfg.kind = kinds[s];
          const SelectionReport report =
              score_selector(kcfg, library, table, eval, crossfit, prop, nullptr);
          const PolicyEstimate& est = table[uz(report.selected_index)];
          RepRow& row = outcomes[r][s];
          row.id = report.selected_id;
          row.dr = est.v_dr;
          row.burden = est.burden;
          row.ess = est.ess;
          row.max_weight = est.max_weight;
          row.off_support = est.off_support_mass;
          if (kinds[s] == SelectorKind::casp) casp_share[r] = est.generator_share;
        }
        for (std::size_t i = 0; i < table.size(); ++i) {
          if (table[i].policy_id == "behavior") {
            const PolicyEstimate& est = table[i];
            RepRow& row = behavior_rows[r];
            row.id = "behavior";
            row.dr = est.v_dr;
            row.burden = est.burden;
            row.ess = est.ess;
            row.max_weight = est.max_weight;
            row.off_support = est.off_support_mass;
            behavior_share[r] = est.generator_share;
            break;
          }
        }
        paths[r] = path_from_table(table, cfg.lambda_grid);
      },
      cfg.threads);

  for (std::size_t s = 0; s < kinds.size(); ++s) {
    std::vector<RepRow> rows;
    rows.reserve(reps);
    for (std::size_t r = 0; r < reps; ++r) rows.push_back(outcomes[r][s]);
    result.comparator.push_back(reduce_rows(to_string(kinds[s]), rows));
  }
  result.comparator.push_back(reduce_rows("behavior", behavior_rows));
  result.lambda_path = aggregate_lambda_paths(paths);

  for (int g = 0; g < kNumGenerators; ++g) {
    GeneratorDeltaRow row;
    row.generator = kGeneratorNames[g];
    KahanSum selected, behavior;
    int counted = 0;
    for (std::size_t r = 0; r < reps; ++r) {
      if (casp_share[r].empty() || behavior_share[r].empty()) continue;
      selected.add(casp_share[r][uz(g)]);
      behavior.add(behavior_share[r][uz(g)]);
      ++counted;
    }
    if (counted > 0) {
      row.selected_share = selected.value() / counted;
      row.behavior_share = behavior.value() / counted;
      row.delta = row.selected_share - row.behavior_share;
    }
    result.policy_delta.push_back(std::move(row));
  }

  result.pool_rows.reserve(rec.data.records.size());
  for (const LoggedRecord& r : rec.data.records) {
    result.pool_rows.push_back({std::to_string(r.context), std::to_string(r.generator),
                                std::to_string(r.item), format_double(r.y),
                                format_double(r.mu1), format_double(r.mu2)});
  }
  for (std::size_t c = 0; c < rec.support.size(); ++c) {
    for (int g = 0; g < kNumGenerators; ++g) {
      std::string items;
      for (int item : rec.support[c][uz(g)]) {
        if (!items.empty()) items += ' ';
        items += std::to_string(item);
      }
      result.support_rows.push_back({std::to_string(c), kGeneratorNames[g],
                                     format_double(rec.logger.stage1[c][uz(g)]), items});
    }
  }
  return result;
}

std::vector<std::string> pool_csv_header() {
  return {"context_id", "a1", "a2", "y", "mu1", "mu2"};
}

std::vector<std::string> support_csv_header() {
  return {"context_id", "generator", "mu1", "items"};
}

std::vector<std::string> app_comparator_csv_header() {
  return {"selector", "dr_value", "burden", "ess", "max_w", "mode_freq"};
}

std::vector<std::vector<std::string>> app_comparator_csv_rows(const AppResult& result) {
  std::vector<std::vector<std::string>> rows;
  for (const MethodAggregate& m : result.comparator) {
    rows.push_back({m.selector, format_double(m.mean_dr_value), format_double(m.mean_burden),
                    format_double(m.mean_ess), format_double(m.mean_max_weight),
                    format_double(m.stability.mode_frequency)});
  }
  return rows;
}

std::vector<std::string> generator_delta_csv_header() {
  return {"generator", "behavior_share", "selected_share", "delta"};
}

std::vector<std::vector<std::string>> generator_delta_csv_rows(const AppResult& result) {
  std::vector<std::vector<std::string>> rows;
  for (const GeneratorDeltaRow& row : result.policy_delta) {
    rows.push_back({row.generator, format_double(row.behavior_share),
                    format_double(row.selected_share), format_double(row.delta)});
  }
  return rows;
}

std::vector<std::string> diagnostics_csv_header() {
  std::vector<std::string> header = {
      "contexts",        "mean_support_count", "multi_support_share", "mean_stage1_entropy",
      "dominant_share",  "min_share",          "tail_item_share",     "mean_pair_overlap"};
  for (int g = 0; g < kNumGenerators; ++g) {
    header.push_back(std::string("share_") + kGeneratorNames[g]);
  }
  for (int g = 0; g < kNumGenerators; ++g) {
    header.push_back(std::string("zero_share_") + kGeneratorNames[g]);
  }
  return header;
}

std::vector<std::string> diagnostics_csv_row(const SupportDiagnostics& diag) {
  std::vector<std::string> row = {std::to_string(diag.contexts),
                                  format_double(diag.mean_support_count),
                                  format_double(diag.multi_support_share),
                                  format_double(diag.mean_stage1_entropy),
                                  format_double(diag.dominant_share),
                                  format_double(diag.min_share),
                                  format_double(diag.tail_item_share),
                                  format_double(diag.mean_pair_overlap)};
  for (int g = 0; g < kNumGenerators; ++g) row.push_back(format_double(diag.generator_share[uz(g)]));
  for (int g = 0; g < kNumGenerators; ++g) {
    row.push_back(format_double(diag.zero_support_share[uz(g)]));
  }
  return row;
}

std::string app_text_summary(const AppResult& result) {
  std::string out;
  out += "reconstructed pool\n";
  out += "  proposed contexts:        " + std::to_string(result.proposed) + "\n";
  out += "  accepted contexts:        " + std::to_string(result.accepted) + "\n";
  out += "  dropped (no generator):   " + std::to_string(result.dropped_no_generator) + "\n";
  out += "  rejected (rated outside): " + std::to_string(result.rejected_rated_outside) + "\n";
  out += "  rejected (item mismatch): " + std::to_string(result.rejected_item_mismatch) + "\n";
  out += "  positive-label share:     " + fixed(result.positive_share, 4) + "\n\n";
  out += "support diagnostics\n";
  out += "  mean supported generators: " + fixed(result.diagnostics.mean_support_count, 3) + "\n";
  out += "  multi-support share:       " + fixed(result.diagnostics.multi_support_share, 3) +
         "\n";
  out += "  stage-1 entropy (nats):    " + fixed(result.diagnostics.mean_stage1_entropy, 3) +
         "\n";
  out += "  tail item share:           " + fixed(result.diagnostics.tail_item_share, 3) + "\n";
  for (int g = 0; g < kNumGenerators; ++g) {
    out += std::string("  ") + kGeneratorNames[g] + " share " +
           fixed(result.diagnostics.generator_share[uz(g)], 3) + ", zero-support " +
           fixed(result.diagnostics.zero_support_share[uz(g)], 3) + "\n";
  }
  out += "\ncomparator (mean over temporal replications)\n";
  out += "selector       dr_value   burden        ess       max_w   mode_freq  mode\n";
  for (const MethodAggregate& m : result.comparator) {
    char line[256];
    std::snprintf(line, sizeof(line), "%-12s %9.4f %12.4g %10.1f %11.4g %7.2f   %s\n",
                  m.selector.c_str(), m.mean_dr_value, m.mean_burden, m.mean_ess,
                  m.mean_max_weight, m.stability.mode_frequency, m.stability.mode_id.c_str());
    out += line;
  }
  out += "\nlambda path\n";
  for (const LambdaPathRow& row : result.lambda_path) {
    char line[256];
    std::snprintf(line, sizeof(line), "  lambda=%5.3f  dr=%8.4f  burden=%12.4g  mode=%s\n",
                  row.lambda, row.dr_value, row.burden, row.selected_id.c_str());
    out += line;
  }
  return out;
}

}  // namespace casp
