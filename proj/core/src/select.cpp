#include "casp/select.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <unordered_map>

#include "casp/errors.hpp"
#include "casp/io.hpp"
#include "casp/util.hpp"

namespace casp {

namespace {

std::size_t uz(int v) { return static_cast<std::size_t>(v); }

std::vector<std::pair<int, int>> context_counts(const LoggedDataset& data) {
  std::unordered_map<int, int> counts;
  for (const LoggedRecord& rec : data.records) counts[rec.context] += 1;
  std::vector<std::pair<int, int>> out(counts.begin(), counts.end());
  std::sort(out.begin(), out.end());
  return out;
}

/// Record-weighted total variation between two policies' joint pair
/// distributions over the logged contexts.
double tv_distance(const TwoStagePolicy& a, const TwoStagePolicy& b,
                   const std::vector<std::pair<int, int>>& contexts, int n) {
  KahanSum total;
  for (const auto& [c, count] : contexts) {
    KahanSum per_context;
    const auto& a2 = a.stage2[uz(c)];
    const auto& b2 = b.stage2[uz(c)];
    for (std::size_t g = 0; g < a.stage1[uz(c)].size(); ++g) {
      const double pa = a.stage1[uz(c)][g];
      const double pb = b.stage1[uz(c)][g];
      for (std::size_t i = 0; i < a2[g].size(); ++i) {
        per_context.add(std::abs(pa * a2[g][i] - pb * b2[g][i]));
      }
    }
    total.add(static_cast<double>(count) * 0.5 * per_context.value());
  }
  return total.value() / static_cast<double>(n);
}

/// Continuation-blind proxy per generator: engineered scores when the
/// environment carries them, otherwise the empirical mean logged reward per
/// generator (context-independent, feasibility-ignoring).
std::vector<std::vector<double>> stagewise_proxy(const LoggedDataset& data,
                                                 const Propensities& prop,
                                                 const Environment* truth) {
  const std::size_t num_contexts = prop.feasible.size();
  const std::size_t k1 = prop.behavior.stage1.empty() ? 0 : prop.behavior.stage1[0].size();
  if (truth != nullptr && !truth->proxy_scores.empty()) return truth->proxy_scores;
  std::vector<double> sums(k1, 0.0);
  std::vector<int> counts(k1, 0);
  for (const LoggedRecord& rec : data.records) {
    sums[uz(rec.generator)] += rec.y;
    counts[uz(rec.generator)] += 1;
  }
  std::vector<double> score(k1, -1.0);
  for (std::size_t g = 0; g < k1; ++g) {
    if (counts[g] > 0) score[g] = sums[g] / static_cast<double>(counts[g]);
  }
  return std::vector<std::vector<double>>(num_contexts, score);
}

/// Two-phase composed rule: stage 1 deterministically follows the proxy
/// (restricted to generators with a nonempty feasible set), stage 2 is greedy
/// in the fold-mean model within each feasible set.
TwoStagePolicy compose_stagewise(const Propensities& prop, const RewardModel& reward,
                                 const std::vector<std::vector<double>>& proxy) {
  TwoStagePolicy pi;
  pi.id = "stagewise-composed";
  const std::size_t num_contexts = prop.feasible.size();
  pi.stage1.resize(num_contexts);
  pi.stage2.resize(num_contexts);
  for (std::size_t c = 0; c < num_contexts; ++c) {
    const auto& sets = prop.feasible[c];
    const std::size_t k1 = sets.size();
    pi.stage1[c].assign(k1, 0.0);
    pi.stage2[c].resize(k1);
    std::size_t pick = 0;
    bool found = false;
    for (std::size_t g = 0; g < k1; ++g) {
      if (sets[g].empty()) continue;
      if (!found || proxy[c][g] > proxy[c][pick]) {
        pick = g;
        found = true;
      }
    }
    pi.stage1[c][pick] = 1.0;
    for (std::size_t g = 0; g < k1; ++g) {
      pi.stage2[c][g].assign(sets[g].size(), 0.0);
      if (sets[g].empty()) continue;
      std::vector<double> qs(sets[g].size(), 0.0);
      for (std::size_t i = 0; i < sets[g].size(); ++i) {
        qs[i] = reward_fold_mean(reward, static_cast<int>(c), static_cast<int>(g), sets[g][i]);
      }
      pi.stage2[c][g][argmax_index(qs)] = 1.0;
    }
  }
  return pi;
}

bool is_det_greedy_id(const std::string& id) {
  return id.rfind("s1-det", 0) == 0 && id.size() >= 10 &&
         id.compare(id.size() - 10, 10, "_s2-greedy") == 0;
}

SelectionReport make_report(const SelectorConfig& cfg, SelectorKind kind,
                            const PolicyLibrary& library, std::vector<double> scores,
                            const std::vector<PolicyEstimate>& table) {
  SelectionReport report;
  report.kind = kind;
  report.lambda = cfg.lambda;
  report.beta = cfg.beta;
  report.burden_max = cfg.burden_max;
  report.burden_mode = cfg.burden_mode;
  report.scores = std::move(scores);
  report.table = table;
  report.selected_index = argmax_with_tiebreak(report.scores, table);
  report.selected_id = library.at(report.selected_index).id;
  return report;
}

}  // namespace

SelectorKind selector_from_string(const std::string& name) {
  if (name == "casp") return SelectorKind::casp;
  if (name == "constrained") return SelectorKind::constrained;
  if (name == "dr_only") return SelectorKind::dr_only;
  if (name == "dr_lcb") return SelectorKind::dr_lcb;
  if (name == "plugin") return SelectorKind::plugin;
  if (name == "stagewise") return SelectorKind::stagewise;
  if (name == "ma_style") return SelectorKind::ma_style;
  if (name == "wang_style") return SelectorKind::wang_style;
  if (name == "oracle") return SelectorKind::oracle;
  throw ConfigError("unknown selector '" + name + "'");
}

std::string to_string(SelectorKind kind) {
  switch (kind) {
    case SelectorKind::casp: return "casp";
    case SelectorKind::constrained: return "constrained";
    case SelectorKind::dr_only: return "dr_only";
    case SelectorKind::dr_lcb: return "dr_lcb";
    case SelectorKind::plugin: return "plugin";
    case SelectorKind::stagewise: return "stagewise";
    case SelectorKind::ma_style: return "ma_style";
    case SelectorKind::wang_style: return "wang_style";
    case SelectorKind::oracle: return "oracle";
  }
  return "casp";
}

std::vector<PolicyEstimate> evaluate_library(const PolicyLibrary& library,
                                             const LoggedDataset& data,
                                             const RewardModel& reward, const Propensities& prop,
                                             const SelectorConfig& cfg) {
  if (library.size() == 0) throw ConfigError("policy library is empty");
  std::vector<PolicyEstimate> table(uz(library.size()));
  parallel_for(
      static_cast<std::size_t>(library.size()),
      [&](std::size_t i) {
        table[i] = evaluate_policy(data, library.at(static_cast<int>(i)), reward, prop,
                                   cfg.lambda_grid, cfg.burden_mode);
      },
      cfg.threads);
  return table;
}

int argmax_with_tiebreak(const std::vector<double>& scores,
                         const std::vector<PolicyEstimate>& table) {
  if (scores.empty()) throw ConfigError("cannot select from an empty score list");
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best]) {
      best = i;
    } else if (scores[i] == scores[best]) {
      if (table[i].burden < table[best].burden ||
          (table[i].burden == table[best].burden &&
           table[i].policy_id < table[best].policy_id)) {
        best = i;
      }
    }
  }
  return static_cast<int>(best);
}

SelectionReport select_casp(const PolicyLibrary& library, const LoggedDataset& data,
                            const RewardModel& reward, const Propensities& prop,
                            const SelectorConfig& cfg) {
  SelectorConfig local = cfg;
  local.kind = SelectorKind::casp;
  return run_selector(local, library, data, reward, prop);
}

SelectionReport select_constrained(const PolicyLibrary& library, const LoggedDataset& data,
                                   const RewardModel& reward, const Propensities& prop,
                                   const SelectorConfig& cfg) {
  SelectorConfig local = cfg;
  local.kind = SelectorKind::constrained;
  return run_selector(local, library, data, reward, prop);
}

SelectionReport select_baseline(SelectorKind kind, const PolicyLibrary& library,
                                const LoggedDataset& data, const RewardModel& reward,
                                const Propensities& prop, const SelectorConfig& cfg,
                                const Environment* truth) {
  SelectorConfig local = cfg;
  local.kind = kind;
  return run_selector(local, library, data, reward, prop, truth);
}

SelectionReport run_selector(const SelectorConfig& cfg, const PolicyLibrary& library,
                             const LoggedDataset& data, const RewardModel& reward,
                             const Propensities& prop, const Environment* truth) {
  const auto table = evaluate_library(library, data, reward, prop, cfg);
  return score_selector(cfg, library, table, data, reward, prop, truth);
}

SelectionReport score_selector(const SelectorConfig& cfg, const PolicyLibrary& library,
                               const std::vector<PolicyEstimate>& table,
                               const LoggedDataset& data, const RewardModel& reward,
                               const Propensities& prop, const Environment* truth) {
  const int k = library.size();
  if (k == 0) throw ConfigError("policy library is empty");
  if (static_cast<int>(table.size()) != k) {
    throw ConfigError("estimate table does not match the library");
  }
  std::vector<double> scores(uz(k), 0.0);
  constexpr double kExcluded = -std::numeric_limits<double>::infinity();

  switch (cfg.kind) {
    case SelectorKind::casp: {
      if (cfg.lambda < 0.0) throw ConfigError("penalty lambda must be nonnegative");
      for (int i = 0; i < k; ++i) {
        scores[uz(i)] = casp_score(table[uz(i)].v_dr, table[uz(i)].burden, cfg.lambda);
      }
      break;
    }
    case SelectorKind::constrained: {
      int feasible = 0;
      int min_burden = 0;
      for (int i = 0; i < k; ++i) {
        if (table[uz(i)].burden < table[uz(min_burden)].burden) min_burden = i;
        if (table[uz(i)].burden <= cfg.burden_max) {
          scores[uz(i)] = table[uz(i)].v_dr;
          ++feasible;
        } else {
          scores[uz(i)] = kExcluded;
        }
      }
      if (feasible == 0) {
        throw ConfigError("no policy satisfies the burden constraint " +
                          format_double(cfg.burden_max) + "; minimum burden is " +
                          format_double(table[uz(min_burden)].burden) + " at policy '" +
                          table[uz(min_burden)].policy_id + "'");
      }
      break;
    }
    case SelectorKind::dr_only: {
      for (int i = 0; i < k; ++i) scores[uz(i)] = table[uz(i)].v_dr;
      break;
    }
    case SelectorKind::dr_lcb: {
      const double n = static_cast<double>(data.size());
      for (int i = 0; i < k; ++i) {
        const double se = sample_std(table[uz(i)].dr_scores) / std::sqrt(n);
        scores[uz(i)] = table[uz(i)].v_dr - cfg.beta * se;
      }
      break;
    }
    case SelectorKind::plugin: {
      for (int i = 0; i < k; ++i) scores[uz(i)] = table[uz(i)].v_plugin;
      break;
    }
    case SelectorKind::stagewise: {
      const auto proxy = stagewise_proxy(data, prop, truth);
      const TwoStagePolicy composed = compose_stagewise(prop, reward, proxy);
      const auto contexts = context_counts(data);
      for (int i = 0; i < k; ++i) {
        scores[uz(i)] = -tv_distance(library.at(i), composed, contexts, data.size());
      }
      break;
    }
    case SelectorKind::ma_style: {
      // Stage-1 importance weighting with a plug-in stage-2 continuation:
      // (1/n) sum_i (pi1 / mu1)(A1_i | X_i) * m_{q_hat_i}(X_i, A1_i; pi2).
      for (int i = 0; i < k; ++i) {
        const TwoStagePolicy& pi = library.at(i);
        KahanSum total;
        for (int r = 0; r < data.size(); ++r) {
          const LoggedRecord& rec = data.records[uz(r)];
          const double p1 = pi.stage1[uz(rec.context)][uz(rec.generator)];
          if (p1 <= 0.0) {
            continue;
          }
          double mu1 = prop.behavior.stage1[uz(rec.context)][uz(rec.generator)];
          if (mu1 <= 0.0) {
            if (prop.floor <= 0.0) {
              throw OffSupportError(rec.context, rec.generator, rec.item);
            }
            mu1 = prop.floor;
          }
          const int fold = reward.fold_of.empty() ? 0 : reward.fold_of[uz(r)];
          const auto& set = prop.feasible[uz(rec.context)][uz(rec.generator)];
          KahanSum m;
          for (std::size_t idx = 0; idx < set.size(); ++idx) {
            const double p2 = pi.stage2[uz(rec.context)][uz(rec.generator)][idx];
            if (p2 <= 0.0) continue;
            m.add(p2 * reward.value(fold, rec.context, rec.generator, set[idx]));
          }
          total.add((p1 / mu1) * m.value());
        }
        scores[uz(i)] = total.value() / static_cast<double>(data.size());
      }
      break;
    }
    case SelectorKind::wang_style: {
      // Tournament over the deterministic-generator greedy family by DR
      // value; falls back to the whole library when the family is absent.
      bool any = false;
      for (int i = 0; i < k; ++i) {
        if (is_det_greedy_id(table[uz(i)].policy_id)) {
          scores[uz(i)] = table[uz(i)].v_dr;
          any = true;
        } else {
          scores[uz(i)] = kExcluded;
        }
      }
      if (!any) {
        for (int i = 0; i < k; ++i) scores[uz(i)] = table[uz(i)].v_dr;
      }
      break;
    }
    case SelectorKind::oracle: {
      if (truth == nullptr) {
        throw ConfigError("oracle selection needs the ground-truth environment");
      }
      for (int i = 0; i < k; ++i) scores[uz(i)] = policy_value(*truth, library.at(i));
      break;
    }
  }
  return make_report(cfg, cfg.kind, library, std::move(scores), table);
}

PolicyLibrary build_policy_library(const FeasibleMap& feasible, const TwoStagePolicy& behavior,
                                   const RewardModel& model, int max_policies) {
  if (max_policies < 2) throw ConfigError("library cap must allow at least two policies");
  const std::size_t num_contexts = feasible.size();
  const std::size_t k1 = num_contexts == 0 ? 0 : feasible[0].size();
  const std::vector<double> temperatures = {0.1, 0.5, 1.0};

  // Estimated optimal continuation per (context, generator), and the model
  // scores per feasible set, shared by every rule below.
  std::vector<std::vector<double>> m_hat(num_contexts, std::vector<double>(k1, 0.0));
  std::vector<std::vector<std::vector<double>>> q_hat(num_contexts);
  for (std::size_t c = 0; c < num_contexts; ++c) {
    q_hat[c].resize(k1);
    for (std::size_t g = 0; g < k1; ++g) {
      const auto& set = feasible[c][g];
      auto& qs = q_hat[c][g];
      qs.assign(set.size(), 0.0);
      for (std::size_t i = 0; i < set.size(); ++i) {
        qs[i] = reward_fold_mean(model, static_cast<int>(c), static_cast<int>(g), set[i]);
      }
      m_hat[c][g] = qs.empty() ? -1.0 : *std::max_element(qs.begin(), qs.end());
    }
  }

  struct Stage1Rule {
    std::string name;
    std::vector<std::vector<double>> probs;  // [context][generator]
  };
  std::vector<Stage1Rule> stage1_rules;
  for (std::size_t g = 0; g < k1; ++g) {
    Stage1Rule rule;
    rule.name = "det" + std::to_string(g);
    rule.probs.assign(num_contexts, std::vector<double>(k1, 0.0));
    bool usable = true;
    for (std::size_t c = 0; c < num_contexts; ++c) {
      if (feasible[c][g].empty()) {
        usable = false;
        break;
      }
      rule.probs[c][g] = 1.0;
    }
    // A generator with an empty feasible set anywhere cannot carry a
    // deterministic rule; skip it rather than emit an infeasible policy.
    if (usable) stage1_rules.push_back(std::move(rule));
  }
  for (double tau : temperatures) {
    Stage1Rule rule;
    rule.name = "soft" + format_double(tau);
    rule.probs.assign(num_contexts, std::vector<double>(k1, 0.0));
    for (std::size_t c = 0; c < num_contexts; ++c) {
      std::vector<double> scores(k1, 0.0);
      std::vector<std::size_t> live;
      for (std::size_t g = 0; g < k1; ++g) {
        if (!feasible[c][g].empty()) live.push_back(g);
      }
      std::vector<double> live_scores;
      live_scores.reserve(live.size());
      for (std::size_t g : live) live_scores.push_back(m_hat[c][g]);
      const auto soft = softmax(live_scores, tau);
      for (std::size_t j = 0; j < live.size(); ++j) rule.probs[c][live[j]] = soft[j];
    }
    stage1_rules.push_back(std::move(rule));
  }
  {
    Stage1Rule rule;
    rule.name = "mu";
    rule.probs = behavior.stage1;
    stage1_rules.push_back(std::move(rule));
  }

  struct Stage2Rule {
    std::string name;
    double temperature = 0.0;  // 0 = greedy, negative = uniform
  };
  std::vector<Stage2Rule> stage2_rules;
  stage2_rules.push_back({"greedy", 0.0});
  for (double tau : temperatures) stage2_rules.push_back({"soft" + format_double(tau), tau});
  stage2_rules.push_back({"uniform", -1.0});

  auto build_stage2 = [&](const Stage2Rule& rule) {
    std::vector<std::vector<std::vector<double>>> out(num_contexts);
    for (std::size_t c = 0; c < num_contexts; ++c) {
      out[c].resize(k1);
      for (std::size_t g = 0; g < k1; ++g) {
        const auto& qs = q_hat[c][g];
        auto& row = out[c][g];
        row.assign(qs.size(), 0.0);
        if (qs.empty()) continue;
        if (rule.temperature == 0.0) {
          row[argmax_index(qs)] = 1.0;
        } else if (rule.temperature < 0.0) {
          row.assign(qs.size(), 1.0 / static_cast<double>(qs.size()));
        } else {
          row = softmax(qs, rule.temperature);
        }
      }
    }
    return out;
  };

  PolicyLibrary library;
  for (const Stage1Rule& s1 : stage1_rules) {
    for (const Stage2Rule& s2 : stage2_rules) {
      if (static_cast<int>(library.policies.size()) >= max_policies - 1) break;
      TwoStagePolicy pi;
      pi.id = "s1-" + s1.name + "_s2-" + s2.name;
      pi.stage1 = s1.probs;
      pi.stage2 = build_stage2(s2);
      library.policies.push_back(std::move(pi));
    }
  }
  TwoStagePolicy mu = behavior;
  mu.id = "behavior";
  library.policies.push_back(std::move(mu));
  return library;
}

std::vector<LambdaPathRow> lambda_sweep(const PolicyLibrary& library, const LoggedDataset& data,
                                        const RewardModel& reward, const Propensities& prop,
                                        const std::vector<double>& lambdas,
                                        const SelectorConfig& cfg) {
  if (lambdas.empty()) throw ConfigError("lambda grid is empty");
  for (double lam : lambdas) {
    if (lam < 0.0) throw ConfigError("penalty lambda must be nonnegative");
  }
  SelectorConfig local = cfg;
  local.lambda_grid = lambdas;
  const auto table = evaluate_library(library, data, reward, prop, local);
  std::vector<LambdaPathRow> path;
  path.reserve(lambdas.size());
  for (double lam : lambdas) {
    std::vector<double> scores(table.size(), 0.0);
    for (std::size_t i = 0; i < table.size(); ++i) {
      scores[i] = casp_score(table[i].v_dr, table[i].burden, lam);
    }
    const int pick = argmax_with_tiebreak(scores, table);
    LambdaPathRow row;
    row.lambda = lam;
    row.selected_id = table[uz(pick)].policy_id;
    row.dr_value = table[uz(pick)].v_dr;
    row.burden = table[uz(pick)].burden;
    row.ess = table[uz(pick)].ess;
    row.max_weight = table[uz(pick)].max_weight;
    path.push_back(std::move(row));
  }
  return path;
}

StabilityResult replication_stability(const std::vector<std::string>& selected_ids) {
  if (selected_ids.empty()) throw ConfigError("stability needs at least one replication");
  std::map<std::string, int> counts;
  for (const auto& id : selected_ids) counts[id] += 1;
  StabilityResult out;
  out.unique_count = static_cast<int>(counts.size());
  int best = 0;
  for (const auto& [id, count] : counts) {
    if (count > best) {  // map order makes ties resolve to the smaller id
      best = count;
      out.mode_id = id;
    }
  }
  out.mode_frequency = static_cast<double>(best) / static_cast<double>(selected_ids.size());
  return out;
}

}  // namespace casp
