// casp: experiment harness over the support-aware policy-selection library.
// Commands: simulate <block>, app <ml-1m-path>, sweep-lambda, theory-check,
// report <run-dir>...
// Exit codes: 0 success, 2 configuration error, 3 data error, 4 check failure.

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "casp/errors.hpp"
#include "casp/io.hpp"
#include "casp/pipeline.hpp"
#include "casp/theory.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitCheck = 4;

struct HarnessConfig {
  std::string command;
  std::string block = "coupling";
  std::string ml_path;
  std::vector<std::string> report_dirs;

  double lambda = 0.05;
  double beta = 0.50;
  int reps = -1;  // -1: command default (24 simulation, 20 app)
  std::uint64_t seed = 1;
  std::string out;
  std::string burden_mode = "raw_full";
  double floor = -1.0;  // -1: command default (0 simulation, 1e-9 app)
  int l = -1;           // -1: command default (5 simulation, 30 app)
  int threshold = 4;
  std::vector<double> lambda_grid = {0.0, 0.01, 0.02, 0.05, 0.1, 0.2};

  int n = 2400;
  int contexts = 6;
  int k1 = 4;
  int k2 = 20;
  int folds = 5;
  double smoothing = 1.0;
  int max_policies = 40;
  unsigned threads = 0;

  int warm_start = 20;
  int max_contexts = 25000;
  double epsilon = 0.10;
  double tau = 1.00;
  double train_fraction = 0.5;
  double jitter = 0.05;
  bool imputed_labels = false;

  double burden_perturbation = 0.0;
  bool export_data = false;
  bool force = false;
  std::string config_path;
};

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t hash = 1469598103934665603ULL;
  for (unsigned char ch : text) {
    hash ^= ch;
    hash *= 1099511628211ULL;
  }
  return hash;
}

json config_to_json(const HarnessConfig& hc) {
  json j;
  j["command"] = hc.command;
  j["block"] = hc.block;
  j["ml_path"] = hc.ml_path;
  j["lambda"] = hc.lambda;
  j["beta"] = hc.beta;
  j["reps"] = hc.reps;
  j["seed"] = hc.seed;
  j["burden_mode"] = hc.burden_mode;
  j["floor"] = hc.floor;
  j["l"] = hc.l;
  j["threshold"] = hc.threshold;
  j["lambda_grid"] = hc.lambda_grid;
  j["n"] = hc.n;
  j["contexts"] = hc.contexts;
  j["k1"] = hc.k1;
  j["k2"] = hc.k2;
  j["folds"] = hc.folds;
  j["smoothing"] = hc.smoothing;
  j["max_policies"] = hc.max_policies;
  j["threads"] = hc.threads;
  j["warm_start"] = hc.warm_start;
  j["max_contexts"] = hc.max_contexts;
  j["epsilon"] = hc.epsilon;
  j["tau"] = hc.tau;
  j["train_fraction"] = hc.train_fraction;
  j["jitter"] = hc.jitter;
  j["imputed_labels"] = hc.imputed_labels;
  j["burden_perturbation"] = hc.burden_perturbation;
  j["export_data"] = hc.export_data;
  return j;
}

/// Applies the config file with command-line precedence: a key only lands
/// when its flag was not passed on the command line. Unknown keys are
/// rejected outright.
void apply_config_file(HarnessConfig& hc, const CLI::App& cmd) {
  if (hc.config_path.empty()) return;
  json file;
  try {
    file = json::parse(casp::read_text_file(hc.config_path));
  } catch (const json::exception& e) {
    throw casp::ConfigError("config file '" + hc.config_path + "': " + e.what());
  }
  if (!file.is_object()) {
    throw casp::ConfigError("config file '" + hc.config_path + "' must hold one object");
  }

  const std::map<std::string, std::function<void(const json&)>> setters = {
      {"lambda", [&](const json& v) { hc.lambda = v.get<double>(); }},
      {"beta", [&](const json& v) { hc.beta = v.get<double>(); }},
      {"reps", [&](const json& v) { hc.reps = v.get<int>(); }},
      {"seed", [&](const json& v) { hc.seed = v.get<std::uint64_t>(); }},
      {"out", [&](const json& v) { hc.out = v.get<std::string>(); }},
      {"burden_mode", [&](const json& v) { hc.burden_mode = v.get<std::string>(); }},
      {"floor", [&](const json& v) { hc.floor = v.get<double>(); }},
      {"l", [&](const json& v) { hc.l = v.get<int>(); }},
      {"threshold", [&](const json& v) { hc.threshold = v.get<int>(); }},
      {"lambda_grid", [&](const json& v) { hc.lambda_grid = v.get<std::vector<double>>(); }},
      {"n", [&](const json& v) { hc.n = v.get<int>(); }},
      {"contexts", [&](const json& v) { hc.contexts = v.get<int>(); }},
      {"k1", [&](const json& v) { hc.k1 = v.get<int>(); }},
      {"k2", [&](const json& v) { hc.k2 = v.get<int>(); }},
      {"folds", [&](const json& v) { hc.folds = v.get<int>(); }},
      {"smoothing", [&](const json& v) { hc.smoothing = v.get<double>(); }},
      {"max_policies", [&](const json& v) { hc.max_policies = v.get<int>(); }},
      {"threads", [&](const json& v) { hc.threads = v.get<unsigned>(); }},
      {"warm_start", [&](const json& v) { hc.warm_start = v.get<int>(); }},
      {"max_contexts", [&](const json& v) { hc.max_contexts = v.get<int>(); }},
      {"epsilon", [&](const json& v) { hc.epsilon = v.get<double>(); }},
      {"tau", [&](const json& v) { hc.tau = v.get<double>(); }},
      {"train_fraction", [&](const json& v) { hc.train_fraction = v.get<double>(); }},
      {"jitter", [&](const json& v) { hc.jitter = v.get<double>(); }},
      {"imputed_labels", [&](const json& v) { hc.imputed_labels = v.get<bool>(); }},
      {"burden_perturbation",
       [&](const json& v) { hc.burden_perturbation = v.get<double>(); }},
      {"export_data", [&](const json& v) { hc.export_data = v.get<bool>(); }},
      {"block", [&](const json& v) { hc.block = v.get<std::string>(); }},
  };
  const std::map<std::string, std::string> flag_of = {
      {"lambda", "--lambda"},       {"beta", "--beta"},
      {"reps", "--reps"},           {"seed", "--seed"},
      {"out", "--out"},             {"burden_mode", "--burden-mode"},
      {"floor", "--floor"},         {"l", "--l"},
      {"threshold", "--threshold"}, {"lambda_grid", "--lambda-grid"},
      {"n", "--n"},                 {"contexts", "--contexts"},
      {"k1", "--k1"},               {"k2", "--k2"},
      {"folds", "--folds"},         {"smoothing", "--smoothing"},
      {"max_policies", "--max-policies"}, {"threads", "--threads"},
      {"warm_start", "--warm-start"},     {"max_contexts", "--max-contexts"},
      {"epsilon", "--epsilon"},     {"tau", "--tau"},
      {"train_fraction", "--train-fraction"}, {"jitter", "--jitter"},
      {"imputed_labels", "--imputed-labels"},
      {"burden_perturbation", "--burden-perturbation"},
      {"export_data", "--export-data"},   {"block", "--block"},
  };

  for (const auto& [key, value] : file.items()) {
    const auto setter = setters.find(key);
    if (setter == setters.end()) {
      throw casp::ConfigError("config file '" + hc.config_path + "': unknown key '" + key +
                              "'");
    }
    const auto flag = flag_of.find(key);
    if (flag != flag_of.end()) {
      const CLI::Option* opt = cmd.get_option_no_throw(flag->second);
      if (opt != nullptr && opt->count() > 0) continue;  // command line wins
    }
    try {
      setter->second(value);
    } catch (const json::exception& e) {
      throw casp::ConfigError("config file '" + hc.config_path + "', key '" + key +
                              "': " + e.what());
    }
  }
}

fs::path resolve_out_dir(const HarnessConfig& hc, const std::string& stem) {
  if (!hc.out.empty()) return fs::path(hc.out);
  const char* root = std::getenv("CASP_OUT_ROOT");
  const fs::path base = (root != nullptr && *root != '\0') ? fs::path(root) : fs::path("runs");
  return base / (stem + "-seed" + std::to_string(hc.seed));
}

fs::path prepare_out_dir(const HarnessConfig& hc, const std::string& stem) {
  const fs::path dir = resolve_out_dir(hc, stem);
  if (fs::exists(dir / "manifest.json") && !hc.force) {
    throw casp::ConfigError("output directory '" + dir.string() +
                            "' already holds a run; pass --force to overwrite");
  }
  fs::create_directories(dir);
  return dir;
}

void write_manifest(const fs::path& dir, const HarnessConfig& hc,
                    const std::vector<std::string>& files) {
  json manifest;
  const json cfg = config_to_json(hc);
  manifest["artifact_version"] = CASP_VERSION;
  manifest["command"] = hc.command;
  manifest["config"] = cfg;
  manifest["config_hash"] = fnv1a(cfg.dump());
  manifest["seed"] = hc.seed;
  manifest["files"] = files;
  casp::write_text_file((dir / "manifest.json").string(), manifest.dump(2) + "\n");
}

casp::BlockRunConfig block_run_config(const HarnessConfig& hc) {
  casp::BlockRunConfig cfg;
  cfg.block.block = casp::block_from_string(hc.block);
  cfg.block.seed = hc.seed;
  cfg.block.n = hc.n;
  cfg.block.num_contexts = hc.contexts;
  cfg.block.k1 = hc.k1;
  cfg.block.k2 = hc.k2;
  cfg.block.feasible_size = hc.l > 0 ? hc.l : 5;
  cfg.block.replications = hc.reps > 0 ? hc.reps : 24;
  cfg.lambda = hc.lambda;
  cfg.beta = hc.beta;
  cfg.burden_mode = casp::burden_mode_from_string(hc.burden_mode);
  cfg.floor = hc.floor >= 0.0 ? hc.floor : 0.0;
  cfg.lambda_grid = hc.lambda_grid;
  cfg.folds = hc.folds;
  cfg.smoothing = hc.smoothing;
  cfg.max_policies = hc.max_policies;
  cfg.threads = hc.threads;
  return cfg;
}

int cmd_simulate(const HarnessConfig& hc) {
  const casp::BlockRunConfig cfg = block_run_config(hc);
  const fs::path dir = prepare_out_dir(hc, "simulate-" + hc.block);
  const casp::BlockResult result = casp::run_block(cfg);

  const std::vector<std::string> methods = casp::method_names(casp::simulation_selectors());
  std::vector<std::string> files = {"sweep.csv", "frontier.csv", "comparator.csv",
                                    "summary.txt"};
  casp::write_csv((dir / "sweep.csv").string(), casp::sweep_csv_header(methods),
                  casp::sweep_csv_rows(result));
  casp::write_csv((dir / "frontier.csv").string(), casp::frontier_csv_header(methods),
                  {casp::frontier_csv_row(result)});
  casp::write_csv((dir / "comparator.csv").string(), casp::comparator_csv_header(),
                  casp::comparator_csv_rows(result.overall));
  const std::string summary = casp::block_text_summary(result);
  casp::write_text_file((dir / "summary.txt").string(), summary);

  if (hc.export_data) {
    std::vector<std::vector<std::string>> rows;
    for (int p = 0; p < static_cast<int>(result.sweep.size()); ++p) {
      for (int r = 0; r < cfg.block.replications; ++r) {
        const casp::LoggedDataset data = casp::block_rep_dataset(cfg, p, r);
        const auto chunk = casp::dataset_csv_rows(p * cfg.block.replications + r, data);
        rows.insert(rows.end(), chunk.begin(), chunk.end());
      }
    }
    casp::write_csv((dir / "data.csv").string(), casp::dataset_csv_header(), rows);
    files.push_back("data.csv");
  }
  write_manifest(dir, hc, files);
  std::cout << summary << "\nwrote " << dir.string() << "\n";
  return kExitOk;
}

int cmd_sweep_lambda(const HarnessConfig& hc) {
  const casp::BlockRunConfig cfg = block_run_config(hc);
  const fs::path dir = prepare_out_dir(hc, "sweep-lambda-" + hc.block);
  const std::vector<casp::LambdaPathRow> path = casp::run_lambda_sweep(cfg);
  casp::write_csv((dir / "lambda_path.csv").string(), casp::lambda_path_csv_header(),
                  casp::lambda_path_csv_rows(path));
  std::string summary = "lambda path (" + hc.block + ", " +
                        std::to_string(cfg.block.replications) + " replications)\n";
  for (const casp::LambdaPathRow& row : path) {
    summary += "  lambda=" + casp::format_double(row.lambda) + " -> " + row.selected_id +
               " (dr=" + casp::format_double(row.dr_value) +
               ", burden=" + casp::format_double(row.burden) +
               ", mode_freq=" + casp::format_double(row.mode_frequency) + ")\n";
  }
  casp::write_text_file((dir / "summary.txt").string(), summary);
  write_manifest(dir, hc, {"lambda_path.csv", "summary.txt"});
  std::cout << summary << "\nwrote " << dir.string() << "\n";
  return kExitOk;
}

int cmd_app(const HarnessConfig& hc) {
  if (hc.ml_path.empty()) throw casp::ConfigError("app needs the ml-1m directory path");
  casp::AppRunConfig cfg;
  cfg.app.seed = hc.seed;
  cfg.app.warm_start = hc.warm_start;
  cfg.app.max_contexts = hc.max_contexts;
  cfg.app.rating_threshold = hc.threshold;
  cfg.app.top_l = hc.l > 0 ? hc.l : 30;
  cfg.app.epsilon = hc.epsilon;
  cfg.app.tau = hc.tau;
  cfg.app.imputed_labels = hc.imputed_labels;
  cfg.lambda = hc.lambda;
  cfg.beta = hc.beta;
  cfg.burden_mode = casp::burden_mode_from_string(hc.burden_mode);
  cfg.floor = hc.floor >= 0.0 ? hc.floor : 1e-9;
  cfg.lambda_grid = hc.lambda_grid;
  cfg.replications = hc.reps > 0 ? hc.reps : 20;
  cfg.train_fraction = hc.train_fraction;
  cfg.jitter = hc.jitter;
  cfg.folds = hc.folds;
  cfg.smoothing = hc.smoothing;
  cfg.max_policies = hc.max_policies;
  cfg.threads = hc.threads;

  const fs::path dir = prepare_out_dir(hc, "app");
  const casp::MlTables tables = casp::ingest(hc.ml_path);
  const casp::AppResult result = casp::run_app(tables, cfg);

  casp::write_csv((dir / "pool.csv").string(), casp::pool_csv_header(), result.pool_rows);
  casp::write_csv((dir / "support_map.csv").string(), casp::support_csv_header(),
                  result.support_rows);
  casp::write_csv((dir / "comparator.csv").string(), casp::app_comparator_csv_header(),
                  casp::app_comparator_csv_rows(result));
  casp::write_csv((dir / "lambda_path.csv").string(), casp::lambda_path_csv_header(),
                  casp::lambda_path_csv_rows(result.lambda_path));
  casp::write_csv((dir / "generator_delta.csv").string(), casp::generator_delta_csv_header(),
                  casp::generator_delta_csv_rows(result));
  casp::write_csv((dir / "diagnostics.csv").string(), casp::diagnostics_csv_header(),
                  {casp::diagnostics_csv_row(result.diagnostics)});
  const std::string summary = casp::app_text_summary(result);
  casp::write_text_file((dir / "summary.txt").string(), summary);
  write_manifest(dir, hc,
                 {"pool.csv", "support_map.csv", "comparator.csv", "lambda_path.csv",
                  "generator_delta.csv", "diagnostics.csv", "summary.txt"});
  std::cout << summary << "\nwrote " << dir.string() << "\n";
  return kExitOk;
}

int cmd_theory_check(const HarnessConfig& hc) {
  casp::TheoryConfig cfg;
  cfg.seed = hc.seed;
  cfg.threads = hc.threads;
  cfg.burden_perturbation = hc.burden_perturbation;
  if (hc.reps > 0) {
    // --reps scales every Monte Carlo size; unset keeps the full-scale runs.
    cfg.coverage_reps = hc.reps;
    cfg.unbiasedness_resamples = std::max(50, hc.reps);
    cfg.unbiasedness_pairs = std::min(cfg.unbiasedness_pairs, std::max(2, hc.reps));
    cfg.guarantee_triples = std::min(cfg.guarantee_triples, std::max(20, hc.reps));
    cfg.identity_envs = std::min(cfg.identity_envs, std::max(5, hc.reps));
    cfg.gap_envs = std::min(cfg.gap_envs, std::max(1, hc.reps));
  }
  const fs::path dir = prepare_out_dir(hc, "theory-check");
  const std::vector<casp::CheckResult> checks = casp::run_theory_checks(cfg);

  std::vector<std::vector<std::string>> rows;
  bool all_pass = true;
  for (const casp::CheckResult& check : checks) {
    all_pass = all_pass && check.pass;
    rows.push_back({check.name, check.pass ? "PASS" : "FAIL",
                    casp::format_double(check.statistic), casp::format_double(check.threshold),
                    check.detail});
    std::cout << check.name << "\t" << (check.pass ? "PASS" : "FAIL")
              << "\tstatistic=" << casp::format_double(check.statistic)
              << "\tthreshold=" << casp::format_double(check.threshold) << "\t" << check.detail
              << "\n";
  }
  casp::write_csv((dir / "checks.csv").string(),
                  {"check", "status", "statistic", "threshold", "detail"}, rows);
  write_manifest(dir, hc, {"checks.csv"});
  std::cout << (all_pass ? "all checks passed" : "CHECK FAILURE") << "\nwrote " << dir.string()
            << "\n";
  return all_pass ? kExitOk : kExitCheck;
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(field);
      field.clear();
    } else {
      field += ch;
    }
  }
  fields.push_back(field);
  return fields;
}

int cmd_report(const HarnessConfig& hc) {
  if (hc.report_dirs.empty()) {
    throw casp::ConfigError("report needs at least one run directory");
  }
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  for (const std::string& run : hc.report_dirs) {
    const fs::path file = fs::path(run) / "frontier.csv";
    if (!fs::exists(file)) {
      throw casp::DataError("no frontier.csv under '" + run + "'");
    }
    const std::string text = casp::read_text_file(file.string());
    std::vector<std::string> lines;
    std::string line;
    for (char ch : text) {
      if (ch == '\n') {
        lines.push_back(line);
        line.clear();
      } else {
        line += ch;
      }
    }
    if (!line.empty()) lines.push_back(line);
    if (lines.size() < 2) throw casp::DataError("'" + file.string() + "' holds no rows");
    const std::vector<std::string> this_header = split_line(lines[0]);
    if (header.empty()) {
      header = this_header;
    } else if (header != this_header) {
      throw casp::DataError("'" + file.string() + "' header differs from the first run's");
    }
    for (std::size_t i = 1; i < lines.size(); ++i) rows.push_back(split_line(lines[i]));
  }
  std::sort(rows.begin(), rows.end(),
            [](const auto& a, const auto& b) { return a[0] < b[0]; });

  const fs::path dir = prepare_out_dir(hc, "report");
  casp::write_csv((dir / "frontier.csv").string(), header, rows);

  // Cross-block averages over every block except the counterexample (B1).
  const std::size_t method_cols = (header.size() - 1) / 3;
  std::vector<std::vector<std::string>> averages;
  std::string text = "cross-block averages (B1 excluded)\n";
  for (std::size_t m = 0; m < method_cols; ++m) {
    const std::string name = header[1 + 3 * m].substr(0, header[1 + 3 * m].size() - 6);
    double value = 0.0, burden = 0.0, stability = 0.0;
    int counted = 0;
    for (const auto& row : rows) {
      if (row[0] == "B1") continue;
      value += std::stod(row[1 + 3 * m]);
      burden += std::stod(row[2 + 3 * m]);
      stability += std::stod(row[3 + 3 * m]);
      ++counted;
    }
    if (counted > 0) {
      value /= counted;
      burden /= counted;
      stability /= counted;
    }
    averages.push_back({name, casp::format_double(value), casp::format_double(burden),
                        casp::format_double(stability)});
    text += "  " + name + ": value=" + casp::format_double(value) +
            " burden=" + casp::format_double(burden) +
            " stability=" + casp::format_double(stability) + "\n";
  }
  casp::write_csv((dir / "cross_block.csv").string(),
                  {"selector", "value", "burden", "stability"}, averages);
  casp::write_text_file((dir / "report.txt").string(), text);
  write_manifest(dir, hc, {"frontier.csv", "cross_block.csv", "report.txt"});
  std::cout << text << "\nwrote " << dir.string() << "\n";
  return kExitOk;
}

void add_common_flags(CLI::App* cmd, HarnessConfig& hc) {
  cmd->add_option("--lambda", hc.lambda, "Support penalty for the penalized selector");
  cmd->add_option("--beta", hc.beta, "Lower-confidence multiplier for the LCB selector");
  cmd->add_option("--reps", hc.reps, "Replications");
  cmd->add_option("--seed", hc.seed, "Master seed");
  cmd->add_option("--out", hc.out, "Output directory (default $CASP_OUT_ROOT/<run>)");
  cmd->add_option("--burden-mode", hc.burden_mode,
                  "raw_full | stage1_only | stage2_only | normalized_full");
  cmd->add_option("--floor", hc.floor, "Propensity floor (0 simulation, 1e-9 app)");
  cmd->add_option("--l", hc.l, "Feasible-set size (5 simulation, 30 app)");
  cmd->add_option("--threshold", hc.threshold, "Positive-label rating threshold");
  cmd->add_option("--lambda-grid", hc.lambda_grid, "Penalty grid for lambda paths");
  cmd->add_option("--folds", hc.folds, "Cross-fitting folds");
  cmd->add_option("--smoothing", hc.smoothing, "Reward-model smoothing");
  cmd->add_option("--max-policies", hc.max_policies, "Candidate-library cap");
  cmd->add_option("--threads", hc.threads, "Worker threads (0 = hardware)");
  cmd->add_option("--config", hc.config_path, "Config file (JSON; command line wins)");
  cmd->add_flag("--force", hc.force, "Overwrite an existing run directory");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"support-aware off-policy selection harness"};
  app.require_subcommand(1);
  HarnessConfig hc;

  CLI::App* simulate = app.add_subcommand("simulate", "Run one simulation block");
  simulate->add_option("block", hc.block,
                       "counterexample | coupling | support_stress | large_action | sample_size")
      ->required();
  add_common_flags(simulate, hc);
  simulate->add_option("--n", hc.n, "Log size per replication");
  simulate->add_option("--contexts", hc.contexts, "Context count");
  simulate->add_option("--k1", hc.k1, "Generator count");
  simulate->add_option("--k2", hc.k2, "Item count");
  simulate->add_flag("--export-data", hc.export_data, "Also write every replication's log");

  CLI::App* sweep = app.add_subcommand("sweep-lambda", "Replicated value-burden path");
  add_common_flags(sweep, hc);
  sweep->add_option("--block", hc.block, "Block whose default environment to use");
  sweep->add_option("--n", hc.n, "Log size per replication");
  sweep->add_option("--contexts", hc.contexts, "Context count");
  sweep->add_option("--k1", hc.k1, "Generator count");
  sweep->add_option("--k2", hc.k2, "Item count");

  CLI::App* ml = app.add_subcommand("app", "Reconstructed recommender application");
  ml->add_option("path", hc.ml_path, "ml-1m directory with ratings/movies/users .dat")
      ->required();
  add_common_flags(ml, hc);
  ml->add_option("--warm-start", hc.warm_start, "Prefix ratings before a user contributes");
  ml->add_option("--max-contexts", hc.max_contexts, "Eligible-context cap");
  ml->add_option("--epsilon", hc.epsilon, "Stage-1 uniform mixing");
  ml->add_option("--tau", hc.tau, "Softmax temperature");
  ml->add_option("--train-fraction", hc.train_fraction, "Temporal split point");
  ml->add_option("--jitter", hc.jitter, "Split jitter half-width");
  ml->add_flag("--imputed-labels", hc.imputed_labels,
               "Accept every draw and impute labels from the prefix");

  CLI::App* theory = app.add_subcommand("theory-check", "Run the guarantee check suites");
  add_common_flags(theory, hc);
  theory->add_option("--burden-perturbation", hc.burden_perturbation,
                     "Testing hook: bias added inside the second-moment check");

  CLI::App* report = app.add_subcommand("report", "Merge block runs into one frontier");
  report->add_option("runs", hc.report_dirs, "Run directories holding frontier.csv")
      ->required();
  add_common_flags(report, hc);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    CLI::App* active = app.get_subcommands().front();
    hc.command = active->get_name();
    apply_config_file(hc, *active);
    if (hc.command == "simulate") return cmd_simulate(hc);
    if (hc.command == "sweep-lambda") return cmd_sweep_lambda(hc);
    if (hc.command == "app") return cmd_app(hc);
    if (hc.command == "theory-check") return cmd_theory_check(hc);
    if (hc.command == "report") return cmd_report(hc);
    std::cerr << "unknown command\n";
    return kExitConfig;
  } catch (const casp::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const casp::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const casp::OffSupportError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const casp::FeasibilityError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
