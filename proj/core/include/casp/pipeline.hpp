#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "casp/movielens.hpp"
#include "casp/select.hpp"
#include "casp/simulate.hpp"

namespace casp {

/// Comparator lineup for simulation blocks; oracle is the skyline.
const std::vector<SelectorKind>& simulation_selectors();

/// Application lineup: no oracle, since the application has no ground truth.
const std::vector<SelectorKind>& app_selectors();

/// Per-selector aggregate over replications. Simulation fills the true-value
/// fields from the enumerable environment; the application leaves them zero
/// and reports estimates only.
struct MethodAggregate {
  std::string selector;
  double mean_value = 0.0;        // exact V of the selected policy
  double mean_regret = 0.0;       // vs the best exact V in the library
  double mean_true_burden = 0.0;  // exact burden of the selected policy
  double mean_dr_value = 0.0;
  double mean_burden = 0.0;       // estimated
  double mean_ess = 0.0;
  double mean_max_weight = 0.0;
  double mean_off_support = 0.0;
  StabilityResult stability;
  std::vector<std::string> selected_ids;  // per replication
};

struct SweepPointResult {
  double sweep_value = 0.0;
  std::vector<MethodAggregate> methods;  // simulation_selectors() order
};

struct BlockRunConfig {
  BlockConfig block;  // sweep grid, replications, n, and seed live here
  double lambda = 0.05;
  double beta = 0.50;
  BurdenMode burden_mode = BurdenMode::raw_full;
  double floor = 0.0;
  std::vector<double> lambda_grid = {0.0, 0.01, 0.02, 0.05, 0.1, 0.2};
  int folds = 5;
  double smoothing = 1.0;
  int max_policies = 40;
  unsigned threads = 0;
};

struct BlockResult {
  Block block = Block::coupling;
  std::string block_label;  // B1..B5
  std::vector<double> sweep;
  std::vector<SweepPointResult> points;
  std::vector<MethodAggregate> overall;  // pooled over every (point, replication)
};

/// One block end to end: sweep x replications on a bounded worker pool, one
/// candidate library and estimate table per replication (train half fits the
/// library, selection half is cross-fitted), every selector scored against
/// the shared table, deterministic single-threaded reduction.
BlockResult run_block(const BlockRunConfig& cfg);

/// Replicated lambda path on the default environment of a block config:
/// per-replication lambda_sweep aggregated into modal selections.
std::vector<LambdaPathRow> run_lambda_sweep(const BlockRunConfig& cfg);

/// Seed used for one (sweep point, replication) cell of run_block; the
/// dataset exporter reuses it so exported logs are the logs the block
/// actually consumed.
std::uint64_t block_rep_seed(const BlockRunConfig& cfg, int point, int rep);

/// Regenerates one replication's environment and logged dataset.
LoggedDataset block_rep_dataset(const BlockRunConfig& cfg, int point, int rep);

/// Collapses per-replication paths: per grid point, modal selected id, its
/// frequency, and mean value/burden/weight diagnostics.
std::vector<LambdaPathRow> aggregate_lambda_paths(
    const std::vector<std::vector<LambdaPathRow>>& per_rep);

// CSV shapes; headers are pinned by golden-file tests.
std::vector<std::string> sweep_csv_header(const std::vector<std::string>& methods);
std::vector<std::vector<std::string>> sweep_csv_rows(const BlockResult& result);
std::vector<std::string> frontier_csv_header(const std::vector<std::string>& methods);
std::vector<std::string> frontier_csv_row(const BlockResult& result);
std::vector<std::string> comparator_csv_header();
std::vector<std::vector<std::string>> comparator_csv_rows(
    const std::vector<MethodAggregate>& methods);
std::vector<std::string> lambda_path_csv_header();
std::vector<std::vector<std::string>> lambda_path_csv_rows(
    const std::vector<LambdaPathRow>& path);
std::vector<std::string> dataset_csv_header();
std::vector<std::vector<std::string>> dataset_csv_rows(int rep, const LoggedDataset& data);
std::string block_text_summary(const BlockResult& result);

std::vector<std::string> method_names(const std::vector<SelectorKind>& kinds);

struct AppRunConfig {
  AppConfig app;
  double lambda = 0.05;
  double beta = 0.50;
  BurdenMode burden_mode = BurdenMode::raw_full;
  double floor = 1e-9;  // estimation floor over the reconstructed support map
  std::vector<double> lambda_grid = {0.0, 0.01, 0.02, 0.05, 0.1, 0.2};
  int replications = 20;
  double train_fraction = 0.5;
  double jitter = 0.05;
  int folds = 5;
  double smoothing = 1.0;
  int max_policies = 40;
  unsigned threads = 0;
};

struct GeneratorDeltaRow {
  std::string generator;
  double behavior_share = 0.0;
  double selected_share = 0.0;  // penalized selection, averaged over replications
  double delta = 0.0;
};

struct AppResult {
  SupportDiagnostics diagnostics;
  int accepted = 0;
  int proposed = 0;
  int dropped_no_generator = 0;
  int rejected_rated_outside = 0;
  int rejected_item_mismatch = 0;
  double positive_share = 0.0;  // accepted-pool label mean
  std::vector<MethodAggregate> comparator;  // app_selectors() order, then behavior
  std::vector<LambdaPathRow> lambda_path;
  std::vector<GeneratorDeltaRow> policy_delta;
  std::vector<std::vector<std::string>> pool_rows;     // context_id, a1, a2, y, mu1, mu2
  std::vector<std::vector<std::string>> support_rows;  // context_id, generator, mu1, items
};

/// Reconstruction, temporal replications, comparator, lambda path, and the
/// generator-share delta table, all from one ingested table set.
AppResult run_app(const MlTables& tables, const AppRunConfig& cfg);

std::vector<std::string> pool_csv_header();
std::vector<std::string> support_csv_header();
std::vector<std::string> app_comparator_csv_header();
std::vector<std::vector<std::string>> app_comparator_csv_rows(const AppResult& result);
std::vector<std::string> generator_delta_csv_header();
std::vector<std::vector<std::string>> generator_delta_csv_rows(const AppResult& result);
std::vector<std::string> diagnostics_csv_header();
std::vector<std::string> diagnostics_csv_row(const SupportDiagnostics& diag);
std::string app_text_summary(const AppResult& result);

std::string block_label(Block block);

}  // namespace casp
