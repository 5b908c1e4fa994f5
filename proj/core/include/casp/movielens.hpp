#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "casp/environment.hpp"
#include "casp/simulate.hpp"

namespace casp {

struct RatingsEvent {
  int user = 0;
  int movie = 0;
  int rating = 0;
  long long timestamp = 0;
};

struct MovieInfo {
  int id = 0;
  std::string title;             // raw bytes, Latin-1 tolerated
  std::vector<int> genre_ids;    // indexes into MoviesTable::genre_names
};

struct MoviesTable {
  std::vector<MovieInfo> movies;
  std::unordered_map<int, int> index_of;  // movie id -> position
  std::vector<std::string> genre_names;
};

struct UserInfo {
  int id = 0;
  std::string gender;
  int age = 0;
  int occupation = 0;
  std::string zip;
};

struct UsersTable {
  std::vector<UserInfo> users;
};

struct MlTables {
  std::vector<RatingsEvent> ratings;  // sorted by (timestamp, user, movie)
  MoviesTable movies;
  UsersTable users;
};

/// Parses ratings.dat / movies.dat / users.dat ('::'-delimited, bytes kept
/// as-is so Latin-1 titles survive). Malformed lines raise DataError naming
/// the file and line number; an empty ratings table is an error. Events are
/// returned in the deterministic total order (timestamp, user, movie).
MlTables ingest(const std::string& dir);

/// Positive-label fraction (rating >= threshold) over all events.
double positive_rate(const MlTables& tables, int threshold = 4);

/// One accepted interaction context.
struct AppContext {
  int id = 0;            // index into the reconstruction's support map
  int user = 0;
  int rated_movie = 0;
  int rating = 0;
  long long timestamp = 0;
  double label = 0.0;    // 1{rating >= threshold} in alignment mode
};

inline constexpr int kNumGenerators = 4;
inline const char* const kGeneratorNames[kNumGenerators] = {"Popularity", "Genre",
                                                            "Collaborative", "LongTail"};

struct AppConfig {
  int warm_start = 20;         // prefix ratings a user needs before contributing
  int max_contexts = 25000;    // eligibility cap (earliest eligible events win)
  int rating_threshold = 4;    // label y = 1{rating >= threshold}
  int top_l = 30;              // feasible-set size
  int min_fill = 0;            // minimum set size for support; 0 means top_l
  double epsilon = 0.10;       // stage-1 uniform mixing
  double tau = 1.00;           // softmax temperature, both stages
  double stage1_floor = 0.01;  // minimum stage-1 mass per supported generator
  double stage2_floor = 1e-3;  // minimum stage-2 mass per feasible item
  bool imputed_labels = false; // accept every draw, impute y off the prefix
  bool keep_proposed = false;  // retain support maps of non-accepted contexts (audits)
  std::uint64_t seed = 1;
  int neighbor_cap = 25;       // collaborative neighbors kept
  int neighbor_min = 5;        // below this, back off to genre scores
  int recent_prefix = 50;      // prefix items used for similarity scans
  int rater_cap = 2000;        // earliest raters per item considered
  double tail_quantile = 0.30; // popularity percentile bounding the tail slice
};

/// Support map for contexts that were proposed but not accepted (prefix
/// audits only).
struct ProposedContext {
  long long timestamp = 0;
  std::vector<std::vector<int>> feasible;  // per generator
};

struct ReconstructionResult {
  LoggedDataset data;       // accepted pool; context ids index the fields below
  FeasibleMap support;      // per accepted context, 4 generators (possibly empty)
  TwoStagePolicy logger;    // engineered stage-1/stage-2 tables, zeros off support
  std::vector<AppContext> contexts;
  std::vector<double> tail_share;  // per context: tail fraction of distinct feasible items
  double stage1_floor = 0.0;
  double stage2_floor = 0.0;
  int proposed = 0;            // eligible contexts considered
  int dropped_no_generator = 0;
  int rejected_rated_outside = 0;  // rated item absent from the sampled generator's set
  int rejected_item_mismatch = 0;  // sampled item differed from the rated item
  std::vector<ProposedContext> proposed_audit;  // filled when keep_proposed
};

/// Chronological single-pass reconstruction: builds each eligible context
/// from strict-prefix state only, scores the four generators, samples the
/// engineered logger, and (in the default alignment mode) keeps the draw only
/// when it reproduces the rated item. Stored propensities are the closed-form
/// logger values.
ReconstructionResult reconstruct(const MlTables& tables, const AppConfig& cfg);

/// Temporal holdout on the accepted pool: train strictly precedes eval by
/// timestamp. The boundary sits at the train_fraction quantile, shifted by a
/// seeded jitter of up to +/- jitter, then advanced to a strict timestamp
/// change. Degenerate splits raise DataError.
std::pair<LoggedDataset, LoggedDataset> temporal_split(const ReconstructionResult& rec,
                                                       double train_fraction, double jitter,
                                                       std::uint64_t seed);

struct SupportDiagnostics {
  std::vector<double> generator_share;      // mean stage-1 propensity per generator
  double dominant_share = 0.0;              // max of generator_share
  double min_share = 0.0;                   // min of generator_share
  double multi_support_share = 0.0;         // contexts with >= 2 supported generators
  double mean_support_count = 0.0;
  double mean_stage1_entropy = 0.0;         // nats
  std::vector<double> zero_support_share;   // per generator
  double tail_item_share = 0.0;
  double mean_pair_overlap = 0.0;           // Jaccard over supported generator pairs
  int contexts = 0;
};

SupportDiagnostics support_diagnostics(const ReconstructionResult& rec);

}  // namespace casp
