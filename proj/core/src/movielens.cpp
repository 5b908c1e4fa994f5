#include "casp/movielens.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <unordered_set>

#include "casp/errors.hpp"
#include "casp/rng.hpp"
#include "casp/util.hpp"

namespace casp {

namespace {

std::size_t uz(int v) { return static_cast<std::size_t>(v); }

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t pos = 0;
  while (true) {
    const std::size_t next = line.find("::", pos);
    if (next == std::string::npos) {
      fields.push_back(line.substr(pos));
      break;
    }
    fields.push_back(line.substr(pos, next - pos));
    pos = next + 2;
  }
  return fields;
}

long long parse_int(const std::string& raw, const std::string& file, int line_no) {
  if (raw.empty()) throw DataError(file + " line " + std::to_string(line_no) + ": empty number");
  long long value = 0;
  for (char ch : raw) {
    if (ch < '0' || ch > '9') {
      throw DataError(file + " line " + std::to_string(line_no) + ": bad number '" + raw + "'");
    }
    value = value * 10 + (ch - '0');
  }
  return value;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

/// Candidate with its generator score; feasible sets keep score-rank order.
struct Scored {
  int item = 0;
  double score = 0.0;
};

void rank_descending(std::vector<Scored>& xs) {
  std::sort(xs.begin(), xs.end(), [](const Scored& a, const Scored& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.item < b.item;
  });
}

/// Mean of min-max-normalized scores of one feasible set (1.0 when flat).
double normalized_mean_score(const std::vector<Scored>& set) {
  if (set.empty()) return 0.0;
  double lo = set[0].score;
  double hi = set[0].score;
  for (const Scored& s : set) {
    lo = std::min(lo, s.score);
    hi = std::max(hi, s.score);
  }
  if (hi <= lo) return 1.0;
  KahanSum sum;
  for (const Scored& s : set) sum.add((s.score - lo) / (hi - lo));
  return sum.value() / static_cast<double>(set.size());
}

/// Floored softmax over min-max-normalized set scores; a valid distribution
/// for any nonempty set.
std::vector<double> stage2_distribution(const std::vector<Scored>& set, double tau,
                                        double floor) {
  const std::size_t m = set.size();
  std::vector<double> norm(m, 0.0);
  double lo = set[0].score;
  double hi = set[0].score;
  for (const Scored& s : set) {
    lo = std::min(lo, s.score);
    hi = std::max(hi, s.score);
  }
  if (hi > lo) {
    for (std::size_t i = 0; i < m; ++i) norm[i] = (set[i].score - lo) / (hi - lo);
  }
  std::vector<double> probs = softmax(norm, tau);
  const double mix = 1.0 - static_cast<double>(m) * floor;
  for (double& p : probs) p = mix * p + floor;
  return probs;
}

/// Strict-prefix state updated event by event.
struct PrefixState {
  std::unordered_map<int, std::vector<int>> user_items;           // chronological
  std::unordered_map<int, std::unordered_set<int>> user_seen;
  std::unordered_map<int, std::vector<int>> item_raters;          // chronological
  std::unordered_map<int, int> item_count;
  std::unordered_map<int, int> item_positive;
  std::vector<int> seen_items;                                    // first-rating order
  std::unordered_map<int, std::vector<double>> genre_profile;     // per user
  long long positive_total = 0;
  long long count_total = 0;

  void update(const RatingsEvent& ev, const MoviesTable& movies, int threshold) {
    user_items[ev.user].push_back(ev.movie);
    user_seen[ev.user].insert(ev.movie);
    item_raters[ev.movie].push_back(ev.user);
    auto [it, fresh] = item_count.try_emplace(ev.movie, 0);
    if (fresh) seen_items.push_back(ev.movie);
    it->second += 1;
    if (ev.rating >= threshold) {
      item_positive[ev.movie] += 1;
      ++positive_total;
    }
    ++count_total;
    auto& profile = genre_profile[ev.user];
    if (profile.empty()) profile.assign(movies.genre_names.size(), 0.0);
    const auto idx = movies.index_of.find(ev.movie);
    if (idx != movies.index_of.end()) {
      for (int gid : movies.movies[uz(idx->second)].genre_ids) profile[uz(gid)] += 1.0;
    }
  }
};

struct GeneratorOutput {
  std::vector<Scored> set;  // exposed feasible items, score-rank order
  bool supported = false;
};

}  // namespace

MlTables ingest(const std::string& dir) {
  MlTables tables;
  const std::string ratings_path = dir + "/ratings.dat";
  const std::string movies_path = dir + "/movies.dat";
  const std::string users_path = dir + "/users.dat";

  std::unordered_map<std::string, int> genre_ids;
  {
    const auto lines = read_lines(movies_path);
    int line_no = 0;
    for (const std::string& line : lines) {
      ++line_no;
      if (line.empty()) continue;
      const auto fields = split_fields(line);
      if (fields.size() != 3) {
        throw DataError("movies.dat line " + std::to_string(line_no) +
                        ": expected 3 '::'-delimited fields, got " +
                        std::to_string(fields.size()));
      }
      MovieInfo info;
      info.id = static_cast<int>(parse_int(fields[0], "movies.dat", line_no));
      info.title = fields[1];
      std::size_t pos = 0;
      const std::string& genres = fields[2];
      while (pos <= genres.size()) {
        const std::size_t next = genres.find('|', pos);
        const std::string name =
            genres.substr(pos, next == std::string::npos ? std::string::npos : next - pos);
        if (!name.empty()) {
          auto [it, fresh] =
              genre_ids.try_emplace(name, static_cast<int>(tables.movies.genre_names.size()));
          if (fresh) tables.movies.genre_names.push_back(name);
          info.genre_ids.push_back(it->second);
        }
        if (next == std::string::npos) break;
        pos = next + 1;
      }
      tables.movies.index_of[info.id] = static_cast<int>(tables.movies.movies.size());
      tables.movies.movies.push_back(std::move(info));
    }
  }
  {
    const auto lines = read_lines(users_path);
    int line_no = 0;
    for (const std::string& line : lines) {
      ++line_no;
      if (line.empty()) continue;
      const auto fields = split_fields(line);
      if (fields.size() != 5) {
        throw DataError("users.dat line " + std::to_string(line_no) +
                        ": expected 5 '::'-delimited fields, got " +
                        std::to_string(fields.size()));
      }
      UserInfo info;
      info.id = static_cast<int>(parse_int(fields[0], "users.dat", line_no));
      info.gender = fields[1];
      info.age = static_cast<int>(parse_int(fields[2], "users.dat", line_no));
      info.occupation = static_cast<int>(parse_int(fields[3], "users.dat", line_no));
      info.zip = fields[4];
      tables.users.users.push_back(std::move(info));
    }
  }
  {
    const auto lines = read_lines(ratings_path);
    int line_no = 0;
    for (const std::string& line : lines) {
      ++line_no;
      if (line.empty()) continue;
      const auto fields = split_fields(line);
      if (fields.size() != 4) {
        throw DataError("ratings.dat line " + std::to_string(line_no) +
                        ": expected 4 '::'-delimited fields, got " +
                        std::to_string(fields.size()));
      }
      RatingsEvent ev;
      ev.user = static_cast<int>(parse_int(fields[0], "ratings.dat", line_no));
      ev.movie = static_cast<int>(parse_int(fields[1], "ratings.dat", line_no));
      ev.rating = static_cast<int>(parse_int(fields[2], "ratings.dat", line_no));
      ev.timestamp = parse_int(fields[3], "ratings.dat", line_no);
      if (ev.rating < 1 || ev.rating > 5) {
        throw DataError("ratings.dat line " + std::to_string(line_no) + ": rating " +
                        std::to_string(ev.rating) + " outside 1..5");
      }
      tables.ratings.push_back(ev);
    }
    if (tables.ratings.empty()) throw DataError("ratings.dat holds no events");
  }
  std::sort(tables.ratings.begin(), tables.ratings.end(),
            [](const RatingsEvent& a, const RatingsEvent& b) {
              if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
              if (a.user != b.user) return a.user < b.user;
              return a.movie < b.movie;
            });
  return tables;
}

double positive_rate(const MlTables& tables, int threshold) {
  if (tables.ratings.empty()) return 0.0;
  long long hits = 0;
  for (const RatingsEvent& ev : tables.ratings) {
    if (ev.rating >= threshold) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(tables.ratings.size());
}

ReconstructionResult reconstruct(const MlTables& tables, const AppConfig& cfg) {
  if (cfg.warm_start < 1) throw ConfigError("warm start must be at least 1");
  if (cfg.top_l < 1) throw ConfigError("feasible size must be at least 1");
  if (cfg.epsilon < 0.0 || cfg.epsilon > 1.0) throw ConfigError("epsilon must lie in [0, 1]");
  if (cfg.tau <= 0.0) throw ConfigError("temperature must be positive");
  const int min_fill = cfg.min_fill > 0 ? cfg.min_fill : cfg.top_l;
  if (static_cast<double>(kNumGenerators) * cfg.stage1_floor >= 1.0) {
    throw ConfigError("stage-1 floor too large for four generators");
  }
  if (static_cast<double>(cfg.top_l) * cfg.stage2_floor >= 1.0) {
    throw ConfigError("stage-2 floor too large for the feasible size");
  }

  ReconstructionResult out;
  out.stage1_floor = cfg.stage1_floor;
  out.stage2_floor = cfg.stage2_floor;
  out.data.environment_id = "ml-app";
  out.data.seed = cfg.seed;

  PrefixState prefix;
  const CounterRng log_stream = CounterRng(cfg.seed).substream(kLogStream);

  for (const RatingsEvent& ev : tables.ratings) {
    if (out.proposed >= cfg.max_contexts) break;
    const auto uc = prefix.user_items.find(ev.user);
    const int history = uc == prefix.user_items.end() ? 0 : static_cast<int>(uc->second.size());
    if (history < cfg.warm_start) {
      prefix.update(ev, tables.movies, cfg.rating_threshold);
      continue;
    }
    const int context_ordinal = out.proposed;
    ++out.proposed;

    // Candidate universe: unseen items with at least one strict-prefix rating.
    const auto& seen = prefix.user_seen[ev.user];
    std::vector<Scored> universe;
    universe.reserve(prefix.seen_items.size());
    for (int item : prefix.seen_items) {
      if (seen.count(item)) continue;
      universe.push_back({item, static_cast<double>(prefix.item_count[item])});
    }

    std::vector<GeneratorOutput> gens(kNumGenerators);
    double tail_cut = 0.0;
    if (!universe.empty()) {
      // Popularity: top-L by prefix rating count, singleton fallback.
      {
        std::vector<Scored> pop = universe;
        rank_descending(pop);
        auto& g = gens[0];
        if (static_cast<int>(pop.size()) >= min_fill) {
          pop.resize(uz(std::min<int>(cfg.top_l, static_cast<int>(pop.size()))));
          g.set = std::move(pop);
        } else {
          g.set = {pop[0]};
        }
        g.supported = true;
      }
      // Genre: overlap between item genres and the user's prefix profile.
      std::vector<Scored> genre_scored;
      {
        const auto& profile = prefix.genre_profile[ev.user];
        for (const Scored& cand : universe) {
          const auto idx = tables.movies.index_of.find(cand.item);
          if (idx == tables.movies.index_of.end()) continue;
          double score = 0.0;
          for (int gid : tables.movies.movies[uz(idx->second)].genre_ids) {
            if (uz(gid) < profile.size()) score += profile[uz(gid)];
          }
          if (score > 0.0) genre_scored.push_back({cand.item, score});
        }
        rank_descending(genre_scored);
        auto& g = gens[1];
        g.supported = static_cast<int>(genre_scored.size()) >= min_fill;
        std::vector<Scored> set = genre_scored;
        set.resize(uz(std::min<int>(cfg.top_l, static_cast<int>(set.size()))));
        g.set = std::move(set);
      }
      // Collaborative: cosine co-rating neighbors with genre backoff.
      {
        const auto& items = prefix.user_items[ev.user];
        const std::size_t from =
            items.size() > uz(cfg.recent_prefix) ? items.size() - uz(cfg.recent_prefix) : 0;
        std::unordered_map<int, int> co_count;
        for (std::size_t i = from; i < items.size(); ++i) {
          const auto& raters = prefix.item_raters[items[i]];
          const std::size_t cap = std::min(raters.size(), uz(cfg.rater_cap));
          for (std::size_t r = 0; r < cap; ++r) {
            if (raters[r] != ev.user) co_count[raters[r]] += 1;
          }
        }
        std::vector<Scored> neighbors;
        const double own = std::sqrt(static_cast<double>(items.size()));
        for (const auto& [other, co] : co_count) {
          const double norm = own * std::sqrt(static_cast<double>(prefix.user_items[other].size()));
          neighbors.push_back({other, static_cast<double>(co) / norm});
        }
        rank_descending(neighbors);
        if (static_cast<int>(neighbors.size()) > cfg.neighbor_cap) {
          neighbors.resize(uz(cfg.neighbor_cap));
        }
        auto& g = gens[2];
        if (static_cast<int>(neighbors.size()) < cfg.neighbor_min) {
          g.set = gens[1].set;  // hierarchical backoff to the genre ranking
          g.supported = gens[1].supported;
        } else {
          std::unordered_map<int, double> score;
          for (const Scored& nb : neighbors) {
            for (int item : prefix.user_items[nb.item]) {
              if (!seen.count(item)) score[item] += nb.score;
            }
          }
          std::vector<Scored> scored;
          scored.reserve(score.size());
          for (const auto& [item, s] : score) scored.push_back({item, s});
          rank_descending(scored);
          g.supported = static_cast<int>(scored.size()) >= min_fill;
          scored.resize(uz(std::min<int>(cfg.top_l, static_cast<int>(scored.size()))));
          g.set = std::move(scored);
        }
      }
      // Long tail: inverse popularity inside the bottom-quantile slice.
      {
        std::vector<double> counts;
        counts.reserve(universe.size());
        for (const Scored& cand : universe) counts.push_back(cand.score);
        std::sort(counts.begin(), counts.end());
        tail_cut = counts[uz(static_cast<int>(
            cfg.tail_quantile * static_cast<double>(counts.size() - 1)))];
        std::vector<Scored> tail;
        for (const Scored& cand : universe) {
          if (cand.score < tail_cut) tail.push_back({cand.item, tail_cut - cand.score});
        }
        rank_descending(tail);
        auto& g = gens[3];
        g.supported = static_cast<int>(tail.size()) >= min_fill;
        tail.resize(uz(std::min<int>(cfg.top_l, static_cast<int>(tail.size()))));
        g.set = std::move(tail);
      }
    }

    if (cfg.keep_proposed) {
      ProposedContext audit;
      audit.timestamp = ev.timestamp;
      audit.feasible.resize(kNumGenerators);
      for (int g = 0; g < kNumGenerators; ++g) {
        for (const Scored& s : gens[uz(g)].set) audit.feasible[uz(g)].push_back(s.item);
      }
      out.proposed_audit.push_back(std::move(audit));
    }

    std::vector<int> supported;
    for (int g = 0; g < kNumGenerators; ++g) {
      if (gens[uz(g)].supported && !gens[uz(g)].set.empty()) supported.push_back(g);
    }
    if (supported.empty()) {
      ++out.dropped_no_generator;
      prefix.update(ev, tables.movies, cfg.rating_threshold);
      continue;
    }

    // Engineered stage-1: epsilon-mixed softmax of the mean normalized
    // top-L scores over supported generators, floored.
    std::vector<double> s_scores;
    s_scores.reserve(supported.size());
    for (int g : supported) s_scores.push_back(normalized_mean_score(gens[uz(g)].set));
    std::vector<double> soft = softmax(s_scores, cfg.tau);
    const double unif = 1.0 / static_cast<double>(supported.size());
    const double mix = 1.0 - static_cast<double>(supported.size()) * cfg.stage1_floor;
    std::vector<double> mu1(kNumGenerators, 0.0);
    for (std::size_t j = 0; j < supported.size(); ++j) {
      const double blended = (1.0 - cfg.epsilon) * soft[j] + cfg.epsilon * unif;
      mu1[uz(supported[j])] = mix * blended + cfg.stage1_floor;
    }

    std::vector<std::vector<double>> mu2(kNumGenerators);
    for (int g = 0; g < kNumGenerators; ++g) {
      if (!gens[uz(g)].set.empty()) {
        mu2[uz(g)] = stage2_distribution(gens[uz(g)].set, cfg.tau, cfg.stage2_floor);
      }
    }

    CounterRng rng = log_stream.substream(static_cast<std::uint64_t>(context_ordinal));
    const int a1 = rng.discrete(mu1);
    const double label = ev.rating >= cfg.rating_threshold ? 1.0 : 0.0;

    int chosen_index = -1;
    double y = label;
    if (cfg.imputed_labels) {
      chosen_index = rng.discrete(mu2[uz(a1)]);
      const int sampled = gens[uz(a1)].set[uz(chosen_index)].item;
      if (sampled != ev.movie) {
        const auto pc = prefix.item_count.find(sampled);
        double rate = prefix.count_total > 0 ? static_cast<double>(prefix.positive_total) /
                                                   static_cast<double>(prefix.count_total)
                                             : 0.0;
        if (pc != prefix.item_count.end() && pc->second > 0) {
          rate = static_cast<double>(prefix.item_positive[sampled]) /
                 static_cast<double>(pc->second);
        }
        y = rng.bernoulli(rate) ? 1.0 : 0.0;
      }
    } else {
      int rated_index = -1;
      const auto& set = gens[uz(a1)].set;
      for (std::size_t i = 0; i < set.size(); ++i) {
        if (set[i].item == ev.movie) {
          rated_index = static_cast<int>(i);
          break;
        }
      }
      if (rated_index < 0) {
        ++out.rejected_rated_outside;
        prefix.update(ev, tables.movies, cfg.rating_threshold);
        continue;
      }
      chosen_index = rng.discrete(mu2[uz(a1)]);
      if (gens[uz(a1)].set[uz(chosen_index)].item != ev.movie) {
        ++out.rejected_item_mismatch;
        prefix.update(ev, tables.movies, cfg.rating_threshold);
        continue;
      }
      chosen_index = rated_index;
    }

    const int context_id = static_cast<int>(out.contexts.size());
    AppContext ctx;
    ctx.id = context_id;
    ctx.user = ev.user;
    ctx.rated_movie = ev.movie;
    ctx.rating = ev.rating;
    ctx.timestamp = ev.timestamp;
    ctx.label = label;
    out.contexts.push_back(ctx);

    out.support.emplace_back();
    auto& support_row = out.support.back();
    support_row.resize(kNumGenerators);
    std::unordered_set<int> distinct;
    int tail_items = 0;
    for (int g = 0; g < kNumGenerators; ++g) {
      for (const Scored& s : gens[uz(g)].set) {
        support_row[uz(g)].push_back(s.item);
        if (distinct.insert(s.item).second &&
            static_cast<double>(prefix.item_count[s.item]) < tail_cut) {
          ++tail_items;
        }
      }
    }
    out.tail_share.push_back(distinct.empty() ? 0.0
                                              : static_cast<double>(tail_items) /
                                                    static_cast<double>(distinct.size()));
    out.logger.stage1.push_back(std::move(mu1));
    out.logger.stage2.push_back(std::move(mu2));

    LoggedRecord rec;
    rec.context = context_id;
    rec.generator = a1;
    rec.index = chosen_index;
    rec.item = gens[uz(a1)].set[uz(chosen_index)].item;
    rec.y = y;
    rec.mu1 = out.logger.stage1[uz(context_id)][uz(a1)];
    rec.mu2 = out.logger.stage2[uz(context_id)][uz(a1)][uz(chosen_index)];
    out.data.records.push_back(rec);

    prefix.update(ev, tables.movies, cfg.rating_threshold);
  }

  out.logger.id = "reconstructed-logger";
  return out;
}

std::pair<LoggedDataset, LoggedDataset> temporal_split(const ReconstructionResult& rec,
                                                       double train_fraction, double jitter,
                                                       std::uint64_t seed) {
  if (train_fraction <= 0.0 || train_fraction >= 1.0) {
    throw ConfigError("train fraction must lie strictly inside (0, 1)");
  }
  const int m = static_cast<int>(rec.contexts.size());
  if (m < 2) throw DataError("temporal split needs at least two accepted contexts");
  CounterRng rng = CounterRng(seed).substream(kSplitStream);
  double q = train_fraction;
  if (jitter > 0.0) q += jitter * (2.0 * rng.next_double() - 1.0);
  q = std::clamp(q, 0.0, 1.0);
  const int idx = static_cast<int>(std::llround(q * static_cast<double>(m - 1)));
  const long long boundary = rec.contexts[uz(idx)].timestamp;

  LoggedDataset train;
  LoggedDataset eval;
  train.environment_id = rec.data.environment_id;
  eval.environment_id = rec.data.environment_id;
  train.seed = seed;
  eval.seed = seed;
  for (const LoggedRecord& record : rec.data.records) {
    if (rec.contexts[uz(record.context)].timestamp <= boundary) {
      train.records.push_back(record);
    } else {
      eval.records.push_back(record);
    }
  }
  if (train.records.empty() || eval.records.empty()) {
    throw DataError("degenerate temporal split: one side is empty");
  }
  return {std::move(train), std::move(eval)};
}

SupportDiagnostics support_diagnostics(const ReconstructionResult& rec) {
  SupportDiagnostics diag;
  const int m = static_cast<int>(rec.contexts.size());
  diag.contexts = m;
  diag.generator_share.assign(kNumGenerators, 0.0);
  diag.zero_support_share.assign(kNumGenerators, 0.0);
  if (m == 0) return diag;

  KahanSum entropy_sum;
  KahanSum support_count_sum;
  KahanSum overlap_sum;
  int overlap_contexts = 0;
  int multi = 0;
  for (int c = 0; c < m; ++c) {
    const auto& mu1 = rec.logger.stage1[uz(c)];
    int supported = 0;
    for (int g = 0; g < kNumGenerators; ++g) {
      diag.generator_share[uz(g)] += mu1[uz(g)];
      if (mu1[uz(g)] == 0.0) {
        diag.zero_support_share[uz(g)] += 1.0;
      } else {
        ++supported;
      }
    }
    if (supported >= 2) ++multi;
    support_count_sum.add(static_cast<double>(supported));
    entropy_sum.add(entropy(mu1));

    KahanSum pair_overlap;
    int pairs = 0;
    for (int g = 0; g < kNumGenerators; ++g) {
      if (mu1[uz(g)] == 0.0) continue;
      const auto& set_g = rec.support[uz(c)][uz(g)];
      const std::unordered_set<int> lookup(set_g.begin(), set_g.end());
      for (int h = g + 1; h < kNumGenerators; ++h) {
        if (mu1[uz(h)] == 0.0) continue;
        const auto& set_h = rec.support[uz(c)][uz(h)];
        int inter = 0;
        for (int item : set_h) inter += lookup.count(item) ? 1 : 0;
        const int uni = static_cast<int>(set_g.size() + set_h.size()) - inter;
        pair_overlap.add(uni > 0 ? static_cast<double>(inter) / static_cast<double>(uni) : 0.0);
        ++pairs;
      }
    }
    if (pairs > 0) {
      overlap_sum.add(pair_overlap.value() / static_cast<double>(pairs));
      ++overlap_contexts;
    }
  }
  const double dm = static_cast<double>(m);
  for (int g = 0; g < kNumGenerators; ++g) {
    diag.generator_share[uz(g)] /= dm;
    diag.zero_support_share[uz(g)] /= dm;
  }
  diag.dominant_share =
      *std::max_element(diag.generator_share.begin(), diag.generator_share.end());
  diag.min_share = *std::min_element(diag.generator_share.begin(), diag.generator_share.end());
  diag.multi_support_share = static_cast<double>(multi) / dm;
  diag.mean_support_count = support_count_sum.value() / dm;
  diag.mean_stage1_entropy = entropy_sum.value() / dm;
  diag.tail_item_share = mean(rec.tail_share);
  diag.mean_pair_overlap =
      overlap_contexts > 0 ? overlap_sum.value() / static_cast<double>(overlap_contexts) : 0.0;
  return diag;
}

}  // namespace casp
