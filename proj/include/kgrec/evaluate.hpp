// Copyright 2026 The kgrec Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
// Cross-validated top-N evaluation at the user level.
//
// Protocol, per fold:
//   * training data = ratings of the other folds plus opinions, minus every
//     record whose (user, item) pair appears in the test fold;
//   * each user with a test rating ranks exactly their test-fold items;
//   * relevant = test items rated above the relevance threshold;
//   * metrics are averaged over users, then over folds.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "kgrec/als.hpp"
#include "kgrec/corpus.hpp"
#include "kgrec/embed.hpp"
#include "kgrec/kgraph.hpp"
#include "kgrec/metrics.hpp"
#include "kgrec/recsys.hpp"

namespace kgrec {

// fold_of[i] is the fold of ratings[i].
struct FoldSplit {
  std::size_t folds = 0;
  std::vector<std::size_t> fold_of;

  std::vector<std::size_t> fold_sizes() const {
    std::vector<std::size_t> sizes(folds, 0);
    for (std::size_t f : fold_of) ++sizes[f];
    return sizes;
  }
};

inline std::uint64_t mix_seed(std::uint64_t x) {
  // splitmix64 finaliser
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0) {
  return mix_seed(mix_seed(mix_seed(base) ^ a) ^ b);
}

// Each user's records are shuffled, then dealt round-robin starting at
// fold 0, so per-user fold sizes differ by at most one.
inline FoldSplit kfold_split(const std::vector<RatingRecord>& ratings, std::size_t k,
                             std::uint64_t seed) {
  if (k < 2) throw std::invalid_argument("need at least 2 folds");
  std::vector<std::string_view> user_order;
  std::unordered_map<std::string_view, std::vector<std::size_t>> by_user;
  for (std::size_t i = 0; i < ratings.size(); ++i) {
    auto [it, inserted] = by_user.try_emplace(ratings[i].user_key);
    if (inserted) user_order.push_back(ratings[i].user_key);
    it->second.push_back(i);
  }
  FoldSplit split{k, std::vector<std::size_t>(ratings.size(), 0)};
  std::mt19937_64 rng(seed);
  for (const auto& user : user_order) {
    auto& records = by_user[user];
    std::shuffle(records.begin(), records.end(), rng);
    for (std::size_t pos = 0; pos < records.size(); ++pos) {
      split.fold_of[records[pos]] = pos % k;
    }
  }
  return split;
}

enum class Metric : std::uint8_t { Precision, Recall, F1, NDCG };
inline constexpr std::array<Metric, 4> kAllMetrics = {Metric::Precision, Metric::Recall,
                                                      Metric::F1, Metric::NDCG};

constexpr std::string_view metric_token(Metric m) {
  switch (m) {
    case Metric::Precision:
      return "precision";
    case Metric::Recall:
      return "recall";
    case Metric::F1:
      return "f1";
    case Metric::NDCG:
      return "ndcg";
  }
  return "";
}

enum class SampleSource : std::uint8_t { Folds, Users };

// Users and items of the whole corpus; ids are stable across folds and
// serve as the tie-break order for every model.
struct Catalog {
  EntityIndex index;

  static Catalog from(const std::vector<RatingRecord>& ratings,
                      const std::vector<AspectOpinion>& opinions) {
    Catalog c;
    for (const auto& r : ratings) {
      c.index.intern(EntityKind::User, r.user_key);
      c.index.intern(EntityKind::Item, r.item_key);
    }
    for (const auto& o : opinions) {
      c.index.intern(EntityKind::User, o.user_key);
      c.index.intern(EntityKind::Item, o.item_key);
    }
    return c;
  }

  std::int32_t user(std::string_view key) const {
    return index.find(EntityKind::User, key).value().id;
  }
  std::int32_t item(std::string_view key) const {
    return index.find(EntityKind::Item, key).value().id;
  }
  const std::string& user_key(std::int32_t id) const { return index.key({EntityKind::User, id}); }
  const std::string& item_key(std::int32_t id) const { return index.key({EntityKind::Item, id}); }
};

struct EvalConfig {
  std::size_t folds = 5;
  std::vector<std::size_t> ks{10, 20, 30};
  std::uint64_t seed = 0;
  double relevance_threshold = 3.0;  // relevant iff rating > threshold
  double alpha = 0.05;
  SampleSource samples = SampleSource::Folds;
  std::size_t workers = 1;  // folds evaluated concurrently
  TrainConfig train;
  AlsConfig als;
};

struct FoldContext {
  std::size_t fold = 0;
  std::uint64_t seed = 0;
  const Catalog& catalog;
  const std::vector<RatingRecord>& train_ratings;
  const std::vector<AspectOpinion>& train_opinions;
  const EvalConfig& config;
};

// Orders a user's candidate items (catalog ids), best first.
using Ranker = std::function<std::vector<std::int32_t>(std::int32_t user,
                                                       std::span<const std::int32_t> candidates)>;

struct ModelSpec {
  std::string name;
  std::function<Ranker(const FoldContext&)> fit;
};

// Candidates the table knows are ranked by cosine; unknown items follow in
// catalog order. Unknown users get catalog order.
inline Ranker embedding_ranker(std::shared_ptr<const EmbeddingTable> table,
                               const Catalog& catalog) {
  return [table, &catalog](std::int32_t user, std::span<const std::int32_t> candidates) {
    std::vector<std::int32_t> known, unknown, table_ids;
    const auto u = table->find(EntityKind::User, catalog.user_key(user));
    for (std::int32_t c : candidates) {
      const auto node = table->find(EntityKind::Item, catalog.item_key(c));
      if (u && node) {
        table_ids.push_back(node->id);
        known.push_back(c);
      } else {
        unknown.push_back(c);
      }
    }
    std::vector<std::int32_t> out;
    if (!table_ids.empty()) {
      std::unordered_map<std::int32_t, std::int32_t> back;
      for (std::size_t i = 0; i < known.size(); ++i) back[table_ids[i]] = known[i];
      const auto list = recommend_embedding(*table, u->id, table_ids, table_ids.size());
      for (const auto& e : list.entries) out.push_back(back.at(e.id));
    }
    std::sort(unknown.begin(), unknown.end());
    out.insert(out.end(), unknown.begin(), unknown.end());
    return out;
  };
}

inline ModelSpec graph_model(GraphVariant variant) {
  return {std::string(variant_token(variant)), [variant](const FoldContext& ctx) {
            const KnowledgeGraph graph =
                build_graph(ctx.train_ratings, ctx.train_opinions, variant);
            TrainConfig cfg = ctx.config.train;
            cfg.seed = ctx.seed;
            auto table = std::make_shared<const EmbeddingTable>(train(graph, cfg).table);
            return embedding_ranker(std::move(table), ctx.catalog);
          }};
}

inline ModelSpec pop_model() {
  return {"pop", [](const FoldContext& ctx) {
            auto counts = std::make_shared<std::vector<std::size_t>>(
                ctx.catalog.index.count(EntityKind::Item), 0);
            for (const auto& r : ctx.train_ratings) ++(*counts)[ctx.catalog.item(r.item_key)];
            return Ranker([counts](std::int32_t user, std::span<const std::int32_t> candidates) {
              return recommend_pop(*counts, candidates, std::max<std::size_t>(1, candidates.size()), user)
                  .items();
            });
          }};
}

inline ModelSpec random_model() {
  return {"rdm", [](const FoldContext& ctx) {
            const std::uint64_t seed = ctx.seed;
            return Ranker([seed](std::int32_t user, std::span<const std::int32_t> candidates) {
              return recommend_random(candidates, std::max<std::size_t>(1, candidates.size()),
                                      derive_seed(seed, static_cast<std::uint64_t>(user)), user)
                  .items();
            });
          }};
}

inline ModelSpec mf_model() {
  return {"mf", [](const FoldContext& ctx) {
            std::vector<RatingEntry> entries;
            entries.reserve(ctx.train_ratings.size());
            for (const auto& r : ctx.train_ratings) {
              entries.push_back({ctx.catalog.user(r.user_key), ctx.catalog.item(r.item_key), r.rating});
            }
            AlsConfig cfg = ctx.config.als;
            cfg.seed = ctx.seed;
            auto model = std::make_shared<const FactorModel>(
                mf_als_train(entries, ctx.catalog.index.count(EntityKind::User),
                             ctx.catalog.index.count(EntityKind::Item), cfg));
            return Ranker([model](std::int32_t user, std::span<const std::int32_t> candidates) {
              return recommend_mf(*model, user, candidates, std::max<std::size_t>(1, candidates.size()))
                  .items();
            });
          }};
}

// Names: gera, ger, gea, mf, pop, rdm.
inline ModelSpec make_model(std::string_view name) {
  const std::string n = detail::lowercase(name);
  if (const auto v = parse_variant(n)) return graph_model(*v);
  if (n == "mf") return mf_model();
  if (n == "pop") return pop_model();
  if (n == "rdm") return random_model();
  throw std::invalid_argument("unknown model '" + std::string(name) + "'");
}

struct MetricCell {
  std::string model;
  Metric metric = Metric::F1;
  std::size_t k = 0;
  std::vector<double> per_fold;
  std::vector<double> per_user;  // (fold, user) order; paired across models
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation over folds
  bool best = false;
  bool significant = false;
  std::map<std::string, double> p_values;  // vs every other model
};

struct MetricsReport {
  std::vector<std::string> models;  // models that produced results
  std::vector<std::size_t> ks;
  std::size_t folds = 0;
  std::vector<MetricCell> cells;
  std::map<std::string, std::string> errors;  // model -> first failure

  const MetricCell* find(std::string_view model, Metric metric, std::size_t k) const {
    for (const auto& c : cells) {
      if (c.model == model && c.metric == metric && c.k == k) return &c;
    }
    return nullptr;
  }
};

namespace detail {

inline std::string pair_key(std::string_view user, std::string_view item) {
  std::string key(user);
  key += '\t';
  key += item;
  return key;
}

// Per model: values[metric][k index][user] for one fold.
using FoldValues = std::vector<std::vector<std::vector<double>>>;

struct FoldOutcome {
  std::map<std::string, FoldValues> values;
  std::map<std::string, std::string> errors;
};

}  // namespace detail

struct TestUser {
  std::int32_t user = 0;                 // catalog id
  std::vector<std::int32_t> candidates;  // distinct test items, first-seen order
  ItemSet<std::int32_t> relevant;
};

struct FoldData {
  std::vector<RatingRecord> train_ratings;
  std::vector<AspectOpinion> train_opinions;
  std::vector<TestUser> test_users;
};

// Splits the corpus for one fold. No record whose (user, item) pair is
// tested in this fold reaches the training side.
inline FoldData make_fold(std::size_t fold, const std::vector<RatingRecord>& ratings,
                          const std::vector<AspectOpinion>& opinions, const FoldSplit& split,
                          const Catalog& catalog, double relevance_threshold) {
  std::unordered_set<std::string> test_pairs;
  for (std::size_t i = 0; i < ratings.size(); ++i) {
    if (split.fold_of[i] == fold) {
      test_pairs.insert(detail::pair_key(ratings[i].user_key, ratings[i].item_key));
    }
  }
  FoldData data;
  std::unordered_map<std::int32_t, std::size_t> user_slot;
  for (std::size_t i = 0; i < ratings.size(); ++i) {
    const auto& r = ratings[i];
    if (split.fold_of[i] != fold) {
      if (!test_pairs.contains(detail::pair_key(r.user_key, r.item_key))) {
        data.train_ratings.push_back(r);
      }
      continue;
    }
    const std::int32_t u = catalog.user(r.user_key);
    auto [it, inserted] = user_slot.try_emplace(u, data.test_users.size());
    if (inserted) data.test_users.push_back({u, {}, {}});
    TestUser& tu = data.test_users[it->second];
    const std::int32_t item = catalog.item(r.item_key);
    if (std::find(tu.candidates.begin(), tu.candidates.end(), item) == tu.candidates.end()) {
      tu.candidates.push_back(item);
    }
    if (r.rating > relevance_threshold) tu.relevant.insert(item);
  }
  for (const auto& o : opinions) {
    if (!test_pairs.contains(detail::pair_key(o.user_key, o.item_key))) {
      data.train_opinions.push_back(o);
    }
  }
  return data;
}

namespace detail {

inline FoldOutcome run_fold(std::size_t fold, const std::vector<ModelSpec>& models,
                            const std::vector<RatingRecord>& ratings,
                            const std::vector<AspectOpinion>& opinions, const FoldSplit& split,
                            const Catalog& catalog, const EvalConfig& cfg) {
  const FoldData data = make_fold(fold, ratings, opinions, split, catalog, cfg.relevance_threshold);
  const auto& train_ratings = data.train_ratings;
  const auto& train_opinions = data.train_opinions;
  const auto& users = data.test_users;

  const FoldContext ctx{fold, derive_seed(cfg.seed, fold, 0x5eed), catalog, train_ratings,
                        train_opinions, cfg};
  FoldOutcome outcome;
  for (const auto& model : models) {
    try {
      const Ranker rank = model.fit(ctx);
      FoldValues values(kAllMetrics.size(),
                        std::vector<std::vector<double>>(cfg.ks.size()));
      for (const auto& tu : users) {
        const std::vector<std::int32_t> ranked = rank(tu.user, tu.candidates);
        const std::span<const std::int32_t> view(ranked);
        for (std::size_t ki = 0; ki < cfg.ks.size(); ++ki) {
          const std::size_t k = cfg.ks[ki];
          const double p = precision_at_k(view, tu.relevant, k);
          const double r = recall_at_k(view, tu.relevant, k);
          values[0][ki].push_back(p);
          values[1][ki].push_back(r);
          values[2][ki].push_back(f1_score(p, r));
          values[3][ki].push_back(ndcg_at_k(view, tu.relevant, k));
        }
      }
      outcome.values.emplace(model.name, std::move(values));
    } catch (const std::exception& e) {
      outcome.errors.emplace(model.name, "fold " + std::to_string(fold) + ": " + e.what());
    }
  }
  return outcome;
}

inline double mean_of(std::span<const double> v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double stddev_of(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

// Marks the best mean per (metric, k); a best model is significant when it
// beats every other model under the Bonferroni-corrected paired test.
inline void mark_significance(MetricsReport& report, const EvalConfig& cfg) {
  const std::size_t n_models = report.models.size();
  if (n_models == 0) return;
  for (Metric metric : kAllMetrics) {
    for (std::size_t k : report.ks) {
      std::vector<MetricCell*> group;
      for (auto& c : report.cells) {
        if (c.metric == metric && c.k == k) group.push_back(&c);
      }
      double best = -std::numeric_limits<double>::infinity();
      for (const auto* c : group) best = std::max(best, c->mean);
      for (auto* c : group) {
        const auto& mine = cfg.samples == SampleSource::Folds ? c->per_fold : c->per_user;
        bool beats_all = true;
        for (const auto* o : group) {
          if (o == c) continue;
          const auto& theirs = cfg.samples == SampleSource::Folds ? o->per_fold : o->per_user;
          SignificanceResult sig;
          if (mine.size() >= 2 && mine.size() == theirs.size()) {
            sig = paired_significance(mine, theirs, n_models - 1, cfg.alpha);
          }
          c->p_values[o->model] = sig.p_value;
          beats_all = beats_all && sig.significant;
        }
        c->best = c->mean == best;
        c->significant = c->best && n_models > 1 && beats_all;
      }
    }
  }
}

}  // namespace detail

inline MetricsReport evaluate(const std::vector<ModelSpec>& models,
                              const std::vector<RatingRecord>& ratings,
                              const std::vector<AspectOpinion>& opinions,
                              const EvalConfig& cfg) {
  if (cfg.ks.empty()) throw std::invalid_argument("ks must not be empty");
  for (std::size_t k : cfg.ks) {
    if (k < 1) throw std::invalid_argument("every k must be >= 1");
  }
  const Catalog catalog = Catalog::from(ratings, opinions);
  const FoldSplit split = kfold_split(ratings, cfg.folds, cfg.seed);

  std::vector<detail::FoldOutcome> outcomes(cfg.folds);
  if (cfg.workers <= 1) {
    for (std::size_t f = 0; f < cfg.folds; ++f) {
      outcomes[f] = detail::run_fold(f, models, ratings, opinions, split, catalog, cfg);
    }
  } else {
    std::vector<std::exception_ptr> errors(cfg.folds);
    std::size_t next = 0;
    std::mutex m;
    std::vector<std::thread> threads;
    for (std::size_t w = 0; w < std::min(cfg.workers, cfg.folds); ++w) {
      threads.emplace_back([&] {
        while (true) {
          std::size_t f;
          {
            std::lock_guard<std::mutex> lock(m);
            if (next == cfg.folds) return;
            f = next++;
          }
          try {
            outcomes[f] = detail::run_fold(f, models, ratings, opinions, split, catalog, cfg);
          } catch (...) {
            errors[f] = std::current_exception();
          }
        }
      });
    }
    for (auto& t : threads) t.join();
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  MetricsReport report;
  report.ks = cfg.ks;
  report.folds = cfg.folds;
  for (const auto& model : models) {
    for (const auto& outcome : outcomes) {
      const auto it = outcome.errors.find(model.name);
      if (it != outcome.errors.end() && !report.errors.contains(model.name)) {
        report.errors[model.name] = it->second;
      }
    }
    if (report.errors.contains(model.name)) continue;
    report.models.push_back(model.name);
    for (std::size_t mi = 0; mi < kAllMetrics.size(); ++mi) {
      for (std::size_t ki = 0; ki < cfg.ks.size(); ++ki) {
        MetricCell cell;
        cell.model = model.name;
        cell.metric = kAllMetrics[mi];
        cell.k = cfg.ks[ki];
        for (const auto& outcome : outcomes) {
          const auto& per_user = outcome.values.at(model.name)[mi][ki];
          cell.per_fold.push_back(detail::mean_of(per_user));
          cell.per_user.insert(cell.per_user.end(), per_user.begin(), per_user.end());
        }
        cell.mean = detail::mean_of(cell.per_fold);
        cell.stddev = detail::stddev_of(cell.per_fold);
        report.cells.push_back(std::move(cell));
      }
    }
  }
  detail::mark_significance(report, cfg);
  return report;
}

}  // namespace kgrec
