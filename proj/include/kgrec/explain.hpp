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
// Aspect-level explanations: for each recommended item, count how the
// target's most similar users feel about the aspects attached to the item.
#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "kgrec/embed.hpp"
#include "kgrec/kgraph.hpp"
#include "kgrec/recsys.hpp"

namespace kgrec {

struct AspectCounts {
  std::string aspect;
  std::size_t likes = 0;
  std::size_t dislikes = 0;
  std::size_t does_not_care = 0;

  std::size_t total() const { return likes + dislikes + does_not_care; }
  friend bool operator==(const AspectCounts&, const AspectCounts&) = default;
};

struct Explanation {
  std::string user;
  std::string item;
  std::vector<AspectCounts> aspects;  // aspect order: first belongsTo edge
  std::size_t cohort_size = 0;

  friend bool operator==(const Explanation&, const Explanation&) = default;
};

struct ExplainedItem {
  std::string item;
  double score = 0.0;
  std::optional<Explanation> explanation;  // empty when uncovered
};

struct ExplanationStats {
  std::size_t lists = 0;
  std::size_t items = 0;
  std::size_t covered = 0;
  double coverage = 0.0;
  std::optional<double> lk_other;      // empty when dislikes + doesNotCare == 0
  double n_aspects = 0.0;              // mean unique aspects per list
  std::optional<double> asp_per_item;  // empty when nothing is covered
};

// The n users closest to `user` by cosine, best first, ties by id.
inline std::vector<ScoredId> top_similar_users(const EmbeddingTable& table, std::int32_t user,
                                               std::size_t n) {
  if (n < 1) throw std::invalid_argument("n must be >= 1");
  const std::size_t n_users = table.entities().count(EntityKind::User);
  if (user < 0 || static_cast<std::size_t>(user) >= n_users) {
    throw std::out_of_range("user missing from embedding table");
  }
  const auto target = table.entity({EntityKind::User, user});
  std::vector<ScoredId> scored;
  scored.reserve(n_users);
  for (std::size_t v = 0; v < n_users; ++v) {
    const auto id = static_cast<std::int32_t>(v);
    if (id == user) continue;
    scored.push_back({id, cosine(target, table.entity({EntityKind::User, id}))});
  }
  return detail::top_k(std::move(scored), n);
}

inline std::optional<Explanation> explain_item(const KnowledgeGraph& graph,
                                               std::string_view user, std::string_view item,
                                               std::span<const std::string> cohort) {
  const auto item_node = graph.find(EntityKind::Item, item);
  if (!item_node) throw std::out_of_range("item '" + std::string(item) + "' not in graph");
  std::vector<Node> members;
  members.reserve(cohort.size());
  for (const auto& key : cohort) {
    if (const auto v = graph.find(EntityKind::User, key)) members.push_back(*v);
  }

  Explanation out{std::string(user), std::string(item), {}, cohort.size()};
  const auto& entities = graph.entities();
  for (std::uint32_t idx : graph.incoming(*item_node)) {
    const Edge& belongs = graph.edges()[idx];
    if (belongs.relation != Relation::BelongsTo) continue;
    const Node aspect = belongs.source;
    AspectCounts counts{entities.key(aspect)};
    for (const Node& v : members) {
      counts.likes += graph.has_edge({v, Relation::Likes, aspect}) ? 1 : 0;
      counts.dislikes += graph.has_edge({v, Relation::Dislikes, aspect}) ? 1 : 0;
      counts.does_not_care += graph.has_edge({v, Relation::DoesNotCare, aspect}) ? 1 : 0;
    }
    if (counts.total() > 0) out.aspects.push_back(std::move(counts));
  }
  if (out.aspects.empty()) return std::nullopt;
  return out;
}

// Items of the table the user has not rated in `graph`.
inline std::vector<std::int32_t> unrated_items(const EmbeddingTable& table,
                                               const KnowledgeGraph& graph,
                                               std::string_view user) {
  std::unordered_set<std::string_view> rated;
  if (const auto u = graph.find(EntityKind::User, user)) {
    for (std::uint32_t idx : graph.outgoing(*u)) {
      const Edge& e = graph.edges()[idx];
      if (is_rating_relation(e.relation)) rated.insert(graph.entities().key(e.destination));
    }
  }
  std::vector<std::int32_t> out;
  const auto& items = table.entities().keys(EntityKind::Item);
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (!rated.contains(items[i])) out.push_back(static_cast<std::int32_t>(i));
  }
  return out;
}

// Recommends k items, finds the n most similar users, and explains each
// recommended item from that cohort. Item order follows the recommendation.
inline std::vector<ExplainedItem> explain_recommendations(
    const EmbeddingTable& table, const KnowledgeGraph& graph, std::string_view user,
    std::size_t k = 30, std::size_t n = 30,
    std::optional<std::vector<std::int32_t>> candidates = std::nullopt) {
  const auto u = table.find(EntityKind::User, user);
  if (!u) throw std::out_of_range("user '" + std::string(user) + "' missing from embedding table");
  const auto pool = candidates ? std::move(*candidates) : unrated_items(table, graph, user);
  const RecommendationList recs = recommend_embedding(table, u->id, pool, k);

  std::vector<std::string> cohort;
  if (table.entities().count(EntityKind::User) > 1) {
    for (const auto& s : top_similar_users(table, u->id, n)) {
      cohort.push_back(table.entities().key({EntityKind::User, s.id}));
    }
  }
  std::vector<ExplainedItem> out;
  out.reserve(recs.entries.size());
  for (const auto& e : recs.entries) {
    const std::string& item = table.entities().key({EntityKind::Item, e.id});
    ExplainedItem ei{item, e.score, std::nullopt};
    if (graph.find(EntityKind::Item, item)) ei.explanation = explain_item(graph, user, item, cohort);
    out.push_back(std::move(ei));
  }
  return out;
}

inline ExplanationStats explanation_stats(std::span<const std::vector<ExplainedItem>> batch) {
  if (batch.empty()) throw std::invalid_argument("explanation batch is empty");
  ExplanationStats s;
  s.lists = batch.size();
  std::size_t likes = 0, others = 0, aspects_on_covered = 0, unique_sum = 0;
  for (const auto& list : batch) {
    std::unordered_set<std::string> unique;
    for (const auto& ei : list) {
      ++s.items;
      if (!ei.explanation) continue;
      ++s.covered;
      aspects_on_covered += ei.explanation->aspects.size();
      for (const auto& a : ei.explanation->aspects) {
        likes += a.likes;
        others += a.dislikes + a.does_not_care;
        unique.insert(a.aspect);
      }
    }
    unique_sum += unique.size();
  }
  s.coverage = s.items == 0 ? 0.0 : static_cast<double>(s.covered) / static_cast<double>(s.items);
  if (others > 0) s.lk_other = static_cast<double>(likes) / static_cast<double>(others);
  s.n_aspects = static_cast<double>(unique_sum) / static_cast<double>(s.lists);
  if (s.covered > 0) {
    s.asp_per_item = static_cast<double>(aspects_on_covered) / static_cast<double>(s.covered);
  }
  return s;
}

// Review text keyed by (user, item); lines `user<TAB>item<TAB>text`.
class ReviewStore {
 public:
  static ReviewStore read(std::istream& in) {
    ReviewStore store;
    std::string raw;
    std::size_t lineno = 0;
    while (std::getline(in, raw)) {
      ++lineno;
      const std::string_view line = detail::chomp(raw);
      if (detail::skippable(line)) continue;
      const std::size_t a = line.find('\t');
      const std::size_t b = a == std::string_view::npos ? a : line.find('\t', a + 1);
      if (b == std::string_view::npos) throw ParseError("malformed review line", lineno);
      store.text_.emplace(std::string(line.substr(0, b)), std::string(line.substr(b + 1)));
    }
    return store;
  }

  static ReviewStore load(const std::string& path) {
    auto in = detail::open_input(path);
    return read(in);
  }

  const std::string* find(std::string_view user, std::string_view item) const {
    std::string key(user);
    key += '\t';
    key += item;
    const auto it = text_.find(key);
    return it == text_.end() ? nullptr : &it->second;
  }

 private:
  std::unordered_map<std::string, std::string> text_;
};

// One line per item: `item<TAB>aspect (x +, y -); aspect (x +, y -)`.
inline void render_explanations(std::ostream& out, std::span<const ExplainedItem> items,
                                const ReviewStore* reviews = nullptr,
                                std::span<const std::string> cohort = {}) {
  for (const auto& ei : items) {
    out << ei.item << '\t';
    if (!ei.explanation) {
      out << "(no aspect opinions)";
    } else {
      const auto& aspects = ei.explanation->aspects;
      for (std::size_t i = 0; i < aspects.size(); ++i) {
        if (i > 0) out << "; ";
        out << aspects[i].aspect << " (" << aspects[i].likes << " +, " << aspects[i].dislikes
            << " -)";
      }
    }
    if (reviews != nullptr) {
      for (const auto& member : cohort) {
        if (const std::string* text = reviews->find(member, ei.item)) {
          out << '\t' << *text;
          break;
        }
      }
    }
    out << '\n';
  }
}

}  // namespace kgrec
