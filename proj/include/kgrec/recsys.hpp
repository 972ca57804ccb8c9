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
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <ostream>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include "kgrec/embed.hpp"
#include "kgrec/kgraph.hpp"

namespace kgrec {

struct ScoredId {
  std::int32_t id = 0;
  double score = 0.0;

  friend bool operator==(const ScoredId&, const ScoredId&) = default;
};

// Items are ids in the index of whichever model produced the list.
struct RecommendationList {
  std::int32_t user = 0;
  std::vector<ScoredId> entries;

  std::vector<std::int32_t> items() const {
    std::vector<std::int32_t> out;
    out.reserve(entries.size());
    for (const auto& e : entries) out.push_back(e.id);
    return out;
  }

  friend bool operator==(const RecommendationList&, const RecommendationList&) = default;
};

inline double cosine(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw std::invalid_argument("cosine: length mismatch");
  double dot = 0.0, nu = 0.0, nv = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    dot += u[k] * v[k];
    nu += u[k] * u[k];
    nv += v[k] * v[k];
  }
  if (nu == 0.0 || nv == 0.0) throw std::invalid_argument("cosine: zero vector");
  return std::clamp(dot / (std::sqrt(nu) * std::sqrt(nv)), -1.0, 1.0);
}

// [re | im], the layout EmbeddingTable rows already use.
inline std::vector<double> flatten(const ComplexView& v) {
  std::vector<double> out(v.re.begin(), v.re.end());
  out.insert(out.end(), v.im.begin(), v.im.end());
  return out;
}

namespace detail {

// Descending score, ascending id; drops repeated ids; keeps the top k.
inline std::vector<ScoredId> top_k(std::vector<ScoredId> scored, std::size_t k) {
  const auto before = [](const ScoredId& a, const ScoredId& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.id < b.id;
  };
  std::sort(scored.begin(), scored.end(), before);
  std::vector<ScoredId> out;
  std::unordered_set<std::int32_t> seen;
  for (const auto& r : scored) {
    if (out.size() == k) break;
    if (seen.insert(r.id).second) out.push_back(r);
  }
  return out;
}

inline void require_k(std::size_t k) {
  if (k < 1) throw std::invalid_argument("k must be >= 1");
}

}  // namespace detail

inline std::vector<std::int32_t> all_ids(const EntityIndex& index, EntityKind kind) {
  std::vector<std::int32_t> ids(index.count(kind));
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<std::int32_t>(i);
  return ids;
}

// Ranks candidate items by cosine between flattened user and item vectors.
inline RecommendationList recommend_embedding(const EmbeddingTable& table,
                                              std::int32_t user,
                                              std::span<const std::int32_t> candidates,
                                              std::size_t k) {
  detail::require_k(k);
  const auto& index = table.entities();
  if (user < 0 || static_cast<std::size_t>(user) >= index.count(EntityKind::User)) {
    throw std::out_of_range("user missing from embedding table");
  }
  const auto u = table.entity({EntityKind::User, user});
  std::vector<ScoredId> scored;
  scored.reserve(candidates.size());
  for (std::int32_t item : candidates) {
    if (item < 0 || static_cast<std::size_t>(item) >= index.count(EntityKind::Item)) {
      throw std::out_of_range("candidate item missing from embedding table");
    }
    scored.push_back({item, cosine(u, table.entity({EntityKind::Item, item}))});
  }
  return {user, detail::top_k(std::move(scored), k)};
}

inline RecommendationList recommend_embedding(const EmbeddingTable& table,
                                              std::string_view user_key,
                                              std::span<const std::int32_t> candidates,
                                              std::size_t k) {
  const auto user = table.find(EntityKind::User, user_key);
  if (!user) throw std::out_of_range("user '" + std::string(user_key) + "' missing from embedding table");
  return recommend_embedding(table, user->id, candidates, k);
}

// RDM: each candidate draws a uniform score; the k largest win.
inline RecommendationList recommend_random(std::span<const std::int32_t> candidates,
                                           std::size_t k, std::uint64_t seed,
                                           std::int32_t user = 0) {
  detail::require_k(k);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<ScoredId> scored;
  scored.reserve(candidates.size());
  for (std::int32_t item : candidates) scored.push_back({item, unit(rng)});
  return {user, detail::top_k(std::move(scored), k)};
}

// POP: score = training interaction count (ids beyond `counts` count 0).
inline RecommendationList recommend_pop(std::span<const std::size_t> counts,
                                        std::span<const std::int32_t> candidates,
                                        std::size_t k, std::int32_t user = 0) {
  detail::require_k(k);
  std::vector<ScoredId> scored;
  scored.reserve(candidates.size());
  for (std::int32_t item : candidates) {
    const auto idx = static_cast<std::size_t>(item);
    const double c = item >= 0 && idx < counts.size() ? static_cast<double>(counts[idx]) : 0.0;
    scored.push_back({item, c});
  }
  return {user, detail::top_k(std::move(scored), k)};
}

// TSV rows `user_key<TAB>rank<TAB>item_key<TAB>score`, rank starting at 1.
inline void write_recommendations(std::ostream& out, const RecommendationList& list,
                                  const EntityIndex& index) {
  const std::string& user = index.key({EntityKind::User, list.user});
  for (std::size_t r = 0; r < list.entries.size(); ++r) {
    out << user << '\t' << (r + 1) << '\t'
        << index.key({EntityKind::Item, list.entries[r].id}) << '\t'
        << detail::format_double(list.entries[r].score) << '\n';
  }
}

}  // namespace kgrec
