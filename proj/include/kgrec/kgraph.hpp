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
// The user/item/aspect knowledge graph. Ratings become highRating/lowRating
// edges, each aspect opinion becomes a user->aspect sentiment edge plus an
// aspect->item belongsTo edge. Aspect nodes are global per aspect term.
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "kgrec/corpus.hpp"
#include "kgrec/detail/text.hpp"

namespace kgrec {

enum class EntityKind : std::uint8_t { User = 0, Item = 1, Aspect = 2 };
inline constexpr std::size_t kNumKinds = 3;
inline constexpr std::array<EntityKind, kNumKinds> kAllKinds = {
    EntityKind::User, EntityKind::Item, EntityKind::Aspect};

enum class Relation : std::uint8_t {
  Likes = 0,
  Dislikes = 1,
  DoesNotCare = 2,
  BelongsTo = 3,
  HighRating = 4,
  LowRating = 5,
};
inline constexpr std::size_t kNumRelations = 6;
inline constexpr std::array<Relation, kNumRelations> kAllRelations = {
    Relation::Likes,     Relation::Dislikes,   Relation::DoesNotCare,
    Relation::BelongsTo, Relation::HighRating, Relation::LowRating};

enum class GraphVariant : std::uint8_t { GER, GEA, GERA };

constexpr std::size_t index_of(EntityKind k) { return static_cast<std::size_t>(k); }
constexpr std::size_t index_of(Relation r) { return static_cast<std::size_t>(r); }

constexpr EntityKind source_kind(Relation r) {
  switch (r) {
    case Relation::BelongsTo:
      return EntityKind::Aspect;
    default:
      return EntityKind::User;
  }
}

constexpr EntityKind destination_kind(Relation r) {
  switch (r) {
    case Relation::Likes:
    case Relation::Dislikes:
    case Relation::DoesNotCare:
      return EntityKind::Aspect;
    default:
      return EntityKind::Item;
  }
}

constexpr bool is_rating_relation(Relation r) {
  return r == Relation::HighRating || r == Relation::LowRating;
}

constexpr bool variant_includes(GraphVariant v, Relation r) {
  switch (v) {
    case GraphVariant::GER:
      return is_rating_relation(r);
    case GraphVariant::GEA:
      return !is_rating_relation(r);
    case GraphVariant::GERA:
      return true;
  }
  return false;
}

constexpr std::string_view relation_token(Relation r) {
  constexpr std::array<std::string_view, kNumRelations> kTokens = {
      "likes", "dislikes", "doesNotCare", "belongsTo", "highRating", "lowRating"};
  return kTokens[index_of(r)];
}

inline std::optional<Relation> parse_relation(std::string_view token) {
  for (Relation r : kAllRelations) {
    if (relation_token(r) == token) return r;
  }
  if (token == "doesnotCare") return Relation::DoesNotCare;  // older spelling
  return std::nullopt;
}

constexpr char kind_token(EntityKind k) {
  constexpr std::array<char, kNumKinds> kTokens = {'u', 'i', 'a'};
  return kTokens[index_of(k)];
}

inline std::optional<EntityKind> parse_kind(std::string_view token) {
  if (token.size() != 1) return std::nullopt;
  for (EntityKind k : kAllKinds) {
    if (kind_token(k) == token.front()) return k;
  }
  return std::nullopt;
}

constexpr std::string_view variant_token(GraphVariant v) {
  switch (v) {
    case GraphVariant::GER:
      return "ger";
    case GraphVariant::GEA:
      return "gea";
    case GraphVariant::GERA:
      return "gera";
  }
  return "";
}

inline std::optional<GraphVariant> parse_variant(std::string_view token) {
  const std::string t = detail::lowercase(token);
  for (GraphVariant v : {GraphVariant::GER, GraphVariant::GEA, GraphVariant::GERA}) {
    if (variant_token(v) == t) return v;
  }
  return std::nullopt;
}

// An entity named by its external key.
struct EntityRef {
  EntityKind kind = EntityKind::User;
  std::string key;

  friend bool operator==(const EntityRef&, const EntityRef&) = default;
};

// An interned entity: dense id within its kind.
struct Node {
  EntityKind kind = EntityKind::User;
  std::int32_t id = 0;

  friend bool operator==(const Node&, const Node&) = default;
};

struct Triple {
  EntityRef source;
  Relation relation = Relation::HighRating;
  EntityRef destination;

  friend bool operator==(const Triple&, const Triple&) = default;
};

struct Edge {
  Node source;
  Relation relation = Relation::HighRating;
  Node destination;

  friend bool operator==(const Edge&, const Edge&) = default;
};

constexpr bool satisfies_type_constraints(EntityKind src, Relation r,
                                          EntityKind dst) {
  return src == source_kind(r) && dst == destination_kind(r);
}

inline bool satisfies_type_constraints(const Edge& e) {
  return satisfies_type_constraints(e.source.kind, e.relation, e.destination.kind);
}

inline bool satisfies_type_constraints(const Triple& t) {
  return satisfies_type_constraints(t.source.kind, t.relation, t.destination.kind);
}

// Bijection (kind, key) <-> (kind, id) with ids contiguous from 0 per kind.
// Global indices lay kinds out as [users | items | aspects].
class EntityIndex {
 public:
  Node intern(EntityKind kind, std::string_view key) {
    auto& map = ids_[index_of(kind)];
    const auto it = map.find(std::string(key));
    if (it != map.end()) return {kind, it->second};
    auto& keys = keys_[index_of(kind)];
    const auto id = static_cast<std::int32_t>(keys.size());
    keys.emplace_back(key);
    map.emplace(keys.back(), id);
    return {kind, id};
  }

  std::optional<Node> find(EntityKind kind, std::string_view key) const {
    const auto& map = ids_[index_of(kind)];
    const auto it = map.find(std::string(key));
    if (it == map.end()) return std::nullopt;
    return Node{kind, it->second};
  }

  const std::string& key(Node n) const {
    return keys_[index_of(n.kind)].at(static_cast<std::size_t>(n.id));
  }

  const std::vector<std::string>& keys(EntityKind kind) const {
    return keys_[index_of(kind)];
  }

  std::size_t count(EntityKind kind) const { return keys_[index_of(kind)].size(); }

  std::size_t total() const {
    return count(EntityKind::User) + count(EntityKind::Item) +
           count(EntityKind::Aspect);
  }

  std::size_t offset(EntityKind kind) const {
    std::size_t off = 0;
    for (EntityKind k : kAllKinds) {
      if (k == kind) break;
      off += count(k);
    }
    return off;
  }

  std::size_t global_index(Node n) const {
    return offset(n.kind) + static_cast<std::size_t>(n.id);
  }

  Node node_at(std::size_t global) const {
    for (EntityKind k : kAllKinds) {
      if (global < count(k)) return {k, static_cast<std::int32_t>(global)};
      global -= count(k);
    }
    throw std::out_of_range("global entity index out of range");
  }

  friend bool operator==(const EntityIndex& a, const EntityIndex& b) {
    return a.keys_ == b.keys_;
  }

 private:
  std::array<std::vector<std::string>, kNumKinds> keys_;
  std::array<std::unordered_map<std::string, std::int32_t>, kNumKinds> ids_;
};

inline Triple rating_to_triple(const RatingRecord& r) {
  const Relation rel = r.rating <= 3.0 ? Relation::LowRating : Relation::HighRating;
  return {{EntityKind::User, r.user_key}, rel, {EntityKind::Item, r.item_key}};
}

inline std::array<Triple, 2> opinion_to_triples(const AspectOpinion& o) {
  Relation sentiment = Relation::DoesNotCare;
  if (o.polarity > 0.0) {
    sentiment = Relation::Likes;
  } else if (o.polarity < 0.0) {
    sentiment = Relation::Dislikes;
  }
  return {Triple{{EntityKind::User, o.user_key},
                 sentiment,
                 {EntityKind::Aspect, o.aspect_term}},
          Triple{{EntityKind::Aspect, o.aspect_term},
                 Relation::BelongsTo,
                 {EntityKind::Item, o.item_key}}};
}

// Immutable after construction; safe for concurrent readers.
class KnowledgeGraph {
 public:
  KnowledgeGraph() = default;

  // Interns entities in first-occurrence order (source before destination)
  // and drops repeated (s, r, d) triples.
  template <class TripleRange>
  static KnowledgeGraph from_triples(GraphVariant variant, const TripleRange& triples) {
    KnowledgeGraph g;
    g.variant_ = variant;
    std::unordered_set<std::uint64_t> seen;
    std::vector<Edge> edges;
    for (const Triple& t : triples) {
      if (!satisfies_type_constraints(t)) {
        throw std::invalid_argument("triple violates relation type constraints");
      }
      const Node s = g.index_.intern(t.source.kind, t.source.key);
      const Node d = g.index_.intern(t.destination.kind, t.destination.key);
      const Edge e{s, t.relation, d};
      if (seen.insert(local_key(e)).second) edges.push_back(e);
    }
    g.edges_ = std::move(edges);
    g.finalize();
    return g;
  }

  GraphVariant variant() const { return variant_; }
  const EntityIndex& entities() const { return index_; }
  const std::vector<Edge>& edges() const { return edges_; }
  bool empty() const { return edges_.empty(); }

  std::size_t global_index(Node n) const { return offsets_[index_of(n.kind)] + n.id; }

  bool has_edge(const Edge& e) const { return edge_set_.contains(key_of(e)); }

  std::optional<Node> find(EntityKind kind, std::string_view key) const {
    return index_.find(kind, key);
  }

  // Indices into edges() of edges leaving / entering `n`, in edge order.
  std::span<const std::uint32_t> outgoing(Node n) const {
    const std::size_t g = global_index(n);
    return {out_edges_.data() + out_offsets_[g], out_offsets_[g + 1] - out_offsets_[g]};
  }
  std::span<const std::uint32_t> incoming(Node n) const {
    const std::size_t g = global_index(n);
    return {in_edges_.data() + in_offsets_[g], in_offsets_[g + 1] - in_offsets_[g]};
  }

  Triple to_triple(const Edge& e) const {
    return {{e.source.kind, index_.key(e.source)},
            e.relation,
            {e.destination.kind, index_.key(e.destination)}};
  }

  friend bool operator==(const KnowledgeGraph& a, const KnowledgeGraph& b) {
    return a.variant_ == b.variant_ && a.index_ == b.index_ && a.edges_ == b.edges_;
  }

 private:
  // Key valid before global offsets are known; only used during dedup.
  static std::uint64_t local_key(const Edge& e) {
    return (static_cast<std::uint64_t>(index_of(e.source.kind)) << 62) |
           (static_cast<std::uint64_t>(e.source.id) << 35) |
           (static_cast<std::uint64_t>(index_of(e.relation)) << 32) |
           static_cast<std::uint64_t>(e.destination.id);
  }

  std::uint64_t key_of(const Edge& e) const {
    if (e.source.id < 0 || e.destination.id < 0) return ~std::uint64_t{0};
    if (!satisfies_type_constraints(e)) return ~std::uint64_t{0};
    return local_key(e);
  }

  void finalize() {
    std::size_t off = 0;
    for (EntityKind k : kAllKinds) {
      offsets_[index_of(k)] = off;
      off += index_.count(k);
    }
    if (off >= (std::size_t{1} << 27)) {
      throw std::length_error("too many entities for edge key packing");
    }
    edge_set_.clear();
    edge_set_.reserve(edges_.size());
    for (const Edge& e : edges_) edge_set_.insert(local_key(e));

    const std::size_t n = off;
    out_offsets_.assign(n + 1, 0);
    in_offsets_.assign(n + 1, 0);
    for (const Edge& e : edges_) {
      ++out_offsets_[global_index(e.source) + 1];
      ++in_offsets_[global_index(e.destination) + 1];
    }
    for (std::size_t i = 0; i < n; ++i) {
      out_offsets_[i + 1] += out_offsets_[i];
      in_offsets_[i + 1] += in_offsets_[i];
    }
    out_edges_.assign(edges_.size(), 0);
    in_edges_.assign(edges_.size(), 0);
    std::vector<std::size_t> out_fill(out_offsets_.begin(), out_offsets_.end() - 1);
    std::vector<std::size_t> in_fill(in_offsets_.begin(), in_offsets_.end() - 1);
    for (std::size_t i = 0; i < edges_.size(); ++i) {
      const Edge& e = edges_[i];
      out_edges_[out_fill[global_index(e.source)]++] = static_cast<std::uint32_t>(i);
      in_edges_[in_fill[global_index(e.destination)]++] = static_cast<std::uint32_t>(i);
    }
  }

  GraphVariant variant_ = GraphVariant::GERA;
  EntityIndex index_;
  std::vector<Edge> edges_;
  std::array<std::size_t, kNumKinds> offsets_{};
  std::unordered_set<std::uint64_t> edge_set_;
  std::vector<std::size_t> out_offsets_{0};
  std::vector<std::size_t> in_offsets_{0};
  std::vector<std::uint32_t> out_edges_;
  std::vector<std::uint32_t> in_edges_;
};

// Ratings are converted first, then opinions, each in input order.
inline KnowledgeGraph build_graph(const std::vector<RatingRecord>& ratings,
                                  const std::vector<AspectOpinion>& opinions,
                                  GraphVariant variant) {
  std::vector<Triple> triples;
  if (variant != GraphVariant::GEA) {
    triples.reserve(ratings.size());
    for (const auto& r : ratings) triples.push_back(rating_to_triple(r));
  }
  if (variant != GraphVariant::GER) {
    triples.reserve(triples.size() + 2 * opinions.size());
    for (const auto& o : opinions) {
      for (auto& t : opinion_to_triples(o)) triples.push_back(std::move(t));
    }
  }
  return KnowledgeGraph::from_triples(variant, triples);
}

inline std::string format_entity(const EntityRef& e) {
  std::string out(1, kind_token(e.kind));
  out += ':';
  out += e.key;
  return out;
}

inline std::optional<EntityRef> parse_entity(std::string_view token) {
  const std::size_t colon = token.find(':');
  if (colon == std::string_view::npos) return std::nullopt;
  const auto kind = parse_kind(token.substr(0, colon));
  if (!kind) return std::nullopt;
  const std::string_view key = token.substr(colon + 1);
  if (key.empty()) return std::nullopt;
  return EntityRef{*kind, std::string(key)};
}

inline void write_graph(std::ostream& out, const KnowledgeGraph& g) {
  out << "#variant=" << variant_token(g.variant()) << '\n';
  for (const Edge& e : g.edges()) {
    const Triple t = g.to_triple(e);
    out << format_entity(t.source) << '\t' << relation_token(t.relation) << '\t'
        << format_entity(t.destination) << '\n';
  }
}

inline KnowledgeGraph read_graph(std::istream& in) {
  std::string raw;
  std::size_t lineno = 0;
  std::optional<GraphVariant> variant;
  std::vector<Triple> triples;
  while (std::getline(in, raw)) {
    ++lineno;
    const std::string_view line = detail::chomp(raw);
    if (!variant) {
      constexpr std::string_view kPrefix = "#variant=";
      if (line.substr(0, kPrefix.size()) != kPrefix) {
        throw ParseError("missing #variant header", lineno);
      }
      variant = parse_variant(line.substr(kPrefix.size()));
      if (!variant) throw ParseError("unknown graph variant", lineno);
      continue;
    }
    if (detail::skippable(line)) continue;
    const auto fields = detail::split(line, '\t');
    if (fields.size() != 3) throw ParseError("malformed edge line", lineno);
    const auto src = parse_entity(fields[0]);
    const auto rel = parse_relation(fields[1]);
    const auto dst = parse_entity(fields[2]);
    if (!rel) throw ParseError("unknown relation '" + std::string(fields[1]) + "'", lineno);
    if (!src || !dst) throw ParseError("malformed entity", lineno);
    Triple t{*src, *rel, *dst};
    if (!satisfies_type_constraints(t)) {
      throw ParseError("relation type constraint violated", lineno);
    }
    if (!variant_includes(*variant, t.relation)) {
      throw ParseError("relation not allowed in graph variant", lineno);
    }
    triples.push_back(std::move(t));
  }
  if (!variant) throw ParseError("empty graph file (missing #variant header)", 0);
  return KnowledgeGraph::from_triples(*variant, triples);
}

inline void save_graph(const KnowledgeGraph& g, const std::string& path) {
  auto out = detail::open_output(path);
  write_graph(out, g);
}

inline KnowledgeGraph load_graph(const std::string& path) {
  auto in = detail::open_input(path);
  return read_graph(in);
}

}  // namespace kgrec
