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
// Rating and aspect-opinion records: TSV loaders/writers, the user
// activity filter, corpus statistics and a clustered synthetic generator.
#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "kgrec/detail/text.hpp"

namespace kgrec {

struct RatingRecord {
  std::string user_key;
  std::string item_key;
  double rating = 0.0;
  std::optional<std::int64_t> timestamp;

  friend bool operator==(const RatingRecord&, const RatingRecord&) = default;
};

struct AspectOpinion {
  std::string user_key;
  std::string item_key;
  std::string aspect_term;  // lowercase, trimmed
  double polarity = 0.0;

  friend bool operator==(const AspectOpinion&, const AspectOpinion&) = default;
};

struct DatasetStats {
  std::size_t n_users = 0;
  std::size_t n_items = 0;
  std::size_t n_ratings = 0;
  std::size_t n_opinions = 0;
  double rating_sparsity = 0.0;
};

inline constexpr double kMinRating = 1.0;
inline constexpr double kMaxRating = 5.0;

namespace detail {

inline bool skippable(std::string_view line) {
  return trim(line).empty() || line.front() == '#';
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return in;
}

inline std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  return out;
}

}  // namespace detail

inline std::vector<RatingRecord> read_ratings(std::istream& in) {
  std::vector<RatingRecord> out;
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const std::string_view line = detail::chomp(raw);
    if (detail::skippable(line)) continue;
    const auto fields = detail::split(line, '\t');
    if (fields.size() != 3 && fields.size() != 4) {
      throw ParseError("malformed rating line (expected 3 or 4 fields)", lineno);
    }
    RatingRecord r;
    r.user_key = std::string(fields[0]);
    r.item_key = std::string(fields[1]);
    if (r.user_key.empty()) throw ParseError("empty user key", lineno);
    if (r.item_key.empty()) throw ParseError("empty item key", lineno);
    const auto value = detail::parse_double(fields[2]);
    if (!value) throw ParseError("malformed rating", lineno);
    if (!std::isfinite(*value) || *value < kMinRating || *value > kMaxRating) {
      throw ParseError("rating out of range", lineno);
    }
    r.rating = *value;
    if (fields.size() == 4) {
      const auto ts = detail::parse_int(fields[3]);
      if (!ts) throw ParseError("malformed timestamp", lineno);
      r.timestamp = *ts;
    }
    out.push_back(std::move(r));
  }
  return out;
}

inline std::vector<AspectOpinion> read_opinions(std::istream& in) {
  std::vector<AspectOpinion> out;
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const std::string_view line = detail::chomp(raw);
    if (detail::skippable(line)) continue;
    const auto fields = detail::split(line, '\t');
    if (fields.size() != 4) {
      throw ParseError("malformed opinion line (expected 4 fields)", lineno);
    }
    AspectOpinion o;
    o.user_key = std::string(fields[0]);
    o.item_key = std::string(fields[1]);
    if (o.user_key.empty()) throw ParseError("empty user key", lineno);
    if (o.item_key.empty()) throw ParseError("empty item key", lineno);
    o.aspect_term = detail::lowercase(detail::trim(fields[2]));
    if (o.aspect_term.empty()) throw ParseError("empty aspect", lineno);
    const auto value = detail::parse_double(fields[3]);
    if (!value || !std::isfinite(*value)) {
      throw ParseError("malformed polarity", lineno);
    }
    o.polarity = *value;
    out.push_back(std::move(o));
  }
  return out;
}

inline std::vector<RatingRecord> load_ratings(const std::string& path) {
  auto in = detail::open_input(path);
  return read_ratings(in);
}

inline std::vector<AspectOpinion> load_opinions(const std::string& path) {
  auto in = detail::open_input(path);
  return read_opinions(in);
}

inline void write_ratings(std::ostream& out,
                          const std::vector<RatingRecord>& ratings) {
  for (const auto& r : ratings) {
    out << r.user_key << '\t' << r.item_key << '\t'
        << detail::format_double(r.rating);
    if (r.timestamp) out << '\t' << *r.timestamp;
    out << '\n';
  }
}

inline void write_opinions(std::ostream& out,
                           const std::vector<AspectOpinion>& opinions) {
  for (const auto& o : opinions) {
    out << o.user_key << '\t' << o.item_key << '\t' << o.aspect_term << '\t'
        << detail::format_double(o.polarity) << '\n';
  }
}

inline void save_ratings(const std::vector<RatingRecord>& ratings,
                         const std::string& path) {
  auto out = detail::open_output(path);
  write_ratings(out, ratings);
}

inline void save_opinions(const std::vector<AspectOpinion>& opinions,
                          const std::string& path) {
  auto out = detail::open_output(path);
  write_opinions(out, opinions);
}

// Keeps the records of users having strictly more than `min` ratings.
inline std::vector<RatingRecord> filter_min_ratings(
    const std::vector<RatingRecord>& ratings, std::size_t min = 10) {
  std::unordered_map<std::string, std::size_t> per_user;
  for (const auto& r : ratings) ++per_user[r.user_key];
  std::vector<RatingRecord> out;
  for (const auto& r : ratings) {
    if (per_user[r.user_key] > min) out.push_back(r);
  }
  return out;
}

inline DatasetStats dataset_stats(const std::vector<RatingRecord>& ratings,
                                  const std::vector<AspectOpinion>& opinions) {
  std::unordered_set<std::string> users;
  std::unordered_set<std::string> items;
  for (const auto& r : ratings) {
    users.insert(r.user_key);
    items.insert(r.item_key);
  }
  for (const auto& o : opinions) {
    users.insert(o.user_key);
    items.insert(o.item_key);
  }
  DatasetStats s;
  s.n_users = users.size();
  s.n_items = items.size();
  s.n_ratings = ratings.size();
  s.n_opinions = opinions.size();
  if (s.n_users > 0 && s.n_items > 0) {
    s.rating_sparsity = static_cast<double>(s.n_ratings) /
                        (static_cast<double>(s.n_users) *
                         static_cast<double>(s.n_items));
  }
  return s;
}

struct SynthConfig {
  std::size_t n_user_clusters = 2;
  std::size_t users_per_cluster = 25;
  std::size_t items_per_cluster = 15;
  std::size_t aspects = 10;
  double noise_rate = 0.05;
  std::uint64_t seed = 1;
};

struct SyntheticCorpus {
  std::vector<RatingRecord> ratings;
  std::vector<AspectOpinion> opinions;
};

inline std::string synthetic_user_key(std::size_t index) {
  return "u" + std::to_string(index);
}
inline std::string synthetic_item_key(std::size_t index) {
  return "i" + std::to_string(index);
}
inline std::string synthetic_aspect_key(std::size_t index) {
  return "aspect" + std::to_string(index);
}

// Every user rates every item once and leaves one opinion per rating.
// User u belongs to cluster u / users_per_cluster, item i to cluster
// i / items_per_cluster, aspect a to cluster a % n_user_clusters. In-cluster
// interactions get ratings 4-5 and positive polarity, out-of-cluster ones
// ratings 1-2 and negative polarity; a noise_rate fraction of interactions is
// flipped. The opinion's aspect is drawn from the item cluster's aspects.
inline SyntheticCorpus generate_synthetic(const SynthConfig& cfg) {
  if (cfg.n_user_clusters == 0 || cfg.users_per_cluster == 0 ||
      cfg.items_per_cluster == 0 || cfg.aspects == 0) {
    throw std::invalid_argument("synthetic corpus counts must be >= 1");
  }
  if (!(cfg.noise_rate >= 0.0 && cfg.noise_rate <= 1.0)) {
    throw std::invalid_argument("noise_rate must lie in [0, 1]");
  }
  const std::size_t clusters = cfg.n_user_clusters;
  std::vector<std::vector<std::size_t>> cluster_aspects(clusters);
  for (std::size_t a = 0; a < cfg.aspects; ++a) {
    cluster_aspects[a % clusters].push_back(a);
  }
  for (auto& list : cluster_aspects) {
    if (list.empty()) {
      for (std::size_t a = 0; a < cfg.aspects; ++a) list.push_back(a);
    }
  }

  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> coin(0, 1);

  SyntheticCorpus corpus;
  const std::size_t n_users = clusters * cfg.users_per_cluster;
  const std::size_t n_items = clusters * cfg.items_per_cluster;
  corpus.ratings.reserve(n_users * n_items);
  corpus.opinions.reserve(n_users * n_items);
  for (std::size_t u = 0; u < n_users; ++u) {
    const std::size_t uc = u / cfg.users_per_cluster;
    for (std::size_t i = 0; i < n_items; ++i) {
      const std::size_t ic = i / cfg.items_per_cluster;
      bool positive = uc == ic;
      if (unit(rng) < cfg.noise_rate) positive = !positive;
      const double rating = positive ? 4.0 + coin(rng) : 1.0 + coin(rng);
      const auto& aspects = cluster_aspects[ic];
      std::uniform_int_distribution<std::size_t> pick(0, aspects.size() - 1);
      const std::size_t aspect = aspects[pick(rng)];
      const double strength = std::round((0.1 + 0.9 * unit(rng)) * 100.0) / 100.0;
      corpus.ratings.push_back(
          {synthetic_user_key(u), synthetic_item_key(i), rating, std::nullopt});
      corpus.opinions.push_back({synthetic_user_key(u), synthetic_item_key(i),
                                 synthetic_aspect_key(aspect),
                                 positive ? strength : -strength});
    }
  }
  return corpus;
}

}  // namespace kgrec
