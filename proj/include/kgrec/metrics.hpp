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
// Top-k ranking metrics and the paired significance test used to compare
// models across folds (or users).
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

namespace kgrec {

template <class Item>
using ItemSet = std::unordered_set<Item>;

template <class Item>
std::size_t hits_at_k(std::span<const Item> ranked, const ItemSet<Item>& relevant,
                      std::size_t k) {
  const std::size_t top = std::min(k, ranked.size());
  std::size_t hits = 0;
  for (std::size_t i = 0; i < top; ++i) hits += relevant.contains(ranked[i]) ? 1 : 0;
  return hits;
}

// Denominator min(k, |ranked|): a short list is not penalised for length.
template <class Item>
double precision_at_k(std::span<const Item> ranked, const ItemSet<Item>& relevant,
                      std::size_t k) {
  const std::size_t top = std::min(k, ranked.size());
  if (top == 0 || relevant.empty()) return 0.0;
  return static_cast<double>(hits_at_k(ranked, relevant, k)) / static_cast<double>(top);
}

template <class Item>
double recall_at_k(std::span<const Item> ranked, const ItemSet<Item>& relevant,
                   std::size_t k) {
  if (relevant.empty()) return 0.0;
  return static_cast<double>(hits_at_k(ranked, relevant, k)) /
         static_cast<double>(relevant.size());
}

inline double f1_score(double precision, double recall) {
  const double sum = precision + recall;
  return sum == 0.0 ? 0.0 : 2.0 * precision * recall / sum;
}

template <class Item>
double f1_at_k(std::span<const Item> ranked, const ItemSet<Item>& relevant, std::size_t k) {
  return f1_score(precision_at_k(ranked, relevant, k), recall_at_k(ranked, relevant, k));
}

// DCG with gain/log2(rank + 1), normalised by the ideal ordering of `gains`.
template <class Item>
double ndcg_at_k(std::span<const Item> ranked, const std::unordered_map<Item, double>& gains,
                 std::size_t k) {
  const std::size_t top = std::min(k, ranked.size());
  double dcg = 0.0;
  for (std::size_t i = 0; i < top; ++i) {
    const auto it = gains.find(ranked[i]);
    if (it != gains.end()) dcg += it->second / std::log2(static_cast<double>(i) + 2.0);
  }
  std::vector<double> ideal;
  ideal.reserve(gains.size());
  for (const auto& [item, g] : gains) ideal.push_back(g);
  std::sort(ideal.begin(), ideal.end(), std::greater<>());
  double idcg = 0.0;
  for (std::size_t i = 0; i < std::min(k, ideal.size()); ++i) {
    idcg += ideal[i] / std::log2(static_cast<double>(i) + 2.0);
  }
  return idcg > 0.0 ? dcg / idcg : 0.0;
}

template <class Item>
double ndcg_at_k(std::span<const Item> ranked, const ItemSet<Item>& relevant, std::size_t k) {
  std::unordered_map<Item, double> gains;
  for (const auto& item : relevant) gains.emplace(item, 1.0);
  return ndcg_at_k(ranked, gains, k);
}

struct SignificanceResult {
  double p_value = 1.0;
  bool significant = false;
};

// Two-sided paired t-test; significant iff p < alpha / n_comparisons.
inline SignificanceResult paired_significance(std::span<const double> a,
                                              std::span<const double> b,
                                              std::size_t n_comparisons,
                                              double alpha = 0.05) {
  if (a.size() != b.size() || a.size() < 2) {
    throw std::invalid_argument("paired test needs two equal samples of size >= 2");
  }
  if (n_comparisons < 1) throw std::invalid_argument("n_comparisons must be >= 1");
  const auto n = static_cast<double>(a.size());
  double mean = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) mean += a[i] - b[i];
  mean /= n;
  double ss = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i] - mean;
    ss += d * d;
  }
  const double sd = std::sqrt(ss / (n - 1.0));
  SignificanceResult out;
  if (sd == 0.0) {
    out.p_value = mean == 0.0 ? 1.0 : 0.0;
  } else {
    const double t = mean / (sd / std::sqrt(n));
    const boost::math::students_t dist(n - 1.0);
    out.p_value = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(t))));
  }
  out.significant = out.p_value < alpha / static_cast<double>(n_comparisons);
  return out;
}

}  // namespace kgrec
