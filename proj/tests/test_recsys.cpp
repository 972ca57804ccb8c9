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
#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <gtest/gtest.h>

#include "oracles.hpp"

namespace kgrec {
namespace {

using testing::Gen;

TEST(Cosine, ClosedForms) {
  const std::vector<double> a{1.0, 2.0, 3.0}, x{1.0, 0.0}, y{0.0, 1.0}, xy{1.0, 1.0};
  EXPECT_DOUBLE_EQ(cosine(a, a), 1.0);
  EXPECT_DOUBLE_EQ(cosine(x, y), 0.0);
  EXPECT_NEAR(cosine(xy, x), 1.0 / std::sqrt(2.0), 1e-15);
  const std::vector<double> neg{-1.0, -2.0, -3.0};
  EXPECT_DOUBLE_EQ(cosine(a, neg), -1.0);
}

TEST(Cosine, Errors) {
  const std::vector<double> zero{0.0, 0.0}, x{1.0, 0.0}, longer{1.0, 0.0, 0.0};
  EXPECT_THROW(cosine(zero, x), std::invalid_argument);
  EXPECT_THROW(cosine(x, longer), std::invalid_argument);
}

TEST(Cosine, PropertyBoundedAndMatchesOracle) {
  Gen g(1);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = static_cast<std::size_t>(g.integer(1, 20));
    const auto a = g.reals(n), b = g.reals(n);
    const double c = cosine(a, b);
    EXPECT_GE(c, -1.0);
    EXPECT_LE(c, 1.0);
    EXPECT_NEAR(c, testing::brute_cosine(a, b), 1e-14);
  }
}

TEST(Flatten, Layout) {
  const ComplexVec v{{2.0}, {3.0}};
  EXPECT_EQ(flatten(v), (std::vector<double>{2.0, 3.0}));
  const ComplexVec zero{{0.0, 0.0}, {0.0, 0.0}};
  EXPECT_EQ(flatten(zero), std::vector<double>(4, 0.0));
  const ComplexVec w{{1.0, -2.0}, {0.5, 4.0}};
  EXPECT_DOUBLE_EQ(cosine(flatten(w), flatten(w)), 1.0);
}

// A table with n_users users and n_items items filled with random values.
EmbeddingTable random_table(Gen& g, std::size_t n_users, std::size_t n_items, std::size_t dim) {
  EntityIndex index;
  for (std::size_t u = 0; u < n_users; ++u) index.intern(EntityKind::User, "u" + std::to_string(u));
  for (std::size_t i = 0; i < n_items; ++i) index.intern(EntityKind::Item, "i" + std::to_string(i));
  EmbeddingTable table(std::move(index), dim, Scorer::ComplEx);
  testing::randomize(table, g);
  return table;
}

std::vector<std::int32_t> oracle_recommend(const EmbeddingTable& t, std::int32_t user,
                                           const std::vector<std::int32_t>& candidates,
                                           std::size_t k) {
  const auto u = testing::row_copy(t.entity({EntityKind::User, user}));
  std::vector<std::pair<std::int32_t, double>> scored;
  for (std::int32_t c : candidates) {
    scored.emplace_back(c, testing::brute_cosine(u, testing::row_copy(t.entity({EntityKind::Item, c}))));
  }
  return testing::brute_rank(std::move(scored), k);
}

TEST(RecommendEmbedding, IdenticalVectorRanksFirst) {
  Gen g(2);
  auto table = random_table(g, 2, 20, 4);
  const auto user = testing::row_copy(table.entity({EntityKind::User, 1}));
  std::copy(user.begin(), user.end(), table.row(table.row_of(Node{EntityKind::Item, 13})).begin());
  const auto candidates = all_ids(table.entities(), EntityKind::Item);
  const auto list = recommend_embedding(table, 1, candidates, 5);
  EXPECT_EQ(list.entries.front().id, 13);
  EXPECT_DOUBLE_EQ(list.entries.front().score, 1.0);
  EXPECT_EQ(list.user, 1);
}

TEST(RecommendEmbedding, KLargerThanCandidates) {
  Gen g(3);
  const auto table = random_table(g, 1, 6, 3);
  const std::vector<std::int32_t> candidates{4, 0, 2};
  const auto list = recommend_embedding(table, 0, candidates, 10);
  EXPECT_EQ(list.entries.size(), 3u);
  auto ids = list.items();
  std::sort(ids.begin(), ids.end());
  EXPECT_EQ(ids, (std::vector<std::int32_t>{0, 2, 4}));
}

TEST(RecommendEmbedding, PropertyMatchesFullSortOracle) {
  Gen g(4);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t n_items = static_cast<std::size_t>(g.integer(1, 1000));
    const auto table = random_table(g, 3, n_items, static_cast<std::size_t>(g.integer(1, 6)));
    std::vector<std::int32_t> candidates;
    for (std::size_t i = 0; i < n_items; ++i) {
      if (g.coin(0.7)) candidates.push_back(static_cast<std::int32_t>(i));
    }
    if (candidates.empty()) continue;
    std::shuffle(candidates.begin(), candidates.end(), g.rng);
    const std::size_t k = static_cast<std::size_t>(g.integer(1, static_cast<int>(n_items)));
    const std::int32_t user = g.integer(0, 2);
    const auto list = recommend_embedding(table, user, candidates, k);
    EXPECT_EQ(list.items(), oracle_recommend(table, user, candidates, k));
    for (std::size_t i = 1; i < list.entries.size(); ++i) {
      EXPECT_GE(list.entries[i - 1].score, list.entries[i].score);
    }
  }
}

TEST(RecommendEmbedding, TiesBreakByAscendingId) {
  Gen g(5);
  auto table = random_table(g, 1, 5, 2);
  const auto item = testing::row_copy(table.entity({EntityKind::Item, 0}));
  for (std::int32_t i = 1; i < 5; ++i) {
    std::copy(item.begin(), item.end(), table.row(table.row_of(Node{EntityKind::Item, i})).begin());
  }
  const std::vector<std::int32_t> candidates{3, 1, 4, 0, 2};
  EXPECT_EQ(recommend_embedding(table, 0, candidates, 5).items(),
            (std::vector<std::int32_t>{0, 1, 2, 3, 4}));
}

TEST(RecommendEmbedding, PropertyPositiveScaleInvariance) {
  Gen g(6);
  for (int trial = 0; trial < 50; ++trial) {
    auto table = random_table(g, 2, 60, 4);
    const auto candidates = all_ids(table.entities(), EntityKind::Item);
    const auto before = recommend_embedding(table, 0, candidates, 20).items();
    // a different positive factor per row
    for (std::size_t r = 0; r < table.num_rows(); ++r) {
      const double factor = std::pow(10.0, g.real(-3.0, 3.0));
      for (double& x : table.row(r)) x *= factor;
    }
    EXPECT_EQ(recommend_embedding(table, 0, candidates, 20).items(), before);
  }
}

TEST(RecommendEmbedding, Errors) {
  Gen g(7);
  const auto table = random_table(g, 2, 4, 2);
  const std::vector<std::int32_t> candidates{0, 1};
  EXPECT_THROW(recommend_embedding(table, 5, candidates, 1), std::out_of_range);
  EXPECT_THROW(recommend_embedding(table, "nobody", candidates, 1), std::out_of_range);
  EXPECT_THROW(recommend_embedding(table, 0, candidates, 0), std::invalid_argument);
  const std::vector<std::int32_t> bad{0, 9};
  EXPECT_THROW(recommend_embedding(table, 0, bad, 1), std::out_of_range);
}

TEST(RecommendRandom, SeededAndPermutation) {
  std::vector<std::int32_t> candidates(25);
  std::iota(candidates.begin(), candidates.end(), 0);
  const auto a = recommend_random(candidates, 25, 99), b = recommend_random(candidates, 25, 99);
  EXPECT_EQ(a, b);
  auto ids = a.items();
  std::sort(ids.begin(), ids.end());
  EXPECT_EQ(ids, candidates);
  EXPECT_NE(recommend_random(candidates, 25, 100).items(), a.items());
  EXPECT_EQ(recommend_random(candidates, 4, 99).entries.size(), 4u);
}

TEST(RecommendRandom, UniformFirstPick) {
  const std::vector<std::int32_t> candidates{7, 8, 9};
  std::map<std::int32_t, int> counts;
  for (std::uint64_t seed = 0; seed < 10000; ++seed) {
    ++counts[recommend_random(candidates, 1, seed).entries[0].id];
  }
  for (std::int32_t c : candidates) EXPECT_NEAR(counts[c] / 10000.0, 1.0 / 3.0, 0.02);
}

TEST(RecommendPop, CountsThenIds) {
  const std::vector<std::size_t> counts{3, 1};
  const std::vector<std::int32_t> candidates{1, 0};
  EXPECT_EQ(recommend_pop(counts, candidates, 1).items(), (std::vector<std::int32_t>{0}));
  const std::vector<std::size_t> equal{2, 2, 2};
  const std::vector<std::int32_t> three{2, 0, 1};
  EXPECT_EQ(recommend_pop(equal, three, 3).items(), (std::vector<std::int32_t>{0, 1, 2}));
  const std::vector<std::int32_t> with_unseen{5, 1, 0};
  const auto list = recommend_pop(counts, with_unseen, 3);
  EXPECT_EQ(list.items(), (std::vector<std::int32_t>{0, 1, 5}));
  EXPECT_EQ(list.entries.back().score, 0.0);
  EXPECT_EQ(list.entries.front().score, 3.0);
}

TEST(WriteRecommendations, TsvRows) {
  Gen g(8);
  const auto table = random_table(g, 1, 3, 2);
  RecommendationList list{0, {{2, 0.5}, {0, 0.25}}};
  std::ostringstream out;
  write_recommendations(out, list, table.entities());
  EXPECT_EQ(out.str(), "u0\t1\ti2\t0.5\nu0\t2\ti0\t0.25\n");
}

TEST(Als, RankOneFixture) {
  const std::vector<RatingEntry> ratings = {{0, 0, 4.0}, {0, 1, 2.0}, {1, 0, 2.0}, {1, 1, 1.0}};
  const auto model = mf_als_train(ratings, 2, 2, {1, 1e-6, 50, 3});
  EXPECT_LT(testing::rmse(model, ratings), 1e-3);
}

TEST(Als, PropertyObjectiveMonotone) {
  Gen g(9);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n_users = static_cast<std::size_t>(g.integer(1, 12));
    const std::size_t n_items = static_cast<std::size_t>(g.integer(1, 12));
    std::vector<RatingEntry> ratings;
    for (std::size_t u = 0; u < n_users; ++u) {
      for (std::size_t i = 0; i < n_items; ++i) {
        if (g.coin(0.5) || i == u % n_items) {
          ratings.push_back({static_cast<std::int32_t>(u), static_cast<std::int32_t>(i),
                             static_cast<double>(g.integer(1, 5))});
        }
      }
    }
    const AlsConfig cfg{static_cast<std::size_t>(g.integer(1, 6)), g.real(0.01, 1.0), 8,
                        static_cast<std::uint64_t>(trial)};
    std::vector<double> trace;
    const auto model = mf_als_train(ratings, n_users, n_items, cfg,
                                    [&](double obj) { trace.push_back(obj); });
    ASSERT_EQ(trace.size(), 16u);
    for (std::size_t i = 1; i < trace.size(); ++i) {
      EXPECT_LE(trace[i], trace[i - 1] + 1e-9 * std::max(1.0, trace[i - 1]));
    }
    EXPECT_NEAR(trace.back(), als_objective(model, ratings, cfg.regularization), 1e-9);
  }
}

TEST(Als, SingleRatingFitsExactly) {
  const std::vector<RatingEntry> ratings = {{0, 0, 3.7}};
  const auto model = mf_als_train(ratings, 1, 1, {1, 1e-9, 30, 1});
  EXPECT_NEAR(model.predict(0, 0), 3.7, 1e-6);
}

TEST(Als, RecommendsTheLikedItemFirst) {
  const std::vector<RatingEntry> ratings = {{0, 0, 5.0}, {0, 1, 1.0}};
  const auto model = mf_als_train(ratings, 1, 2, {2, 0.01, 20, 4});
  const std::vector<std::int32_t> candidates{1, 0};
  EXPECT_EQ(recommend_mf(model, 0, candidates, 2).items(), (std::vector<std::int32_t>{0, 1}));
}

TEST(Als, TiesFollowIds) {
  FactorModel model{Eigen::MatrixXd::Ones(1, 2), Eigen::MatrixXd::Ones(3, 2)};
  const std::vector<std::int32_t> candidates{2, 0, 1};
  EXPECT_EQ(recommend_mf(model, 0, candidates, 3).items(), (std::vector<std::int32_t>{0, 1, 2}));
}

TEST(Als, ContractErrors) {
  FactorModel model{Eigen::MatrixXd::Ones(1, 2), Eigen::MatrixXd::Ones(3, 2)};
  const std::vector<std::int32_t> candidates{0};
  EXPECT_THROW(recommend_mf(model, 0, candidates, 0), std::invalid_argument);
  EXPECT_THROW(recommend_mf(model, 4, candidates, 1), std::out_of_range);

  // two factors from one observation per row cannot be pinned down without ridge
  const std::vector<RatingEntry> ratings = {{0, 0, 4.0}};
  try {
    mf_als_train(ratings, 1, 1, {2, 0.0, 3, 1});
    FAIL();
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("regularization > 0"), std::string::npos);
  }
  EXPECT_NO_THROW(mf_als_train(ratings, 1, 1, {2, 0.1, 3, 1}));
  EXPECT_THROW(mf_als_train(ratings, 1, 1, {0, 0.1, 3, 1}), std::invalid_argument);
  const std::vector<RatingEntry> stray = {{0, 5, 4.0}};
  EXPECT_THROW(mf_als_train(stray, 1, 1, {1, 0.1, 3, 1}), std::out_of_range);
}

}  // namespace
}  // namespace kgrec
