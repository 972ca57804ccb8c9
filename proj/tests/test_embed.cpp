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
#include <array>
#include <cmath>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "oracles.hpp"

namespace kgrec {
namespace {

using testing::Gen;

constexpr std::array<Scorer, 3> kScorers = {Scorer::ComplEx, Scorer::TransE, Scorer::DistMult};

ComplexVec random_vec(Gen& g, std::size_t d) { return {g.reals(d), g.reals(d)}; }

TEST(Score, ComplexZeroRelationAnnihilates) {
  Gen g(1);
  const ComplexVec zero{std::vector<double>(4), std::vector<double>(4)};
  for (int i = 0; i < 10; ++i) {
    EXPECT_EQ(score(Scorer::ComplEx, random_vec(g, 4), zero, random_vec(g, 4)), 0.0);
  }
}

TEST(Score, ComplexHandWorkedValue) {
  const ComplexVec s{{1.0, 0.0}, {0.0, 1.0}};  // (1, i)
  const ComplexVec r{{1.0, 1.0}, {0.0, 0.0}};
  EXPECT_DOUBLE_EQ(score(Scorer::ComplEx, s, r, s), 2.0);
  EXPECT_DOUBLE_EQ(testing::complex_score(s, r, s), 2.0);
}

TEST(Score, TransEExactTranslationIsMaximal) {
  Gen g(2);
  const ComplexVec s = random_vec(g, 5), r = random_vec(g, 5);
  ComplexVec d = s;
  for (std::size_t k = 0; k < 5; ++k) {
    d.re[k] += r.re[k];
    d.im[k] += r.im[k];
  }
  EXPECT_NEAR(score(Scorer::TransE, s, r, d), 0.0, 1e-15);
  for (int i = 0; i < 20; ++i) EXPECT_LT(score(Scorer::TransE, s, r, random_vec(g, 5)), 0.0);
}

TEST(Score, DimensionMismatchThrows) {
  Gen g(3);
  EXPECT_THROW(score(Scorer::ComplEx, random_vec(g, 3), random_vec(g, 3), random_vec(g, 4)),
               std::invalid_argument);
}

TEST(Score, PropertyAgreesWithStdComplexOracle) {
  Gen g(4);
  for (Scorer scorer : kScorers) {
    for (int trial = 0; trial < 500; ++trial) {
      const std::size_t d = static_cast<std::size_t>(g.integer(1, 12));
      const auto s = random_vec(g, d), r = random_vec(g, d), t = random_vec(g, d);
      EXPECT_NEAR(score(scorer, s, r, t), testing::oracle_score(scorer, s, r, t), 1e-12);
    }
  }
}

TEST(Score, PropertyComplexIsLinearInEachArgument) {
  Gen g(5);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t d = static_cast<std::size_t>(g.integer(1, 8));
    const auto s = random_vec(g, d), r = random_vec(g, d), t = random_vec(g, d);
    const double alpha = g.real(-3.0, 3.0);
    auto scale = [&](ComplexVec v) {
      for (auto& x : v.re) x *= alpha;
      for (auto& x : v.im) x *= alpha;
      return v;
    };
    const double base = score(Scorer::ComplEx, s, r, t);
    EXPECT_NEAR(score(Scorer::ComplEx, scale(s), r, t), alpha * base, 1e-12);
    EXPECT_NEAR(score(Scorer::ComplEx, s, scale(r), t), alpha * base, 1e-12);
    EXPECT_NEAR(score(Scorer::ComplEx, s, r, scale(t)), alpha * base, 1e-12);
  }
}

TEST(Score, PropertyDistMultSymmetricComplexNot) {
  Gen g(6);
  std::size_t asymmetric = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t d = static_cast<std::size_t>(g.integer(1, 8));
    const auto s = random_vec(g, d), r = random_vec(g, d), t = random_vec(g, d);
    EXPECT_NEAR(score(Scorer::DistMult, s, r, t), score(Scorer::DistMult, t, r, s), 1e-12);
    if (std::fabs(score(Scorer::ComplEx, s, r, t) - score(Scorer::ComplEx, t, r, s)) > 1e-9) {
      ++asymmetric;
    }
  }
  EXPECT_EQ(asymmetric, 200u);
}

TEST(MarginLoss, Examples) {
  const std::vector<double> low{0.2}, high{1.0};
  EXPECT_DOUBLE_EQ(margin_loss(1.0, low, 0.5), 0.0);
  EXPECT_DOUBLE_EQ(margin_loss(0.2, high, 0.5), 1.3);
  const std::vector<double> tie{0.7};
  EXPECT_DOUBLE_EQ(margin_loss(0.7, tie, 0.1), 0.1);
}

TEST(MarginLoss, PropertyNonNegativeZeroIffAllTrail) {
  Gen g(7);
  for (int trial = 0; trial < 1000; ++trial) {
    const double pos = g.real(-2, 2), margin = g.real(0.01, 1.0);
    const auto negs = g.reals(static_cast<std::size_t>(g.integer(0, 6)), -2, 2);
    const double loss = margin_loss(pos, negs, margin);
    EXPECT_GE(loss, 0.0);
    bool all_trail = true;
    for (double n : negs) all_trail = all_trail && pos - n >= margin;
    EXPECT_EQ(loss == 0.0, all_trail);
  }
}

TEST(LossGradient, InactiveTermsGiveZero) {
  const auto graph = build_graph(testing::three_user_ratings(), testing::three_user_opinions(),
                                 GraphVariant::GERA);
  EmbeddingTable table(graph.entities(), 2, Scorer::ComplEx);
  Gen g(8);
  testing::randomize(table, g);
  const Edge pos = graph.edges()[0];
  const std::vector<Edge> negs = {graph.edges()[1]};
  const double gap = edge_score(table, pos) - edge_score(table, negs[0]);
  // a margin far below the current gap keeps the hinge at zero
  const SparseGradient grad = loss_gradient(table, pos, negs, 1e-3);
  if (gap >= 1e-3) {
    EXPECT_TRUE(grad.is_zero());
  } else {
    const SparseGradient flipped = loss_gradient(table, negs[0], std::vector<Edge>{pos}, 1e-3);
    EXPECT_TRUE(flipped.is_zero());
  }
}

TEST(LossGradient, SingleTermOneDimensionMatchesFiniteDifference) {
  const auto graph = build_graph({{"u", "i", 5.0, {}}, {"v", "i", 1.0, {}}}, {}, GraphVariant::GER);
  EmbeddingTable table(graph.entities(), 1, Scorer::ComplEx);
  Gen g(9);
  testing::randomize(table, g);
  const Edge pos = graph.edges()[0];
  const std::vector<Edge> negs = {{{EntityKind::User, 1}, pos.relation, pos.destination}};
  // large margin guarantees the term is active
  const double margin = 10.0;
  const SparseGradient grad = loss_gradient(table, pos, negs, margin);
  ASSERT_FALSE(grad.is_zero());
  EXPECT_EQ(grad.rows.size(), 4u);  // two users, one item, one relation
  const double h = 1e-5;
  for (std::size_t r = 0; r < table.num_rows(); ++r) {
    for (std::size_t k = 0; k < 2; ++k) {
      const double saved = table.row(r)[k];
      table.row(r)[k] = saved + h;
      const double up = testing::total_loss(table, pos, negs, margin);
      table.row(r)[k] = saved - h;
      const double down = testing::total_loss(table, pos, negs, margin);
      table.row(r)[k] = saved;
      const auto it = grad.rows.find(r);
      const double analytic = it == grad.rows.end() ? 0.0 : it->second[k];
      EXPECT_NEAR(analytic, (up - down) / (2 * h), 1e-6) << "row " << r << " k " << k;
    }
  }
}

TEST(LossGradient, PropertyFiniteDifferencesAllScorers) {
  for (Scorer scorer : kScorers) {
    for (std::uint64_t seed = 0; seed < 25; ++seed) {
      const std::size_t d = 1 + seed % 8;
      const auto check = testing::gradient_check(scorer, d, 1000 + seed);
      EXPECT_LT(check.relative_error, 1e-4)
          << scorer_token(scorer) << " d=" << d << " seed=" << seed;
    }
  }
}

TEST(LossGradient, OnlyTouchedRowsAppear) {
  Gen g(10);
  for (int trial = 0; trial < 100; ++trial) {
    const auto graph = build_graph(g.ratings(20, 5, 5), g.opinions(20, 5, 5, 4), GraphVariant::GERA);
    EmbeddingTable table(graph.entities(), 3, Scorer::ComplEx);
    testing::randomize(table, g);
    const Edge pos = graph.edges()[static_cast<std::size_t>(
        g.integer(0, static_cast<int>(graph.edges().size()) - 1))];
    const auto negs = sample_negatives(pos, graph, 4, g.rng);
    std::set<std::size_t> allowed = {table.row_of(pos.source), table.row_of(pos.relation),
                                     table.row_of(pos.destination)};
    for (const auto& n : negs) {
      allowed.insert({table.row_of(n.source), table.row_of(n.relation), table.row_of(n.destination)});
    }
    const auto grad = loss_gradient(table, pos, negs, 5.0);
    for (const auto& [row, values] : grad.rows) EXPECT_TRUE(allowed.contains(row));
  }
}

KnowledgeGraph small_graph() {
  return build_graph(generate_synthetic({2, 4, 3, 4, 0.0, 2}).ratings,
                     generate_synthetic({2, 4, 3, 4, 0.0, 2}).opinions, GraphVariant::GERA);
}

TEST(SampleNegatives, HalfCorruptedHalfRandom) {
  const auto graph = small_graph();
  std::mt19937_64 rng(3);
  for (const auto& edge : graph.edges()) {
    const auto negs = sample_negatives(edge, graph, 4, rng);
    ASSERT_EQ(negs.size(), 4u);
    for (std::size_t i = 0; i < 4; ++i) {
      EXPECT_EQ(negs[i].relation, edge.relation);
      EXPECT_TRUE(satisfies_type_constraints(negs[i]));
    }
    for (std::size_t i = 0; i < 2; ++i) {
      // a corrupted negative keeps one endpoint of the positive
      EXPECT_TRUE(negs[i].source == edge.source || negs[i].destination == edge.destination);
    }
  }
}

TEST(SampleNegatives, CorruptionRespectsKinds) {
  const auto graph = small_graph();
  std::mt19937_64 rng(4);
  for (const auto& edge : graph.edges()) {
    if (edge.relation != Relation::HighRating) continue;
    for (const auto& n : sample_negatives(edge, graph, 10, rng)) {
      EXPECT_EQ(n.destination.kind, EntityKind::Item);
      EXPECT_EQ(n.source.kind, EntityKind::User);
    }
  }
}

TEST(SampleNegatives, SeededSequenceRepeats) {
  const auto graph = small_graph();
  std::mt19937_64 a(5), b(5);
  for (const auto& edge : graph.edges()) {
    EXPECT_EQ(sample_negatives(edge, graph, 6, a), sample_negatives(edge, graph, 6, b));
  }
}

TEST(SampleNegatives, AvoidsPositivesWhenPossible) {
  const auto graph = small_graph();
  std::mt19937_64 rng(6);
  std::size_t positives = 0, total = 0;
  for (int rep = 0; rep < 20; ++rep) {
    for (const auto& edge : graph.edges()) {
      for (const auto& n : sample_negatives(edge, graph, 4, rng)) {
        positives += graph.has_edge(n) ? 1 : 0;
        ++total;
      }
    }
  }
  // a dense graph leaves some positives after the retry budget, but few
  EXPECT_LT(static_cast<double>(positives) / static_cast<double>(total), 0.05);
}

TEST(SampleNegatives, ContractErrors) {
  const auto graph = small_graph();
  std::mt19937_64 rng(7);
  EXPECT_THROW(sample_negatives(graph.edges()[0], graph, 3, rng), std::invalid_argument);
  EXPECT_THROW(sample_negatives(graph.edges()[0], KnowledgeGraph(), 2, rng), std::invalid_argument);
  const auto ger = build_graph({{"u", "i", 4, {}}}, {}, GraphVariant::GER);
  const Edge likes{{EntityKind::User, 0}, Relation::Likes, {EntityKind::Aspect, 0}};
  EXPECT_THROW(sample_negatives(likes, ger, 2, rng), std::invalid_argument);
}

TEST(TrainConfig, Validation) {
  TrainConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.negatives = 3;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.negatives = 0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.margin = 0.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.learning_rate = -1.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.dim = 0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TrainConfig toy_config() {
  TrainConfig cfg;
  cfg.dim = 8;
  cfg.epochs = 200;
  cfg.negatives = 4;
  cfg.batch_size = 4;
  cfg.learning_rate = 0.1;
  cfg.seed = 11;
  return cfg;
}

KnowledgeGraph ten_edge_graph() {
  std::vector<RatingRecord> ratings;
  for (int u = 0; u < 5; ++u) {
    ratings.push_back({"u" + std::to_string(u), "i" + std::to_string(u), 5.0, {}});
    ratings.push_back({"u" + std::to_string(u), "i" + std::to_string((u + 1) % 5), 1.0, {}});
  }
  return build_graph(ratings, {}, GraphVariant::GER);
}

TEST(Train, SameSeedIsBitIdentical) {
  const auto graph = small_graph();
  TrainConfig cfg = toy_config();
  cfg.epochs = 20;
  const auto a = train(graph, cfg), b = train(graph, cfg);
  EXPECT_EQ(a.table, b.table);
  EXPECT_EQ(a.epoch_loss, b.epoch_loss);
  std::ostringstream sa, sb;
  write_embeddings(sa, a.table);
  write_embeddings(sb, b.table);
  EXPECT_EQ(sa.str(), sb.str());
  cfg.seed = 12;
  EXPECT_FALSE(train(graph, cfg).table == a.table);
}

TEST(Train, ToyGraphLossDecreases) {
  const auto graph = ten_edge_graph();
  ASSERT_EQ(graph.edges().size(), 10u);
  for (Scorer scorer : kScorers) {
    TrainConfig cfg = toy_config();
    cfg.scorer = scorer;
    const auto result = train(graph, cfg);
    ASSERT_EQ(result.epoch_loss.size(), 200u);
    const auto mean = [](auto first, auto last) {
      double s = 0.0;
      for (auto it = first; it != last; ++it) s += *it;
      return s / static_cast<double>(last - first);
    };
    const auto& trace = result.epoch_loss;
    EXPECT_LT(mean(trace.end() - 10, trace.end()), mean(trace.begin(), trace.begin() + 10))
        << scorer_token(scorer);
  }
}

TEST(Train, SgdAlsoLearns) {
  TrainConfig cfg = toy_config();
  cfg.optimizer = Optimizer::SGD;
  const auto trace = train(ten_edge_graph(), cfg).epoch_loss;
  EXPECT_LT(trace.back(), trace.front());
}

TEST(Train, InitialisationScale) {
  const auto graph = small_graph();
  TrainConfig cfg = toy_config();
  cfg.dim = 64;
  cfg.epochs = 0;
  const auto table = train(graph, cfg).table;
  double ss = 0.0;
  for (double x : table.data()) ss += x * x;
  const double sd = std::sqrt(ss / static_cast<double>(table.data().size()));
  EXPECT_NEAR(sd, 1.0 / 8.0, 0.01);
}

TEST(Train, UntouchedRowsNeverMove) {
  // A rating-only graph never samples opinion relations.
  const auto graph = ten_edge_graph();
  TrainConfig cfg = toy_config();
  cfg.epochs = 30;
  TrainConfig none = cfg;
  none.epochs = 0;
  const auto before = train(graph, none).table;
  const auto after = train(graph, cfg).table;
  for (Relation r : kAllRelations) {
    if (is_rating_relation(r)) {
      EXPECT_NE(testing::row_copy(before.relation(r)), testing::row_copy(after.relation(r)));
    } else {
      EXPECT_EQ(testing::row_copy(before.relation(r)), testing::row_copy(after.relation(r)));
    }
  }
}

TEST(Train, DistMultImaginaryHalvesStayZero) {
  TrainConfig cfg = toy_config();
  cfg.scorer = Scorer::DistMult;
  const auto table = train(small_graph(), cfg).table;
  for (std::size_t r = 0; r < table.num_rows(); ++r) {
    const auto row = table.row(r);
    for (std::size_t k = cfg.dim; k < row.size(); ++k) EXPECT_EQ(row[k], 0.0);
  }
}

TEST(Train, NonFiniteLossNamesEpochAndBatch) {
  TrainConfig cfg = toy_config();
  cfg.optimizer = Optimizer::SGD;
  cfg.learning_rate = 1e300;
  try {
    train(small_graph(), cfg);
    FAIL() << "expected divergence";
  } catch (const std::runtime_error& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("epoch"), std::string::npos);
    EXPECT_NE(what.find("batch"), std::string::npos);
  }
}

TEST(Train, ParallelModeKeepsInvariants) {
  const auto graph = small_graph();
  TrainConfig cfg = toy_config();
  cfg.workers = 4;
  cfg.epochs = 60;
  const auto result = train(graph, cfg);
  for (double x : result.table.data()) ASSERT_TRUE(std::isfinite(x));
  EXPECT_LT(result.epoch_loss.back(), result.epoch_loss.front());
  EXPECT_EQ(result.table.entities(), graph.entities());
}

TEST(Train, EmptyGraphRejected) {
  EXPECT_THROW(train(KnowledgeGraph(), toy_config()), std::invalid_argument);
}

EmbeddingTable read_back(const EmbeddingTable& t) {
  std::stringstream s;
  write_embeddings(s, t);
  return read_embeddings(s);
}

TEST(EmbeddingIo, RandomTableRoundTripsExactly) {
  Gen g(12);
  for (Scorer scorer : kScorers) {
    const auto graph = build_graph(g.ratings(30, 6, 6), g.opinions(30, 6, 6, 3), GraphVariant::GERA);
    EmbeddingTable table(graph.entities(), 5, scorer);
    for (double& x : table.data()) x = g.normal() * std::pow(10.0, g.integer(-30, 30));
    const auto back = read_back(table);
    EXPECT_EQ(back, table);
    EXPECT_EQ(back.scorer(), scorer);
  }
}

TEST(EmbeddingIo, EmptyTableRoundTrips) {
  const EmbeddingTable table(EntityIndex{}, 3, Scorer::ComplEx);
  const auto back = read_back(table);
  EXPECT_EQ(back, table);
  EXPECT_EQ(back.entities().total(), 0u);
}

TEST(EmbeddingIo, TruncatedRowNamesTheLine) {
  const auto graph = ten_edge_graph();
  const auto table = train(graph, [] {
                       TrainConfig c = toy_config();
                       c.dim = 2;
                       c.epochs = 1;
                       return c;
                     }()).table;
  std::stringstream s;
  write_embeddings(s, table);
  std::string text = s.str();
  const std::size_t second_line = text.find('\n') + 1;
  const std::size_t end = text.find('\n', second_line);
  const std::size_t last_space = text.rfind(' ', end);
  text.erase(last_space, end - last_space);
  std::istringstream in(text);
  try {
    read_embeddings(in);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(EmbeddingIo, HeaderErrors) {
  const auto parse = [](const std::string& text) {
    std::istringstream in(text);
    return read_embeddings(in);
  };
  EXPECT_THROW(parse("u:a\t1 2\n"), ParseError);
  EXPECT_THROW(parse("#dim=x scorer=complex\n"), ParseError);
  EXPECT_THROW(parse("#dim=1 scorer=rescal\n"), ParseError);
  EXPECT_THROW(parse("#dim=1 scorer=complex\nu:a\t1 2\n"), ParseError);  // missing relations
}

}  // namespace
}  // namespace kgrec
