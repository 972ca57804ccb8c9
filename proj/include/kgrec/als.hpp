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
// Explicit-feedback matrix factorization fitted by alternating least squares.
// Objective over observed entries only:
//
//   sum (r_ui - p_u . q_i)^2 + mu * (|P|_F^2 + |Q|_F^2)
//
// Each half-sweep solves every row's ridge subproblem exactly, so the
// objective never increases.
#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "kgrec/recsys.hpp"

namespace kgrec {

struct RatingEntry {
  std::int32_t user = 0;
  std::int32_t item = 0;
  double value = 0.0;
};

struct AlsConfig {
  std::size_t factors = 200;
  double regularization = 0.1;
  std::size_t iterations = 15;
  std::uint64_t seed = 0;
};

struct FactorModel {
  Eigen::MatrixXd users;  // n_users x f
  Eigen::MatrixXd items;  // n_items x f

  std::size_t factors() const { return static_cast<std::size_t>(users.cols()); }
  double predict(std::int32_t user, std::int32_t item) const {
    return users.row(user).dot(items.row(item));
  }
};

inline double als_objective(const FactorModel& m, std::span<const RatingEntry> ratings,
                            double regularization) {
  double loss = 0.0;
  for (const auto& r : ratings) {
    const double e = r.value - m.predict(r.user, r.item);
    loss += e * e;
  }
  return loss + regularization * (m.users.squaredNorm() + m.items.squaredNorm());
}

namespace detail {

// Solves every row of `target` against the fixed `other` factors.
// `by_row[i]` lists (other index, value) pairs observed for row i.
inline void als_half_sweep(Eigen::MatrixXd& target, const Eigen::MatrixXd& other,
                           const std::vector<std::vector<std::pair<std::int32_t, double>>>& by_row,
                           double regularization) {
  const Eigen::Index f = target.cols();
  Eigen::MatrixXd gram(f, f);
  Eigen::VectorXd rhs(f);
  for (std::size_t row = 0; row < by_row.size(); ++row) {
    gram.setZero();
    rhs.setZero();
    for (const auto& [col, value] : by_row[row]) {
      const auto v = other.row(col).transpose();
      gram.selfadjointView<Eigen::Lower>().rankUpdate(v);
      rhs.noalias() += value * v;
    }
    gram.diagonal().array() += regularization;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
    const auto pivots = ldlt.vectorD().cwiseAbs();
    const double scale = std::max(1.0, pivots.maxCoeff());
    if (ldlt.info() != Eigen::Success || pivots.minCoeff() <= 1e-12 * scale) {
      throw std::runtime_error(
          "singular normal equations in ALS; use a regularization > 0");
    }
    target.row(static_cast<Eigen::Index>(row)) = ldlt.solve(rhs).transpose();
  }
}

}  // namespace detail

// `on_half_sweep` receives the objective after every half-sweep.
inline FactorModel mf_als_train(std::span<const RatingEntry> ratings, std::size_t n_users,
                                std::size_t n_items, const AlsConfig& cfg,
                                const std::function<void(double)>& on_half_sweep = {}) {
  if (cfg.factors < 1) throw std::invalid_argument("factors must be >= 1");
  if (!(cfg.regularization >= 0.0)) throw std::invalid_argument("regularization must be >= 0");

  std::vector<std::vector<std::pair<std::int32_t, double>>> by_user(n_users), by_item(n_items);
  for (const auto& r : ratings) {
    if (r.user < 0 || static_cast<std::size_t>(r.user) >= n_users || r.item < 0 ||
        static_cast<std::size_t>(r.item) >= n_items) {
      throw std::out_of_range("rating references an unknown user or item");
    }
    by_user[r.user].emplace_back(r.item, r.value);
    by_item[r.item].emplace_back(r.user, r.value);
  }

  const auto f = static_cast<Eigen::Index>(cfg.factors);
  FactorModel m{Eigen::MatrixXd(n_users, f), Eigen::MatrixXd(n_items, f)};
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> gauss(0.0, 1.0 / std::sqrt(static_cast<double>(f)));
  for (Eigen::Index i = 0; i < m.users.size(); ++i) m.users.data()[i] = gauss(rng);
  for (Eigen::Index i = 0; i < m.items.size(); ++i) m.items.data()[i] = gauss(rng);

  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    detail::als_half_sweep(m.users, m.items, by_user, cfg.regularization);
    if (on_half_sweep) on_half_sweep(als_objective(m, ratings, cfg.regularization));
    detail::als_half_sweep(m.items, m.users, by_item, cfg.regularization);
    if (on_half_sweep) on_half_sweep(als_objective(m, ratings, cfg.regularization));
  }
  return m;
}

inline RecommendationList recommend_mf(const FactorModel& model, std::int32_t user,
                                       std::span<const std::int32_t> candidates,
                                       std::size_t k) {
  detail::require_k(k);
  if (user < 0 || user >= model.users.rows()) throw std::out_of_range("unknown user");
  std::vector<ScoredId> scored;
  scored.reserve(candidates.size());
  for (std::int32_t item : candidates) {
    const double s = item >= 0 && item < model.items.rows() ? model.predict(user, item) : 0.0;
    scored.push_back({item, s});
  }
  return {user, detail::top_k(std::move(scored), k)};
}

}  // namespace kgrec
