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
// Complex-valued knowledge-graph embeddings trained with a margin ranking
// loss over positive edges and sampled negatives.
//
// Storage: every entity and relation owns one row of 2*dim doubles laid out
// as [re_1 .. re_d | im_1 .. im_d]. Entity rows come first, ordered by the
// graph's global entity index, followed by one row per relation.
#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "kgrec/corpus.hpp"
#include "kgrec/detail/text.hpp"
#include "kgrec/kgraph.hpp"

namespace kgrec {

enum class Scorer : std::uint8_t { ComplEx, TransE, DistMult };
enum class Optimizer : std::uint8_t { Adagrad, SGD };

constexpr std::string_view scorer_token(Scorer s) {
  switch (s) {
    case Scorer::ComplEx:
      return "complex";
    case Scorer::TransE:
      return "transe";
    case Scorer::DistMult:
      return "distmult";
  }
  return "";
}

inline std::optional<Scorer> parse_scorer(std::string_view token) {
  const std::string t = detail::lowercase(token);
  for (Scorer s : {Scorer::ComplEx, Scorer::TransE, Scorer::DistMult}) {
    if (scorer_token(s) == t) return s;
  }
  return std::nullopt;
}

constexpr std::string_view optimizer_token(Optimizer o) {
  return o == Optimizer::Adagrad ? "adagrad" : "sgd";
}

inline std::optional<Optimizer> parse_optimizer(std::string_view token) {
  const std::string t = detail::lowercase(token);
  if (t == "adagrad") return Optimizer::Adagrad;
  if (t == "sgd") return Optimizer::SGD;
  return std::nullopt;
}

struct ComplexVec {
  std::vector<double> re;
  std::vector<double> im;

  std::size_t dim() const { return re.size(); }
  friend bool operator==(const ComplexVec&, const ComplexVec&) = default;
};

// Non-owning view over one stored row ([re | im]).
struct ComplexView {
  std::span<const double> re;
  std::span<const double> im;

  ComplexView() = default;
  ComplexView(std::span<const double> re_part, std::span<const double> im_part)
      : re(re_part), im(im_part) {}
  ComplexView(const ComplexVec& v) : re(v.re), im(v.im) {}  // NOLINT

  static ComplexView from_row(std::span<const double> row) {
    const std::size_t d = row.size() / 2;
    return {row.first(d), row.subspan(d)};
  }
};

namespace detail {

// Raw-row kernels shared by the public API and the trainer. Rows are
// [re | im] with `dim` entries per half.

inline double score_rows(Scorer scorer, std::size_t dim, const double* s,
                         const double* r, const double* d) {
  double total = 0.0;
  switch (scorer) {
    case Scorer::ComplEx:
      for (std::size_t k = 0; k < dim; ++k) {
        const double sr = s[k], si = s[dim + k];
        const double rr = r[k], ri = r[dim + k];
        const double dr = d[k], di = d[dim + k];
        total += (sr * rr - si * ri) * dr + (sr * ri + si * rr) * di;
      }
      return total;
    case Scorer::DistMult:
      for (std::size_t k = 0; k < dim; ++k) total += s[k] * r[k] * d[k];
      return total;
    case Scorer::TransE:
      for (std::size_t k = 0; k < 2 * dim; ++k) {
        const double x = s[k] + r[k] - d[k];
        total += x * x;
      }
      return -std::sqrt(total);
  }
  return 0.0;
}

// Adds coeff * d(score)/d(row) into gs, gr, gd.
inline void add_score_gradient(Scorer scorer, std::size_t dim, const double* s,
                               const double* r, const double* d, double coeff,
                               double* gs, double* gr, double* gd) {
  switch (scorer) {
    case Scorer::ComplEx:
      for (std::size_t k = 0; k < dim; ++k) {
        const double sr = s[k], si = s[dim + k];
        const double rr = r[k], ri = r[dim + k];
        const double dr = d[k], di = d[dim + k];
        gs[k] += coeff * (rr * dr + ri * di);
        gs[dim + k] += coeff * (rr * di - ri * dr);
        gr[k] += coeff * (sr * dr + si * di);
        gr[dim + k] += coeff * (sr * di - si * dr);
        gd[k] += coeff * (sr * rr - si * ri);
        gd[dim + k] += coeff * (sr * ri + si * rr);
      }
      return;
    case Scorer::DistMult:
      for (std::size_t k = 0; k < dim; ++k) {
        gs[k] += coeff * r[k] * d[k];
        gr[k] += coeff * s[k] * d[k];
        gd[k] += coeff * s[k] * r[k];
      }
      return;
    case Scorer::TransE: {
      double norm2 = 0.0;
      for (std::size_t k = 0; k < 2 * dim; ++k) {
        const double x = s[k] + r[k] - d[k];
        norm2 += x * x;
      }
      // Non-differentiable at the exact translation; treat as stationary.
      if (norm2 == 0.0) return;
      const double inv = coeff / std::sqrt(norm2);
      for (std::size_t k = 0; k < 2 * dim; ++k) {
        const double g = (s[k] + r[k] - d[k]) * inv;
        gs[k] -= g;
        gr[k] -= g;
        gd[k] += g;
      }
      return;
    }
  }
}

struct RowTriple {
  std::size_t source;
  std::size_t relation;
  std::size_t destination;
};

// Hinge loss of one positive against its negatives; accumulates the
// gradient of the active terms through `grad(row) -> double*`.
template <class RowFn, class GradFn>
double hinge_loss_and_gradient(Scorer scorer, std::size_t dim, double margin,
                               const RowTriple& pos,
                               std::span<const RowTriple> negatives,
                               RowFn&& row, GradFn&& grad) {
  const double pos_score =
      score_rows(scorer, dim, row(pos.source), row(pos.relation), row(pos.destination));
  double loss = 0.0;
  std::size_t active = 0;
  for (const RowTriple& neg : negatives) {
    const double neg_score = score_rows(scorer, dim, row(neg.source),
                                        row(neg.relation), row(neg.destination));
    const double term = neg_score - pos_score + margin;
    if (term <= 0.0) continue;
    loss += term;
    ++active;
    add_score_gradient(scorer, dim, row(neg.source), row(neg.relation),
                       row(neg.destination), 1.0, grad(neg.source),
                       grad(neg.relation), grad(neg.destination));
  }
  if (active > 0) {
    add_score_gradient(scorer, dim, row(pos.source), row(pos.relation),
                       row(pos.destination), -static_cast<double>(active),
                       grad(pos.source), grad(pos.relation), grad(pos.destination));
  }
  return loss;
}

}  // namespace detail

inline double score(Scorer scorer, const ComplexView& s, const ComplexView& r,
                    const ComplexView& d) {
  const std::size_t dim = s.re.size();
  for (const ComplexView* v : {&s, &r, &d}) {
    if (v->re.size() != dim || v->im.size() != dim) {
      throw std::invalid_argument("score: dimension mismatch");
    }
  }
  std::vector<double> rows(6 * dim);
  const auto pack = [&](const ComplexView& v, std::size_t slot) {
    std::copy(v.re.begin(), v.re.end(), rows.begin() + 2 * dim * slot);
    std::copy(v.im.begin(), v.im.end(), rows.begin() + 2 * dim * slot + dim);
  };
  pack(s, 0);
  pack(r, 1);
  pack(d, 2);
  return detail::score_rows(scorer, dim, rows.data(), rows.data() + 2 * dim,
                            rows.data() + 4 * dim);
}

// Sum over negatives of max(f(neg) - f(pos) + margin, 0): positives must beat
// every negative by at least `margin`.
inline double margin_loss(double pos_score, std::span<const double> neg_scores,
                          double margin) {
  double loss = 0.0;
  for (double neg : neg_scores) loss += std::max(neg - pos_score + margin, 0.0);
  return loss;
}

struct TrainConfig {
  std::size_t dim = 400;
  double learning_rate = 0.01;
  double margin = 0.1;
  std::size_t epochs = 50;
  std::size_t negatives = 10;  // per positive; even
  std::size_t batch_size = 1000;
  std::uint64_t seed = 0;
  Optimizer optimizer = Optimizer::Adagrad;
  Scorer scorer = Scorer::ComplEx;
  std::size_t workers = 1;  // 1 = deterministic mode

  void validate() const {
    if (dim < 1) throw std::invalid_argument("dim must be >= 1");
    if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be > 0");
    if (!(margin > 0.0)) throw std::invalid_argument("margin must be > 0");
    if (negatives < 2 || negatives % 2 != 0) {
      throw std::invalid_argument("negatives must be even and >= 2");
    }
    if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
    if (workers < 1) throw std::invalid_argument("workers must be >= 1");
  }
};

class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  EmbeddingTable(EntityIndex entities, std::size_t dim, Scorer scorer)
      : entities_(std::move(entities)),
        dim_(dim),
        scorer_(scorer),
        params_((entities_.total() + kNumRelations) * 2 * dim, 0.0) {
    if (dim == 0) throw std::invalid_argument("embedding dim must be >= 1");
  }

  std::size_t dim() const { return dim_; }
  Scorer scorer() const { return scorer_; }
  const EntityIndex& entities() const { return entities_; }
  std::size_t num_rows() const { return entities_.total() + kNumRelations; }
  std::size_t row_width() const { return 2 * dim_; }

  std::size_t row_of(Node n) const { return entities_.global_index(n); }
  std::size_t row_of(Relation r) const { return entities_.total() + index_of(r); }

  std::optional<Node> find(EntityKind kind, std::string_view key) const {
    return entities_.find(kind, key);
  }

  std::span<const double> row(std::size_t r) const {
    return {params_.data() + r * row_width(), row_width()};
  }
  std::span<double> row(std::size_t r) {
    return {params_.data() + r * row_width(), row_width()};
  }
  std::span<const double> entity(Node n) const { return row(row_of(n)); }
  std::span<const double> relation(Relation r) const { return row(row_of(r)); }

  ComplexView entity_view(Node n) const { return ComplexView::from_row(entity(n)); }
  ComplexView relation_view(Relation r) const {
    return ComplexView::from_row(relation(r));
  }

  std::span<double> data() { return params_; }
  std::span<const double> data() const { return params_; }

  friend bool operator==(const EmbeddingTable&, const EmbeddingTable&) = default;

 private:
  EntityIndex entities_;
  std::size_t dim_ = 0;
  Scorer scorer_ = Scorer::ComplEx;
  std::vector<double> params_;
};

// Gradient restricted to the rows touched by active hinge terms.
struct SparseGradient {
  std::map<std::size_t, std::vector<double>> rows;

  bool is_zero() const {
    for (const auto& [row, g] : rows) {
      for (double v : g) {
        if (v != 0.0) return false;
      }
    }
    return true;
  }
};

inline detail::RowTriple rows_of(const EmbeddingTable& table, const Edge& e) {
  return {table.row_of(e.source), table.row_of(e.relation), table.row_of(e.destination)};
}

inline SparseGradient loss_gradient(const EmbeddingTable& table, const Edge& edge,
                                    std::span<const Edge> negatives, double margin) {
  std::vector<detail::RowTriple> neg_rows;
  neg_rows.reserve(negatives.size());
  for (const Edge& n : negatives) neg_rows.push_back(rows_of(table, n));
  SparseGradient out;
  const std::size_t width = table.row_width();
  detail::hinge_loss_and_gradient(
      table.scorer(), table.dim(), margin, rows_of(table, edge), neg_rows,
      [&](std::size_t r) { return table.row(r).data(); },
      [&](std::size_t r) {
        auto& g = out.rows[r];
        if (g.empty()) g.assign(width, 0.0);
        return g.data();
      });
  return out;
}

inline double edge_score(const EmbeddingTable& table, const Edge& e) {
  return detail::score_rows(table.scorer(), table.dim(), table.entity(e.source).data(),
                            table.relation(e.relation).data(),
                            table.entity(e.destination).data());
}

// Returns n negatives for `edge`: the first n/2 corrupt the source or the
// destination (chosen uniformly) with a uniform entity of the required kind;
// the last n/2 draw both endpoints uniformly and keep edge.relation.
// Candidates equal to a known positive are redrawn up to `max_retries` times.
template <class Rng>
std::vector<Edge> sample_negatives(const Edge& edge, const KnowledgeGraph& graph,
                                   std::size_t n, Rng& rng, int max_retries = 10) {
  if (n % 2 != 0) throw std::invalid_argument("negative count must be even");
  if (graph.empty()) throw std::invalid_argument("cannot sample from an empty graph");
  const EntityKind skind = source_kind(edge.relation);
  const EntityKind dkind = destination_kind(edge.relation);
  const std::size_t n_src = graph.entities().count(skind);
  const std::size_t n_dst = graph.entities().count(dkind);
  if (n_src == 0 || n_dst == 0) {
    throw std::invalid_argument("no type-compatible replacement entity");
  }
  std::uniform_int_distribution<std::int32_t> pick_src(0, static_cast<std::int32_t>(n_src) - 1);
  std::uniform_int_distribution<std::int32_t> pick_dst(0, static_cast<std::int32_t>(n_dst) - 1);
  std::bernoulli_distribution corrupt_source(0.5);

  std::vector<Edge> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n / 2; ++i) {
    Edge cand = edge;
    for (int attempt = 0; attempt <= max_retries; ++attempt) {
      cand = edge;
      if (corrupt_source(rng)) {
        cand.source = {skind, pick_src(rng)};
      } else {
        cand.destination = {dkind, pick_dst(rng)};
      }
      if (!graph.has_edge(cand)) break;
    }
    out.push_back(cand);
  }
  for (std::size_t i = 0; i < n / 2; ++i) {
    Edge cand = edge;
    for (int attempt = 0; attempt <= max_retries; ++attempt) {
      cand = {{skind, pick_src(rng)}, edge.relation, {dkind, pick_dst(rng)}};
      if (!graph.has_edge(cand)) break;
    }
    out.push_back(cand);
  }
  return out;
}

struct TrainResult {
  EmbeddingTable table;
  std::vector<double> epoch_loss;  // mean hinge loss per positive edge
};

namespace detail {

// Per-worker scratch: gathers the rows a batch touches, accumulates their
// gradients, then scatters optimizer updates back. Only touched rows move.
class BatchWorkspace {
 public:
  BatchWorkspace(std::size_t num_rows, std::size_t width)
      : width_(width), slot_(num_rows, -1) {}

  template <bool kConcurrent>
  std::size_t slot_for(std::size_t row, const double* params) {
    if (slot_[row] >= 0) return static_cast<std::size_t>(slot_[row]);
    const std::size_t slot = touched_.size();
    slot_[row] = static_cast<std::int64_t>(slot);
    touched_.push_back(row);
    values_.resize(values_.size() + width_);
    grads_.resize(grads_.size() + width_, 0.0);
    double* dst = values_.data() + slot * width_;
    const double* src = params + row * width_;
    for (std::size_t k = 0; k < width_; ++k) {
      if constexpr (kConcurrent) {
        dst[k] = std::atomic_ref<double>(const_cast<double&>(src[k]))
                     .load(std::memory_order_relaxed);
      } else {
        dst[k] = src[k];
      }
    }
    return slot;
  }

  const double* value(std::size_t row) const {
    return values_.data() + static_cast<std::size_t>(slot_[row]) * width_;
  }
  double* grad(std::size_t row) {
    return grads_.data() + static_cast<std::size_t>(slot_[row]) * width_;
  }

  template <bool kConcurrent>
  void apply(Optimizer opt, double lr, double* params, double* accum) {
    constexpr double kEps = 1e-10;
    for (std::size_t slot = 0; slot < touched_.size(); ++slot) {
      const std::size_t row = touched_[slot];
      const double* g = grads_.data() + slot * width_;
      double* p = params + row * width_;
      double* a = accum + row * width_;
      for (std::size_t k = 0; k < width_; ++k) {
        if (g[k] == 0.0) continue;
        if constexpr (kConcurrent) {
          std::atomic_ref<double> pk(p[k]);
          double step = lr * g[k];
          if (opt == Optimizer::Adagrad) {
            std::atomic_ref<double> ak(a[k]);
            const double acc = ak.load(std::memory_order_relaxed) + g[k] * g[k];
            ak.store(acc, std::memory_order_relaxed);
            step /= std::sqrt(acc) + kEps;
          }
          pk.store(pk.load(std::memory_order_relaxed) - step, std::memory_order_relaxed);
        } else {
          double step = lr * g[k];
          if (opt == Optimizer::Adagrad) {
            a[k] += g[k] * g[k];
            step /= std::sqrt(a[k]) + kEps;
          }
          p[k] -= step;
        }
      }
      slot_[row] = -1;
    }
    touched_.clear();
    values_.clear();
    grads_.clear();
  }

 private:
  std::size_t width_;
  std::vector<std::int64_t> slot_;
  std::vector<std::size_t> touched_;
  std::vector<double> values_;
  std::vector<double> grads_;
};

template <bool kConcurrent>
double run_batches(const KnowledgeGraph& graph, const EmbeddingTable& layout,
                   const TrainConfig& cfg, std::span<const std::uint32_t> order,
                   std::size_t epoch, std::size_t batch_offset, std::mt19937_64& rng,
                   double* params, double* accum) {
  const auto& edges = graph.edges();
  const std::size_t dim = cfg.dim;
  BatchWorkspace ws(layout.num_rows(), layout.row_width());
  std::vector<RowTriple> neg_rows;
  double total = 0.0;
  for (std::size_t start = 0, batch = 0; start < order.size();
       start += cfg.batch_size, ++batch) {
    const std::size_t end = std::min(order.size(), start + cfg.batch_size);
    double batch_loss = 0.0;
    for (std::size_t i = start; i < end; ++i) {
      const Edge& e = edges[order[i]];
      const auto negatives = sample_negatives(e, graph, cfg.negatives, rng);
      const RowTriple pos = rows_of(layout, e);
      neg_rows.clear();
      for (const Edge& n : negatives) neg_rows.push_back(rows_of(layout, n));
      ws.slot_for<kConcurrent>(pos.source, params);
      ws.slot_for<kConcurrent>(pos.relation, params);
      ws.slot_for<kConcurrent>(pos.destination, params);
      for (const RowTriple& t : neg_rows) {
        ws.slot_for<kConcurrent>(t.source, params);
        ws.slot_for<kConcurrent>(t.relation, params);
        ws.slot_for<kConcurrent>(t.destination, params);
      }
      batch_loss += hinge_loss_and_gradient(
          cfg.scorer, dim, cfg.margin, pos, neg_rows,
          [&](std::size_t r) { return ws.value(r); },
          [&](std::size_t r) { return ws.grad(r); });
    }
    if (!std::isfinite(batch_loss)) {
      throw std::runtime_error("non-finite loss at epoch " + std::to_string(epoch) +
                               ", batch " + std::to_string(batch_offset + batch));
    }
    ws.apply<kConcurrent>(cfg.optimizer, cfg.learning_rate, params, accum);
    total += batch_loss;
  }
  return total;
}

}  // namespace detail

// Gaussian init with standard deviation 1/sqrt(dim); DistMult keeps its
// imaginary halves at zero since its score never reads them.
inline EmbeddingTable initial_table(const KnowledgeGraph& graph, const TrainConfig& cfg,
                                    std::mt19937_64& rng) {
  EmbeddingTable table(graph.entities(), cfg.dim, cfg.scorer);
  std::normal_distribution<double> gauss(0.0, 1.0 / std::sqrt(static_cast<double>(cfg.dim)));
  for (std::size_t r = 0; r < table.num_rows(); ++r) {
    auto row = table.row(r);
    const std::size_t filled = cfg.scorer == Scorer::DistMult ? cfg.dim : row.size();
    for (std::size_t k = 0; k < filled; ++k) row[k] = gauss(rng);
  }
  return table;
}

inline TrainResult train(const KnowledgeGraph& graph, const TrainConfig& cfg,
                         const std::function<void(std::size_t, double)>& on_epoch = {}) {
  cfg.validate();
  if (graph.empty()) throw std::invalid_argument("cannot train on an empty graph");

  std::mt19937_64 rng(cfg.seed);
  TrainResult result{initial_table(graph, cfg, rng), {}};
  EmbeddingTable& table = result.table;
  std::vector<double> accum(table.data().size(), 0.0);
  std::vector<std::uint32_t> order(graph.edges().size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<std::uint32_t>(i);

  const double n_edges = static_cast<double>(order.size());
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    if (cfg.workers == 1) {
      total = detail::run_batches<false>(graph, table, cfg, order, epoch, 0, rng,
                                         table.data().data(), accum.data());
    } else {
      // Hogwild: workers own disjoint slices of the shuffled edges and
      // update shared rows without locks (relaxed atomics, last write wins).
      const std::size_t workers = std::min(cfg.workers, order.size());
      const std::size_t chunk = (order.size() + workers - 1) / workers;
      std::vector<double> partial(workers, 0.0);
      std::vector<std::exception_ptr> errors(workers);
      std::vector<std::uint64_t> seeds(workers);
      for (auto& s : seeds) s = rng();
      std::vector<std::thread> threads;
      for (std::size_t w = 0; w < workers; ++w) {
        threads.emplace_back([&, w] {
          try {
            std::mt19937_64 local(seeds[w]);
            const std::size_t begin = std::min(order.size(), w * chunk);
            const std::size_t end = std::min(order.size(), begin + chunk);
            partial[w] = detail::run_batches<true>(
                graph, table, cfg,
                std::span<const std::uint32_t>(order).subspan(begin, end - begin),
                epoch, begin / cfg.batch_size, local, table.data().data(), accum.data());
          } catch (...) {
            errors[w] = std::current_exception();
          }
        });
      }
      for (auto& t : threads) t.join();
      for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
      }
      for (double p : partial) total += p;
    }
    const double mean = total / n_edges;
    result.epoch_loss.push_back(mean);
    if (on_epoch) on_epoch(epoch, mean);
  }
  return result;
}

inline void write_embeddings(std::ostream& out, const EmbeddingTable& table) {
  out << "#dim=" << table.dim() << " scorer=" << scorer_token(table.scorer()) << '\n';
  const auto write_row = [&](std::span<const double> row) {
    for (std::size_t k = 0; k < row.size(); ++k) {
      if (k > 0) out << ' ';
      out << detail::format_double(row[k]);
    }
    out << '\n';
  };
  for (EntityKind kind : kAllKinds) {
    const auto& keys = table.entities().keys(kind);
    for (std::size_t id = 0; id < keys.size(); ++id) {
      out << kind_token(kind) << ':' << keys[id] << '\t';
      write_row(table.entity({kind, static_cast<std::int32_t>(id)}));
    }
  }
  for (Relation r : kAllRelations) {
    out << "r:" << relation_token(r) << '\t';
    write_row(table.relation(r));
  }
}

inline EmbeddingTable read_embeddings(std::istream& in) {
  std::string raw;
  std::size_t lineno = 0;
  std::optional<std::size_t> dim;
  Scorer scorer = Scorer::ComplEx;
  EntityIndex index;
  std::vector<std::pair<Node, std::vector<double>>> entity_rows;
  std::array<std::optional<std::vector<double>>, kNumRelations> relation_rows;

  while (std::getline(in, raw)) {
    ++lineno;
    const std::string_view line = detail::chomp(raw);
    if (!dim) {
      std::istringstream header{std::string(line)};
      std::string dim_tok, scorer_tok;
      header >> dim_tok >> scorer_tok;
      constexpr std::string_view kDim = "#dim=";
      constexpr std::string_view kScorer = "scorer=";
      if (std::string_view(dim_tok).substr(0, kDim.size()) != kDim ||
          std::string_view(scorer_tok).substr(0, kScorer.size()) != kScorer) {
        throw ParseError("malformed embedding header", lineno);
      }
      const auto d = detail::parse_int(std::string_view(dim_tok).substr(kDim.size()));
      const auto s = parse_scorer(std::string_view(scorer_tok).substr(kScorer.size()));
      if (!d || *d < 1) throw ParseError("invalid dim in header", lineno);
      if (!s) throw ParseError("unknown scorer in header", lineno);
      dim = static_cast<std::size_t>(*d);
      scorer = *s;
      continue;
    }
    if (detail::skippable(line)) continue;
    const auto fields = detail::split(line, '\t');
    if (fields.size() != 2) throw ParseError("malformed embedding row", lineno);
    std::vector<double> values;
    values.reserve(2 * *dim);
    for (std::string_view tok : detail::split(fields[1], ' ')) {
      if (tok.empty()) continue;
      const auto v = detail::parse_double(tok);
      if (!v) throw ParseError("malformed embedding value", lineno);
      values.push_back(*v);
    }
    if (values.size() != 2 * *dim) {
      throw ParseError("expected " + std::to_string(2 * *dim) + " values, got " +
                           std::to_string(values.size()),
                       lineno);
    }
    const std::string_view label = fields[0];
    if (label.substr(0, 2) == "r:") {
      const auto rel = parse_relation(label.substr(2));
      if (!rel) throw ParseError("unknown relation row", lineno);
      if (relation_rows[index_of(*rel)]) throw ParseError("duplicate relation row", lineno);
      relation_rows[index_of(*rel)] = std::move(values);
      continue;
    }
    const auto ref = parse_entity(label);
    if (!ref) throw ParseError("malformed entity label", lineno);
    if (index.find(ref->kind, ref->key)) throw ParseError("duplicate entity row", lineno);
    entity_rows.emplace_back(index.intern(ref->kind, ref->key), std::move(values));
  }
  if (!dim) throw ParseError("missing embedding header", 0);
  EmbeddingTable table(std::move(index), *dim, scorer);
  for (const auto& [node, values] : entity_rows) {
    std::copy(values.begin(), values.end(), table.row(table.row_of(node)).begin());
  }
  for (Relation r : kAllRelations) {
    const auto& values = relation_rows[index_of(r)];
    if (!values) {
      throw ParseError("missing relation row r:" + std::string(relation_token(r)), 0);
    }
    std::copy(values->begin(), values->end(), table.row(table.row_of(r)).begin());
  }
  return table;
}

inline void save_embeddings(const EmbeddingTable& table, const std::string& path) {
  auto out = detail::open_output(path);
  write_embeddings(out, table);
}

inline EmbeddingTable load_embeddings(const std::string& path) {
  auto in = detail::open_input(path);
  return read_embeddings(in);
}

}  // namespace kgrec
