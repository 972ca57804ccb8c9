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
// kgrec: command-line driver.
//
//   kgrec synth        --out-ratings r.tsv --out-opinions o.tsv [--seed N]
//   kgrec stats        --ratings r.tsv [--opinions o.tsv] [--min-ratings 10]
//   kgrec build-graph  --ratings r.tsv --opinions o.tsv --variant gera --out g.tsv
//   kgrec train        --graph g.tsv --dim 16 --epochs 50 --seed 7 --out e.tsv
//   kgrec recommend    --embeddings e.tsv [--graph g.tsv] [--user u] --k 10
//   kgrec explain      --embeddings e.tsv --graph g.tsv [--user u] --k 30
//   kgrec evaluate     --ratings r.tsv --opinions o.tsv --models gera,pop --out rep.json
#include <algorithm>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "kgrec/kgrec.hpp"

namespace {

using nlohmann::json;

struct OutputSink {
  explicit OutputSink(const std::string& path) {
    if (!path.empty() && path != "-") {
      file = std::ofstream(path, std::ios::binary);
      if (!*file) throw std::runtime_error("cannot write " + path);
    }
  }
  std::ostream& stream() { return file ? static_cast<std::ostream&>(*file) : std::cout; }
  std::optional<std::ofstream> file;
};

void log_config(const std::string& command, const json& config) {
  std::clog << "kgrec " << command << " config " << config.dump() << std::endl;
}

std::vector<kgrec::RatingRecord> read_ratings_filtered(const std::string& path,
                                                       std::optional<std::size_t> min) {
  auto ratings = kgrec::load_ratings(path);
  if (min) ratings = kgrec::filter_min_ratings(ratings, *min);
  return ratings;
}

template <class T>
T parse_or_throw(const std::optional<T>& v, const std::string& what, const std::string& token) {
  if (!v) throw CLI::ValidationError(what, "unknown value '" + token + "'");
  return *v;
}

struct TrainFlags {
  std::size_t dim = 400;
  double lr = 0.01;
  double margin = 0.1;
  std::size_t epochs = 50;
  std::size_t negatives = 10;
  std::size_t batch_size = 1000;
  std::string scorer = "complex";
  std::string optimizer = "adagrad";
  std::size_t workers = 1;

  void add(CLI::App* app) {
    app->add_option("--dim", dim, "Embedding dimension")->capture_default_str();
    app->add_option("--lr", lr, "Learning rate")->capture_default_str();
    app->add_option("--margin", margin, "Ranking margin")->capture_default_str();
    app->add_option("--epochs", epochs, "Training epochs")->capture_default_str();
    app->add_option("--negatives", negatives, "Negatives per positive (even)")
        ->capture_default_str();
    app->add_option("--batch-size", batch_size, "Edges per update batch")->capture_default_str();
    app->add_option("--scorer", scorer, "complex | transe | distmult")->capture_default_str();
    app->add_option("--optimizer", optimizer, "adagrad | sgd")->capture_default_str();
    app->add_option("--workers", workers, "Training threads (1 = deterministic)")
        ->capture_default_str();
  }

  kgrec::TrainConfig config(std::uint64_t seed) const {
    kgrec::TrainConfig cfg;
    cfg.dim = dim;
    cfg.learning_rate = lr;
    cfg.margin = margin;
    cfg.epochs = epochs;
    cfg.negatives = negatives;
    cfg.batch_size = batch_size;
    cfg.seed = seed;
    cfg.scorer = parse_or_throw(kgrec::parse_scorer(scorer), "--scorer", scorer);
    cfg.optimizer = parse_or_throw(kgrec::parse_optimizer(optimizer), "--optimizer", optimizer);
    cfg.workers = workers;
    cfg.validate();
    return cfg;
  }
};

json train_config_json(const kgrec::TrainConfig& cfg) {
  return {{"dim", cfg.dim},
          {"lr", cfg.learning_rate},
          {"margin", cfg.margin},
          {"epochs", cfg.epochs},
          {"negatives", cfg.negatives},
          {"batch_size", cfg.batch_size},
          {"seed", cfg.seed},
          {"scorer", std::string(kgrec::scorer_token(cfg.scorer))},
          {"optimizer", std::string(kgrec::optimizer_token(cfg.optimizer))},
          {"workers", cfg.workers}};
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  for (auto tok : kgrec::detail::split(s, ',')) {
    tok = kgrec::detail::trim(tok);
    if (!tok.empty()) out.emplace_back(tok);
  }
  return out;
}

std::vector<std::string> users_to_process(const kgrec::EmbeddingTable& table,
                                          const std::vector<std::string>& requested) {
  if (!requested.empty()) return requested;
  return table.entities().keys(kgrec::EntityKind::User);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Knowledge-graph embeddings from ratings and aspect opinions"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);
  std::uint64_t seed = 0;
  const auto add_seed = [&](CLI::App* sub) {
    sub->add_option("--seed", seed, "Random seed (falls back to $KGREC_SEED)")
        ->envname("KGREC_SEED")
        ->capture_default_str();
  };
  std::string format = "tsv";
  const auto add_format = [&](CLI::App* sub, const std::string& def) {
    format = def;
    sub->add_option("--format", format, "tsv | structured")
        ->check(CLI::IsMember({"tsv", "structured"}));
  };

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a clustered synthetic corpus");
  kgrec::SynthConfig synth_cfg;
  std::string out_ratings, out_opinions;
  synth->add_option("--out-ratings", out_ratings)->required();
  synth->add_option("--out-opinions", out_opinions)->required();
  synth->add_option("--clusters", synth_cfg.n_user_clusters)->capture_default_str();
  synth->add_option("--users-per-cluster", synth_cfg.users_per_cluster)->capture_default_str();
  synth->add_option("--items-per-cluster", synth_cfg.items_per_cluster)->capture_default_str();
  synth->add_option("--aspects", synth_cfg.aspects)->capture_default_str();
  synth->add_option("--noise", synth_cfg.noise_rate)->capture_default_str();
  add_seed(synth);

  // stats
  auto* stats = app.add_subcommand("stats", "Corpus statistics");
  std::string ratings_path, opinions_path, out_path;
  std::optional<std::size_t> min_ratings;
  stats->add_option("--ratings", ratings_path)->required()->check(CLI::ExistingFile);
  stats->add_option("--opinions", opinions_path)->check(CLI::ExistingFile);
  stats->add_option("--min-ratings", min_ratings,
                    "Keep only users with more than this many ratings");
  stats->add_option("--out", out_path, "Output file (default stdout)");

  // build-graph
  auto* build = app.add_subcommand("build-graph", "Build a GER/GEA/GERA graph");
  std::string variant = "gera";
  build->add_option("--ratings", ratings_path)->required()->check(CLI::ExistingFile);
  build->add_option("--opinions", opinions_path)->check(CLI::ExistingFile);
  build->add_option("--variant", variant)->check(CLI::IsMember({"ger", "gea", "gera"}))
      ->capture_default_str();
  build->add_option("--min-ratings", min_ratings);
  build->add_option("--out", out_path)->required();

  // train
  auto* train_cmd = app.add_subcommand("train", "Train embeddings on a graph");
  std::string graph_path, loss_out;
  TrainFlags train_flags;
  train_cmd->add_option("--graph", graph_path)->required()->check(CLI::ExistingFile);
  train_flags.add(train_cmd);
  add_seed(train_cmd);
  train_cmd->add_option("--out", out_path)->required();
  train_cmd->add_option("--loss-out", loss_out, "Per-epoch mean loss trace");

  // recommend
  auto* rec = app.add_subcommand("recommend", "Top-k items by cosine similarity");
  std::string emb_path;
  std::vector<std::string> users;
  std::size_t k = 30;
  rec->add_option("--embeddings", emb_path)->required()->check(CLI::ExistingFile);
  rec->add_option("--graph", graph_path, "Exclude items the user already rated")
      ->check(CLI::ExistingFile);
  rec->add_option("--user", users, "User key(s); default all users");
  rec->add_option("--k", k)->capture_default_str();
  rec->add_option("--out", out_path);
  add_format(rec, "tsv");

  // explain
  auto* expl = app.add_subcommand("explain", "Aspect-level explanations");
  std::size_t similar = 30;
  std::string reviews_path;
  bool include_rated = false;
  expl->add_option("--embeddings", emb_path)->required()->check(CLI::ExistingFile);
  expl->add_option("--graph", graph_path)->required()->check(CLI::ExistingFile);
  expl->add_option("--user", users, "User key(s); default all users");
  expl->add_option("--k", k, "Recommended items per user")->capture_default_str();
  expl->add_option("--similar", similar, "Cohort size")->capture_default_str();
  expl->add_option("--reviews", reviews_path, "Optional reviews file user<TAB>item<TAB>text")
      ->check(CLI::ExistingFile);
  expl->add_flag("--include-rated", include_rated, "Also recommend items the user already rated");
  expl->add_option("--out", out_path);
  add_format(expl, "tsv");

  // evaluate
  auto* eval = app.add_subcommand("evaluate", "Cross-validated top-N evaluation");
  std::string models = "gera,ger,gea,mf,pop,rdm", ks_list = "10,20,30", samples = "folds";
  std::size_t folds = 5, eval_workers = 1;
  double alpha = 0.05;
  kgrec::AlsConfig als;
  TrainFlags eval_train;
  std::string table_out;
  eval->add_option("--ratings", ratings_path)->required()->check(CLI::ExistingFile);
  eval->add_option("--opinions", opinions_path)->check(CLI::ExistingFile);
  eval->add_option("--models", models)->capture_default_str();
  eval->add_option("--folds", folds)->capture_default_str();
  eval->add_option("--ks", ks_list)->capture_default_str();
  eval->add_option("--samples", samples, "Significance samples: folds | users")
      ->check(CLI::IsMember({"folds", "users"}))
      ->capture_default_str();
  eval->add_option("--alpha", alpha)->capture_default_str();
  eval->add_option("--factors", als.factors, "MF latent factors")->capture_default_str();
  eval->add_option("--reg", als.regularization, "MF regularization")->capture_default_str();
  eval->add_option("--als-iters", als.iterations)->capture_default_str();
  eval->add_option("--fold-workers", eval_workers, "Folds evaluated concurrently")
      ->capture_default_str();
  eval->add_option("--min-ratings", min_ratings);
  eval_train.add(eval);
  add_seed(eval);
  eval->add_option("--out", out_path, "Structured report (JSON)")->required();
  eval->add_option("--table-out", table_out, "Human-readable table (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth) {
      synth_cfg.seed = seed;
      log_config("synth", {{"clusters", synth_cfg.n_user_clusters},
                           {"users_per_cluster", synth_cfg.users_per_cluster},
                           {"items_per_cluster", synth_cfg.items_per_cluster},
                           {"aspects", synth_cfg.aspects},
                           {"noise", synth_cfg.noise_rate},
                           {"seed", seed}});
      const auto corpus = kgrec::generate_synthetic(synth_cfg);
      kgrec::save_ratings(corpus.ratings, out_ratings);
      kgrec::save_opinions(corpus.opinions, out_opinions);
    } else if (*stats) {
      log_config("stats", {{"ratings", ratings_path},
                           {"opinions", opinions_path},
                           {"min_ratings", min_ratings ? json(*min_ratings) : json(nullptr)}});
      const auto ratings = read_ratings_filtered(ratings_path, min_ratings);
      const auto opinions = opinions_path.empty() ? std::vector<kgrec::AspectOpinion>{}
                                                  : kgrec::load_opinions(opinions_path);
      const auto s = kgrec::dataset_stats(ratings, opinions);
      OutputSink sink(out_path);
      sink.stream() << "users\titems\tratings\topinions\tsparsity\n"
                    << s.n_users << '\t' << s.n_items << '\t' << s.n_ratings << '\t'
                    << s.n_opinions << '\t' << kgrec::detail::format_double(s.rating_sparsity)
                    << '\n';
    } else if (*build) {
      log_config("build-graph", {{"ratings", ratings_path},
                                 {"opinions", opinions_path},
                                 {"variant", variant},
                                 {"min_ratings", min_ratings ? json(*min_ratings) : json(nullptr)}});
      const auto ratings = read_ratings_filtered(ratings_path, min_ratings);
      const auto opinions = opinions_path.empty() ? std::vector<kgrec::AspectOpinion>{}
                                                  : kgrec::load_opinions(opinions_path);
      const auto graph = kgrec::build_graph(ratings, opinions, *kgrec::parse_variant(variant));
      kgrec::save_graph(graph, out_path);
      std::clog << "graph: " << graph.entities().total() << " entities, "
                << graph.edges().size() << " edges\n";
    } else if (*train_cmd) {
      const auto cfg = train_flags.config(seed);
      log_config("train", {{"graph", graph_path}, {"train", train_config_json(cfg)}});
      const auto graph = kgrec::load_graph(graph_path);
      const auto result = kgrec::train(graph, cfg, [](std::size_t epoch, double loss) {
        std::clog << "epoch " << epoch << " loss " << loss << '\n';
      });
      kgrec::save_embeddings(result.table, out_path);
      if (!loss_out.empty()) {
        std::ofstream out(loss_out);
        for (std::size_t e = 0; e < result.epoch_loss.size(); ++e) {
          out << e << '\t' << kgrec::detail::format_double(result.epoch_loss[e]) << '\n';
        }
      }
    } else if (*rec) {
      log_config("recommend", {{"embeddings", emb_path}, {"graph", graph_path}, {"k", k},
                               {"users", users}});
      const auto table = kgrec::load_embeddings(emb_path);
      std::optional<kgrec::KnowledgeGraph> graph;
      if (!graph_path.empty()) graph = kgrec::load_graph(graph_path);
      OutputSink sink(out_path);
      json doc = json::array();
      for (const auto& user : users_to_process(table, users)) {
        const auto candidates = graph ? kgrec::unrated_items(table, *graph, user)
                                      : kgrec::all_ids(table.entities(), kgrec::EntityKind::Item);
        if (candidates.empty()) continue;
        const auto list = kgrec::recommend_embedding(table, user, candidates, k);
        if (format == "tsv") {
          kgrec::write_recommendations(sink.stream(), list, table.entities());
        } else {
          json items = json::array();
          for (const auto& e : list.entries) {
            items.push_back({{"item", table.entities().key({kgrec::EntityKind::Item, e.id})},
                             {"score", e.score}});
          }
          doc.push_back({{"user", user}, {"items", items}});
        }
      }
      if (format != "tsv") sink.stream() << doc.dump(2) << '\n';
    } else if (*expl) {
      log_config("explain", {{"embeddings", emb_path}, {"graph", graph_path}, {"k", k},
                             {"similar", similar}, {"include_rated", include_rated}, {"users", users}});
      const auto table = kgrec::load_embeddings(emb_path);
      const auto graph = kgrec::load_graph(graph_path);
      std::optional<kgrec::ReviewStore> reviews;
      if (!reviews_path.empty()) reviews = kgrec::ReviewStore::load(reviews_path);
      OutputSink sink(out_path);
      std::vector<std::vector<kgrec::ExplainedItem>> batch;
      json doc = {{"explanations", json::array()}};
      for (const auto& user : users_to_process(table, users)) {
        std::optional<std::vector<std::int32_t>> pool;
        if (include_rated) pool = kgrec::all_ids(table.entities(), kgrec::EntityKind::Item);
        auto items = kgrec::explain_recommendations(table, graph, user, k, similar, pool);
        if (format == "tsv") {
          std::vector<std::string> cohort;
          if (reviews) {
            const auto u = table.find(kgrec::EntityKind::User, user);
            for (const auto& s : kgrec::top_similar_users(table, u->id, similar)) {
              cohort.push_back(table.entities().key({kgrec::EntityKind::User, s.id}));
            }
          }
          sink.stream() << "# user " << user << '\n';
          kgrec::render_explanations(sink.stream(), items, reviews ? &*reviews : nullptr, cohort);
        } else {
          doc["explanations"].push_back(kgrec::to_json(user, items));
        }
        batch.push_back(std::move(items));
      }
      if (!batch.empty()) {
        const auto s = kgrec::explanation_stats(batch);
        if (format == "tsv") {
          const auto show = [](const std::optional<double>& v) {
            return v ? kgrec::detail::format_double(*v) : std::string("undefined");
          };
          sink.stream() << "# stats coverage=" << kgrec::detail::format_double(s.coverage)
                        << " lk_other=" << show(s.lk_other)
                        << " n_aspects=" << kgrec::detail::format_double(s.n_aspects)
                        << " asp_per_item=" << show(s.asp_per_item) << '\n';
        } else {
          doc["stats"] = kgrec::to_json(s);
        }
      }
      if (format != "tsv") sink.stream() << doc.dump(2) << '\n';
    } else if (*eval) {
      kgrec::EvalConfig cfg;
      cfg.folds = folds;
      cfg.seed = seed;
      cfg.alpha = alpha;
      cfg.workers = eval_workers;
      cfg.samples = samples == "users" ? kgrec::SampleSource::Users : kgrec::SampleSource::Folds;
      cfg.ks.clear();
      for (const auto& tok : split_list(ks_list)) {
        const auto v = kgrec::detail::parse_int(tok);
        if (!v || *v < 1) throw CLI::ValidationError("--ks", "invalid k '" + tok + "'");
        cfg.ks.push_back(static_cast<std::size_t>(*v));
      }
      std::sort(cfg.ks.begin(), cfg.ks.end());
      cfg.ks.erase(std::unique(cfg.ks.begin(), cfg.ks.end()), cfg.ks.end());
      cfg.train = eval_train.config(seed);
      cfg.als = als;
      std::vector<kgrec::ModelSpec> specs;
      const auto model_names = split_list(models);
      for (const auto& name : model_names) specs.push_back(kgrec::make_model(name));

      const json config = {{"ratings", ratings_path},
                           {"opinions", opinions_path},
                           {"models", model_names},
                           {"folds", folds},
                           {"ks", cfg.ks},
                           {"seed", seed},
                           {"samples", samples},
                           {"alpha", alpha},
                           {"min_ratings", min_ratings ? json(*min_ratings) : json(nullptr)},
                           {"train", train_config_json(cfg.train)},
                           {"mf", {{"factors", als.factors},
                                   {"reg", als.regularization},
                                   {"iterations", als.iterations}}}};
      log_config("evaluate", config);
      const auto ratings = read_ratings_filtered(ratings_path, min_ratings);
      const auto opinions = opinions_path.empty() ? std::vector<kgrec::AspectOpinion>{}
                                                  : kgrec::load_opinions(opinions_path);
      const auto report = kgrec::evaluate(specs, ratings, opinions, cfg);
      {
        OutputSink sink(out_path);
        sink.stream() << json{{"config", config}, {"report", kgrec::to_json(report)}}.dump(2)
                      << '\n';
      }
      OutputSink table_sink(table_out);
      table_sink.stream() << kgrec::render_report(report, kgrec::ReportFormat::Table);
      for (const auto& [model, error] : report.errors) {
        std::clog << "model " << model << " failed: " << error << '\n';
      }
    }
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
