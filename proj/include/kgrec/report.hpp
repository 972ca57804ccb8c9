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
// Structured (JSON) and tabular renderings of evaluation reports and
// explanations.
#pragma once

#include <cstdio>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "kgrec/evaluate.hpp"
#include "kgrec/explain.hpp"

namespace kgrec {

enum class ReportFormat : std::uint8_t { Table, Json };

inline nlohmann::json to_json(const MetricsReport& report) {
  nlohmann::json results = nlohmann::json::array();
  for (const auto& c : report.cells) {
    results.push_back({{"model", c.model},
                       {"metric", std::string(metric_token(c.metric))},
                       {"k", c.k},
                       {"folds", c.per_fold},
                       {"mean", c.mean},
                       {"std", c.stddev},
                       {"best", c.best},
                       {"significant", c.significant},
                       {"p_values", c.p_values}});
  }
  return {{"folds", report.folds},
          {"ks", report.ks},
          {"models", report.models},
          {"results", std::move(results)},
          {"errors", report.errors}};
}

// One row per model, one column per (metric, k). The best mean of each
// column is bracketed (all tied models are); `*` marks a best value that is
// significant against every other model after Bonferroni correction.
inline std::string render_table(const MetricsReport& report,
                                std::span<const Metric> metrics = std::span<const Metric>()) {
  static constexpr std::array<Metric, 1> kDefault = {Metric::F1};
  if (metrics.empty()) metrics = kDefault;
  std::vector<std::string> header{"Model"};
  for (Metric m : metrics) {
    for (std::size_t k : report.ks) {
      std::string name = m == Metric::F1 ? "F1" : m == Metric::NDCG ? "nDCG"
                                                 : m == Metric::Precision ? "P" : "R";
      header.push_back(name + "@" + std::to_string(k));
    }
  }
  std::vector<std::vector<std::string>> rows{header};
  for (const auto& model : report.models) {
    std::vector<std::string> row{model};
    for (Metric m : metrics) {
      for (std::size_t k : report.ks) {
        const MetricCell* c = report.find(model, m, k);
        if (c == nullptr) {
          row.emplace_back("-");
          continue;
        }
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.3f", c->mean);
        std::string cell = c->best ? "[" + std::string(buf) + "]" : " " + std::string(buf) + " ";
        if (c->significant) cell += '*';
        row.push_back(std::move(cell));
      }
    }
    rows.push_back(std::move(row));
  }
  std::vector<std::size_t> width(header.size(), 0);
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], row[i].size());
  }
  std::ostringstream out;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t i = 0; i < rows[r].size(); ++i) {
      if (i > 0) out << "  ";
      out << rows[r][i] << std::string(width[i] - rows[r][i].size(), ' ');
    }
    out << '\n';
    if (r == 0) {
      std::size_t total = 0;
      for (std::size_t w : width) total += w + 2;
      out << std::string(total - 2, '-') << '\n';
    }
  }
  for (const auto& [model, error] : report.errors) {
    out << "error: " << model << ": " << error << '\n';
  }
  return out.str();
}

inline std::string render_report(const MetricsReport& report, ReportFormat format) {
  if (format == ReportFormat::Json) return to_json(report).dump(2) + "\n";
  return render_table(report);
}

inline nlohmann::json to_json(const Explanation& e) {
  nlohmann::json aspects = nlohmann::json::array();
  for (const auto& a : e.aspects) {
    aspects.push_back({{"aspect", a.aspect},
                       {"likes", a.likes},
                       {"dislikes", a.dislikes},
                       {"doesNotCare", a.does_not_care}});
  }
  return {{"user", e.user}, {"item", e.item}, {"cohort", e.cohort_size}, {"aspects", aspects}};
}

inline nlohmann::json to_json(std::string_view user, std::span<const ExplainedItem> items) {
  nlohmann::json list = nlohmann::json::array();
  for (const auto& ei : items) {
    nlohmann::json entry = {{"item", ei.item}, {"score", ei.score}};
    entry["explanation"] = ei.explanation ? to_json(*ei.explanation) : nlohmann::json(nullptr);
    list.push_back(std::move(entry));
  }
  return {{"user", std::string(user)}, {"recommendations", std::move(list)}};
}

inline nlohmann::json to_json(const ExplanationStats& s) {
  const auto opt = [](const std::optional<double>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json("undefined");
  };
  return {{"lists", s.lists},       {"items", s.items},
          {"covered", s.covered},   {"coverage", s.coverage},
          {"lk_other", opt(s.lk_other)}, {"n_aspects", s.n_aspects},
          {"asp_per_item", opt(s.asp_per_item)}};
}

}  // namespace kgrec
