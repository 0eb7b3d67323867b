#pragma once

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "salient/corpus.hpp"
#include "salient/errors.hpp"
#include "salient/salience.hpp"
#include "salient/stats.hpp"

// Dataset-level statistics: the agreement and prevalence numbers reported
// over the annotated corpus, and the preference-table aggregation with
// per-row chi-square tests.

namespace salient::analytics {

using corpus::PreferenceAnnotation;
using corpus::RewriteOption;
using corpus::SalienceAnnotation;

// Rows = (conversation, turn, entity) items, columns = labels {0, 1, 2}.
// Every item must have the same number of raters; datasets with ragged rater
// counts are rejected rather than approximated.
inline CountMatrix build_count_matrix(std::span<const SalienceAnnotation> annotations) {
  if (annotations.empty()) throw Error(ErrorCode::Empty, "no annotations");
  std::vector<std::vector<long>> cells;
  cells.reserve(annotations.size());
  for (const SalienceAnnotation& a : annotations) {
    std::vector<long> row(3, 0);
    for (int label : a.labels) {
      if (label < 0 || label > 2) throw Error(ErrorCode::InvalidLabel, "label outside {0,1,2}");
      ++row[static_cast<std::size_t>(label)];
    }
    cells.push_back(std::move(row));
  }
  return CountMatrix(std::move(cells));
}

// Mean pairwise Spearman's rho between annotators who labeled the same QA
// pair. Label positions within one turn are treated as per-annotator slots.
// Averaged over annotator pairs within a turn, then over turns; pairs where
// either annotator gave a constant labeling are undefined and skipped.
inline double mean_pairwise_spearman(std::span<const SalienceAnnotation> annotations) {
  std::map<std::pair<std::string, int>, std::vector<const SalienceAnnotation*>> by_turn;
  for (const SalienceAnnotation& a : annotations) {
    by_turn[{a.conversation_id, a.turn_index}].push_back(&a);
  }
  std::vector<double> per_turn;
  for (const auto& [key, records] : by_turn) {
    if (records.size() < 2) continue;  // correlation needs >= 2 entities
    const std::size_t raters = records.front()->labels.size();
    bool consistent = true;
    for (const auto* r : records) {
      if (r->labels.size() != raters) {
        consistent = false;
        break;
      }
    }
    if (!consistent || raters < 2) continue;
    std::vector<double> rhos;
    for (std::size_t i = 0; i < raters; ++i) {
      for (std::size_t j = i + 1; j < raters; ++j) {
        std::vector<double> xs, ys;
        xs.reserve(records.size());
        ys.reserve(records.size());
        for (const auto* r : records) {
          xs.push_back(static_cast<double>(r->labels[i]));
          ys.push_back(static_cast<double>(r->labels[j]));
        }
        try {
          rhos.push_back(spearman_rho(xs, ys));
        } catch (const Error& e) {
          if (e.code() != ErrorCode::ConstantInput) throw;
        }
      }
    }
    if (!rhos.empty()) per_turn.push_back(mean_and_std(rhos).mean);
  }
  if (per_turn.empty()) {
    throw Error(ErrorCode::NoPairs, "no turn has two comparable annotators");
  }
  return mean_and_std(per_turn).mean;
}

struct DatasetStats {
  MeanStd entities_per_answer;
  MeanStd mean_entity_score;
  std::array<double, 3> label_share{};  // fraction of raw labels 0 / 1 / 2
  MeanStd salient_ratio;
  std::optional<MeanStd> turn_drift;  // absent when no entity spans turns
  std::size_t answers = 0;
  std::size_t entities = 0;
};

inline DatasetStats dataset_stats(std::span<const SalienceAnnotation> annotations) {
  if (annotations.empty()) throw Error(ErrorCode::Empty, "no annotations");
  const std::vector<salience::SalienceRecord> records = salience::make_records(annotations);
  std::map<std::pair<std::string, int>, std::vector<const salience::SalienceRecord*>> by_turn;
  std::array<long, 3> label_counts{};
  long total_labels = 0;
  std::vector<double> scores;
  scores.reserve(records.size());
  for (const salience::SalienceRecord& r : records) {
    by_turn[{r.conversation_id, r.turn_index}].push_back(&r);
    for (int label : r.labels) {
      ++label_counts[static_cast<std::size_t>(label)];
      ++total_labels;
    }
    scores.push_back(r.score);
  }
  std::vector<double> per_answer_counts;
  std::vector<double> per_answer_ratios;
  per_answer_counts.reserve(by_turn.size());
  per_answer_ratios.reserve(by_turn.size());
  for (const auto& [key, turn_records] : by_turn) {
    per_answer_counts.push_back(static_cast<double>(turn_records.size()));
    long salient = 0;
    for (const auto* r : turn_records) salient += r->is_salient ? 1 : 0;
    per_answer_ratios.push_back(static_cast<double>(salient) /
                                static_cast<double>(turn_records.size()));
  }
  DatasetStats stats;
  stats.entities_per_answer = mean_and_std(per_answer_counts);
  stats.mean_entity_score = mean_and_std(scores);
  for (std::size_t i = 0; i < 3; ++i) {
    stats.label_share[i] = static_cast<double>(label_counts[i]) / static_cast<double>(total_labels);
  }
  stats.salient_ratio = mean_and_std(per_answer_ratios);
  try {
    stats.turn_drift = salience::turn_salience_drift(records);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NoPairs) throw;
  }
  stats.answers = by_turn.size();
  stats.entities = records.size();
  return stats;
}

inline bool is_inline_option(RewriteOption o) {
  return o == RewriteOption::INLINEDEF_WIKI || o == RewriteOption::INLINEDEF_NATURAL;
}

inline bool is_followup_option(RewriteOption o) {
  return o == RewriteOption::FOLLOWUP_QUESTION || o == RewriteOption::FOLLOWUP_OFFER;
}

struct PreferenceRow {
  std::string label;
  std::array<long, 3> counts{};  // chosen: original / inline / follow-up
  double chi2 = 0.0;
  double p = 1.0;
  long total = 0;
};

struct PreferenceTable {
  std::vector<PreferenceRow> by_subtype;  // one row per (inline, follow-up) pairing
  PreferenceRow subtype_total;
  std::vector<PreferenceRow> by_top_n;  // one row per top-N condition
  PreferenceRow top_n_total;
};

namespace detail {

inline void finish_row(PreferenceRow& row) {
  row.total = row.counts[0] + row.counts[1] + row.counts[2];
  const ChiSquareResult chi = chi_square_uniform(
      std::span<const long>(row.counts.data(), row.counts.size()));
  row.chi2 = chi.chi2;
  row.p = chi.p;
}

}  // namespace detail

// Counts of which option the annotators chose, grouped two ways: by the
// (inline variant, follow-up variant) pairing shown and by top-N condition.
// Every record must show ORIGINAL, one inline rewrite, and one follow-up.
inline PreferenceTable aggregate_preferences(std::span<const PreferenceAnnotation> records) {
  PreferenceTable table;
  if (records.empty()) return table;
  struct Condition {
    RewriteOption inline_variant;
    RewriteOption followup_variant;
    // Wiki before natural, offer before question: the conventional layout.
    bool operator<(const Condition& other) const {
      if (inline_variant != other.inline_variant) return inline_variant < other.inline_variant;
      return followup_variant > other.followup_variant;
    }
  };
  std::map<Condition, std::array<long, 3>> by_subtype;
  std::map<int, std::array<long, 3>> by_top_n;
  std::array<long, 3> totals{};
  for (const PreferenceAnnotation& r : records) {
    std::optional<RewriteOption> inline_variant, followup_variant;
    bool has_original = false;
    for (RewriteOption o : r.options_shown) {
      if (o == RewriteOption::ORIGINAL) has_original = true;
      if (is_inline_option(o)) inline_variant = o;
      if (is_followup_option(o)) followup_variant = o;
    }
    if (!has_original || !inline_variant || !followup_variant) {
      throw Error(ErrorCode::MalformedLine,
                  "record '" + r.qa_id + "' must show ORIGINAL, one inline, one follow-up");
    }
    const RewriteOption chosen = r.options_shown[static_cast<std::size_t>(r.choice)];
    const std::size_t bucket = chosen == RewriteOption::ORIGINAL ? 0
                               : is_inline_option(chosen)        ? 1
                                                                 : 2;
    ++by_subtype[{*inline_variant, *followup_variant}][bucket];
    ++by_top_n[r.top_n][bucket];
    ++totals[bucket];
  }
  for (const auto& [condition, counts] : by_subtype) {
    PreferenceRow row;
    row.label = std::string(corpus::to_string(condition.inline_variant)) + " + " +
                corpus::to_string(condition.followup_variant);
    row.counts = counts;
    detail::finish_row(row);
    table.by_subtype.push_back(std::move(row));
  }
  for (const auto& [top_n, counts] : by_top_n) {
    PreferenceRow row;
    row.label = "Top " + std::to_string(top_n);
    row.counts = counts;
    detail::finish_row(row);
    table.by_top_n.push_back(std::move(row));
  }
  table.subtype_total.label = "Total";
  table.subtype_total.counts = totals;
  detail::finish_row(table.subtype_total);
  table.top_n_total = table.subtype_total;
  return table;
}

}  // namespace salient::analytics
