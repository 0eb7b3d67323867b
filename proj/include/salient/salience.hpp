#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "salient/corpus.hpp"
#include "salient/errors.hpp"
#include "salient/kb.hpp"
#include "salient/linker.hpp"
#include "salient/stats.hpp"
#include "salient/text.hpp"

// Salience scoring: aggregation of annotator labels onto the [0, 2] scale,
// per-answer salient ratios, score drift across turns, a deterministic
// heuristic predictor for unlabeled corpora, and the special-case taxonomy
// of salient entities that need no definition.

namespace salient::salience {

// An entity is salient when its mean label strictly exceeds 1.5.
constexpr double kSalientThreshold = 1.5;

struct AggregateResult {
  double score = 0.0;
  bool is_salient = false;
};

// Mean of labels in {0,1,2}. The strict ">" at the 1.5 boundary is decided
// in integer arithmetic (2*sum > 3*n) so 1.5 itself is never salient.
inline AggregateResult aggregate(std::span<const int> labels) {
  if (labels.empty()) throw Error(ErrorCode::EmptyLabels, "no labels to aggregate");
  long sum = 0;
  for (int label : labels) {
    if (label < 0 || label > 2) {
      throw Error(ErrorCode::InvalidLabel, "label " + std::to_string(label) + " outside {0,1,2}");
    }
    sum += label;
  }
  const double score = static_cast<double>(sum) / static_cast<double>(labels.size());
  const bool is_salient = 2 * sum > 3 * static_cast<long>(labels.size());
  return {score, is_salient};
}

struct SalienceRecord {
  std::string conversation_id;
  int turn_index = 0;
  std::string entity_id;
  std::vector<int> labels;
  double score = 0.0;
  bool is_salient = false;
};

inline SalienceRecord make_record(const corpus::SalienceAnnotation& a) {
  const AggregateResult agg = aggregate(a.labels);
  return {a.conversation_id, a.turn_index, a.entity_id, a.labels, agg.score, agg.is_salient};
}

inline std::vector<SalienceRecord> make_records(
    std::span<const corpus::SalienceAnnotation> annotations) {
  std::vector<SalienceRecord> records;
  records.reserve(annotations.size());
  for (const auto& a : annotations) records.push_back(make_record(a));
  return records;
}

inline double salient_ratio(std::span<const SalienceRecord> records) {
  if (records.empty()) throw Error(ErrorCode::Empty, "no records");
  const auto salient = std::count_if(records.begin(), records.end(),
                                     [](const SalienceRecord& r) { return r.is_salient; });
  return static_cast<double>(salient) / static_cast<double>(records.size());
}

// Mean and population std of |score(t+1) - score(t)| over every entity that
// is annotated in two consecutive turns of the same conversation.
inline analytics::MeanStd turn_salience_drift(std::span<const SalienceRecord> records) {
  std::map<std::pair<std::string, std::string>, std::map<int, double>> by_entity;
  for (const SalienceRecord& r : records) {
    by_entity[{r.conversation_id, r.entity_id}][r.turn_index] = r.score;
  }
  std::vector<double> deltas;
  for (const auto& [key, turns] : by_entity) {
    for (const auto& [turn, score] : turns) {
      auto next = turns.find(turn + 1);
      if (next != turns.end()) deltas.push_back(std::fabs(next->second - score));
    }
  }
  if (deltas.empty()) throw Error(ErrorCode::NoPairs, "no entity spans consecutive turns");
  return analytics::mean_and_std(deltas);
}

struct PredictWeights {
  double position = 0.35;
  double frequency = 0.2;
  double confidence = 0.35;
  double history = 0.1;
};

// Deterministic heuristic score in [0, 2] for corpora without labels:
// earlier mentions, repeated mentions, confident links, and entities already
// seen in the conversation history all push the score up.
inline double predict_salience(const linker::EntityMention& mention, std::string_view answer,
                               std::span<const std::string> history,
                               const PredictWeights& weights = {}) {
  if (mention.end > answer.size() || mention.start >= mention.end ||
      answer.substr(mention.start, mention.end - mention.start) != mention.surface) {
    throw Error(ErrorCode::OffsetInvalid, "mention does not match answer slice");
  }
  const double position =
      1.0 - static_cast<double>(mention.start) / static_cast<double>(answer.size());
  const std::size_t freq = std::max<std::size_t>(1, text::count_token_phrase(answer, mention.surface));
  const double frequency = static_cast<double>(std::min<std::size_t>(freq, 3)) / 3.0;
  double history_presence = 0.0;
  for (const std::string& prior : history) {
    if (text::contains_token_phrase(prior, mention.surface)) {
      history_presence = 1.0;
      break;
    }
  }
  const double raw = weights.position * position + weights.frequency * frequency +
                     weights.confidence * mention.confidence + weights.history * history_presence;
  return 2.0 * std::clamp(raw, 0.0, 1.0);
}

// Spearman's rho between gold scores and an external predictor over the same
// entity set.
inline double rank_correlation_with_external(const std::map<std::string, double>& gold,
                                             const std::map<std::string, double>& external) {
  if (gold.size() != external.size()) {
    throw Error(ErrorCode::MismatchedSets, "rankings cover different entity sets");
  }
  std::vector<double> xs, ys;
  xs.reserve(gold.size());
  ys.reserve(gold.size());
  for (const auto& [entity_id, score] : gold) {
    auto it = external.find(entity_id);
    if (it == external.end()) {
      throw Error(ErrorCode::MismatchedSets, "external ranking lacks '" + entity_id + "'");
    }
    xs.push_back(score);
    ys.push_back(it->second);
  }
  return analytics::spearman_rho(xs, ys);
}

enum class SpecialCase { CommonSense, LocationOrNe, AlreadyDefined, EntityIsAnswer, None };

inline const char* to_string(SpecialCase c) {
  switch (c) {
    case SpecialCase::CommonSense: return "COMMON_SENSE";
    case SpecialCase::LocationOrNe: return "LOCATION_OR_NE";
    case SpecialCase::AlreadyDefined: return "ALREADY_DEFINED";
    case SpecialCase::EntityIsAnswer: return "ENTITY_IS_ANSWER";
    case SpecialCase::None: return "NONE";
  }
  return "NONE";
}

struct SpecialCaseConfig {
  std::vector<std::string> definitional_cues = {"i.e.",  ", which is", ", a ",  ", an ",
                                                ", the ", "that is,",  "means "};
  std::size_t cue_window_chars = 100;
  std::optional<double> popularity_cutoff;  // absolute cutoff, see popularity_cutoff_from
};

// Absolute popularity value marking the top `top_fraction` of the snapshot.
inline std::optional<double> popularity_cutoff_from(std::span<const double> popularity,
                                                    double top_fraction = 0.01) {
  if (popularity.empty()) return std::nullopt;
  std::vector<double> sorted(popularity.begin(), popularity.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  const std::size_t keep = std::max<std::size_t>(
      1, static_cast<std::size_t>(static_cast<double>(sorted.size()) * top_fraction));
  return sorted[std::min(keep, sorted.size()) - 1];
}

// First matching rule wins: entity-is-answer and already-defined are
// structural checks on the text, so they outrank the KB-dependent rules.
inline SpecialCase classify_special_case(const linker::EntityMention& mention,
                                         std::string_view answer, std::string_view question,
                                         kb::KbType kb_type = kb::KbType::None,
                                         std::optional<double> popularity = std::nullopt,
                                         const SpecialCaseConfig& config = {}) {
  if (mention.end > answer.size() || mention.start >= mention.end) {
    throw Error(ErrorCode::OffsetInvalid, "mention offsets outside answer");
  }
  const std::vector<text::Token> question_tokens = text::tokenize(question);
  if (!question_tokens.empty()) {
    const std::string first = text::normalize(
        question.substr(question_tokens[0].start,
                        question_tokens[0].end - question_tokens[0].start));
    if (first == "who" || first == "what" || first == "which" || first == "where") {
      std::size_t tokens_before = 0;
      for (const text::Token& t : text::tokenize(answer)) {
        if (t.end <= mention.start) ++tokens_before;
      }
      if (tokens_before < 3) return SpecialCase::EntityIsAnswer;
    }
  }
  const std::string_view window =
      answer.substr(mention.end, std::min(config.cue_window_chars, answer.size() - mention.end));
  std::string folded_window;
  folded_window.reserve(window.size());
  for (char c : window) folded_window.push_back(text::fold_char(c));
  for (const std::string& cue : config.definitional_cues) {
    std::string folded_cue;
    folded_cue.reserve(cue.size());
    for (char c : cue) folded_cue.push_back(text::fold_char(c));
    if (folded_window.find(folded_cue) != std::string::npos) {
      return SpecialCase::AlreadyDefined;
    }
  }
  if (kb_type == kb::KbType::Location || kb_type == kb::KbType::Human ||
      kb_type == kb::KbType::Organization) {
    return SpecialCase::LocationOrNe;
  }
  if (popularity && config.popularity_cutoff && *popularity >= *config.popularity_cutoff) {
    return SpecialCase::CommonSense;
  }
  return SpecialCase::None;
}

}  // namespace salient::salience
