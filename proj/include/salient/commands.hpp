#pragma once

#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "json.hpp"
#include "salient/analytics.hpp"
#include "salient/config.hpp"
#include "salient/corpus.hpp"
#include "salient/dialogue.hpp"
#include "salient/errors.hpp"
#include "salient/kb.hpp"
#include "salient/linker.hpp"
#include "salient/rewriter.hpp"
#include "salient/salience.hpp"
#include "salient/text.hpp"

// Command implementations behind the CLI. Argument parsing stays in the
// binary; everything here works on RunConfig plus streams so the behavior is
// testable in-process. All commands are deterministic given their inputs.

namespace salient::cli {

using nlohmann::json;

struct TurnMentions {
  std::string conversation_id;
  int turn_index = 0;
  std::vector<linker::EntityMention> mentions;
};

inline json to_json(const TurnMentions& tm) {
  json mentions = json::array();
  for (const linker::EntityMention& m : tm.mentions) {
    mentions.push_back({{"entity_id", m.entity_id},
                        {"surface", m.surface},
                        {"start", m.start},
                        {"end", m.end},
                        {"confidence", m.confidence}});
  }
  return {{"conversation_id", tm.conversation_id},
          {"turn_index", tm.turn_index},
          {"mentions", mentions}};
}

inline std::vector<TurnMentions> load_mentions(std::istream& in) {
  std::vector<TurnMentions> result;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("conversation_id") ||
        !j.contains("turn_index") || !j.contains("mentions") || !j["mentions"].is_array()) {
      throw Error(ErrorCode::MalformedLine,
                  "mentions line " + std::to_string(line_no) + ": bad schema");
    }
    TurnMentions tm;
    try {
      tm.conversation_id = j["conversation_id"].get<std::string>();
      tm.turn_index = j["turn_index"].get<int>();
      for (const json& mj : j["mentions"]) {
        linker::EntityMention m;
        m.entity_id = mj.at("entity_id").get<std::string>();
        m.surface = mj.at("surface").get<std::string>();
        m.start = mj.at("start").get<std::size_t>();
        m.end = mj.at("end").get<std::size_t>();
        m.confidence = mj.at("confidence").get<double>();
        tm.mentions.push_back(std::move(m));
      }
    } catch (const json::exception& e) {
      throw Error(ErrorCode::MalformedLine,
                  "mentions line " + std::to_string(line_no) + ": " + e.what());
    }
    result.push_back(std::move(tm));
  }
  return result;
}

namespace detail {

inline std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write '" + path + "'");
  return out;
}

inline std::vector<linker::EntityMention> link_with_config(const RunConfig& config,
                                                           const linker::SurfaceFormDictionary* dict,
                                                           std::string_view text_to_link) {
  if (config.linker == LinkerMode::Remote) {
    linker::RemoteLinkerConfig remote{config.endpoint, config.timeout_ms, config.retries};
    return linker::link_remote(text_to_link, remote, config.threshold);
  }
  if (!dict) throw Error(ErrorCode::InvalidConfig, "local linker needs a dictionary");
  return linker::link(text_to_link, *dict, config.threshold);
}

struct GoldScores {
  // (conversation_id, turn_index, entity_id) -> mean label
  std::map<std::tuple<std::string, int, std::string>, double> scores;

  static GoldScores from_annotations(const std::vector<corpus::SalienceAnnotation>& annotations) {
    GoldScores gold;
    for (const auto& a : annotations) {
      gold.scores[{a.conversation_id, a.turn_index, a.entity_id}] =
          salience::aggregate(a.labels).score;
    }
    return gold;
  }

  std::optional<double> lookup(const std::string& conversation_id, int turn_index,
                               const std::string& entity_id) const {
    auto it = scores.find({conversation_id, turn_index, entity_id});
    if (it == scores.end()) return std::nullopt;
    return it->second;
  }
};

}  // namespace detail

// --- ingest ------------------------------------------------------------

inline int cmd_ingest(const RunConfig& config, std::ostream& out, std::ostream& err) {
  if (config.corpus_path.empty()) throw Error(ErrorCode::InvalidConfig, "--corpus is required");
  const std::vector<corpus::Conversation> conversations = corpus::load_corpus(config.corpus_path);
  std::size_t turns = 0;
  for (const auto& c : conversations) turns += c.turns.size();
  if (!config.out_path.empty()) {
    std::ofstream file = detail::open_output(config.out_path);
    corpus::save_corpus(conversations, file);
  } else {
    corpus::save_corpus(conversations, out);
  }
  err << "ingested " << conversations.size() << " conversations, " << turns << " turns\n";
  return 0;
}

// --- link ----------------------------------------------------------------

inline std::vector<TurnMentions> link_corpus(
    const std::vector<corpus::Conversation>& conversations, const RunConfig& config,
    const linker::SurfaceFormDictionary* dict) {
  std::vector<TurnMentions> result;
  for (const corpus::Conversation& conversation : conversations) {
    for (const corpus::Turn& turn : conversation.turns) {
      std::vector<linker::EntityMention> mentions =
          detail::link_with_config(config, dict, turn.answer);
      if (config.question_filter) {
        const std::vector<linker::EntityMention> question_mentions =
            detail::link_with_config(config, dict, turn.question);
        mentions = linker::filter_question_entities(mentions, turn.question, question_mentions);
      }
      result.push_back({conversation.conversation_id, turn.turn_index, std::move(mentions)});
    }
  }
  return result;
}

inline int cmd_link(const RunConfig& config, std::ostream& out, std::ostream& err) {
  if (config.corpus_path.empty()) throw Error(ErrorCode::InvalidConfig, "--corpus is required");
  std::optional<linker::SurfaceFormDictionary> dict;
  if (config.linker == LinkerMode::Local) {
    if (config.dict_path.empty()) {
      throw Error(ErrorCode::InvalidConfig, "--dict is required with the local linker");
    }
    dict = linker::SurfaceFormDictionary::load_tsv_file(config.dict_path);
  }
  const std::vector<corpus::Conversation> conversations = corpus::load_corpus(config.corpus_path);
  const std::vector<TurnMentions> mentions =
      link_corpus(conversations, config, dict ? &*dict : nullptr);
  std::size_t total = 0;
  const auto write = [&](std::ostream& sink) {
    for (const TurnMentions& tm : mentions) sink << to_json(tm).dump() << '\n';
  };
  if (!config.out_path.empty()) {
    std::ofstream file = detail::open_output(config.out_path);
    write(file);
  } else {
    write(out);
  }
  for (const TurnMentions& tm : mentions) total += tm.mentions.size();
  err << "linked " << total << " mentions across " << mentions.size() << " turns\n";
  return 0;
}

// --- rewrite ---------------------------------------------------------------

struct TurnRewrite {
  std::string conversation_id;
  int turn_index = 0;
  rewriter::RewriteResult result;
  bool no_targets = false;
  std::vector<std::string> missing_definitions;
};

inline json to_json(const TurnRewrite& tr) {
  json insertions = json::array();
  for (const rewriter::Insertion& ins : tr.result.insertions) {
    insertions.push_back({{"offset", ins.offset}, {"text", ins.text}});
  }
  json targets = json::array();
  for (const rewriter::TargetRef& t : tr.result.targets) {
    targets.push_back(
        {{"entity_id", t.entity_id}, {"label", t.label}, {"description", t.description}});
  }
  json j{{"conversation_id", tr.conversation_id},
         {"turn_index", tr.turn_index},
         {"strategy", rewriter::to_string(tr.result.strategy)},
         {"original", tr.result.original},
         {"rewritten", tr.result.rewritten},
         {"insertions", insertions},
         {"targets", targets}};
  if (tr.no_targets) j["no_targets"] = true;
  if (!tr.missing_definitions.empty()) j["missing_definitions"] = tr.missing_definitions;
  return j;
}

// One turn, one strategy. Mentions must already be question-filtered.
inline TurnRewrite rewrite_turn(const corpus::Turn& turn, const std::string& conversation_id,
                                const std::vector<linker::EntityMention>& mentions,
                                const std::map<std::string, double>& scores,
                                const std::map<std::string, salience::SpecialCase>& special_cases,
                                kb::DefinitionStore& store, rewriter::Strategy strategy,
                                const RunConfig& config, std::ostream& err) {
  TurnRewrite tr;
  tr.conversation_id = conversation_id;
  tr.turn_index = turn.turn_index;
  const std::vector<rewriter::ScoredMention> selected =
      rewriter::select_targets(mentions, scores, special_cases, config.top_n);
  std::vector<rewriter::Target> targets;
  for (const rewriter::ScoredMention& sm : selected) {
    try {
      targets.push_back({sm.mention, store.get(sm.mention.entity_id), sm.score});
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NotFound) throw;
      tr.missing_definitions.push_back(sm.mention.entity_id);
      err << "warning: " << conversation_id << " turn " << turn.turn_index
          << ": no definition for '" << sm.mention.entity_id << "'\n";
    }
  }
  const rewriter::FollowupTemplates templates = config.followup_templates();
  switch (strategy) {
    case rewriter::Strategy::InlineWiki:
      tr.result = rewriter::rewrite_inline_wiki(turn.answer, targets);
      break;
    case rewriter::Strategy::InlineNatural:
      tr.result = rewriter::rewrite_inline_natural(turn.answer, targets);
      break;
    case rewriter::Strategy::FollowupQuestion:
    case rewriter::Strategy::FollowupOffer: {
      const auto variant = strategy == rewriter::Strategy::FollowupQuestion
                               ? rewriter::FollowupVariant::Question
                               : rewriter::FollowupVariant::Offer;
      if (targets.empty()) {
        tr.result.original = turn.answer;
        tr.result.rewritten = turn.answer;
        tr.result.strategy = strategy;
      } else {
        tr.result = rewriter::rewrite_followup(turn.answer, targets, variant, templates);
      }
      break;
    }
  }
  tr.no_targets = targets.empty();
  return tr;
}

inline int cmd_rewrite(const RunConfig& config, std::ostream& out, std::ostream& err,
                       const std::vector<rewriter::Strategy>& strategies) {
  config.validate();
  if (config.corpus_path.empty()) throw Error(ErrorCode::InvalidConfig, "--corpus is required");
  if (config.kb_snapshot_path.empty() && config.cache_path.empty()) {
    throw Error(ErrorCode::InvalidConfig, "--kb-snapshot or --cache is required");
  }
  const std::vector<corpus::Conversation> conversations = corpus::load_corpus(config.corpus_path);

  kb::DefinitionStore store;
  store.set_max_description_chars(config.max_definition_chars);
  if (!config.kb_snapshot_path.empty()) store.load_snapshot_file(config.kb_snapshot_path);
  if (!config.cache_path.empty()) store.attach_cache_file(config.cache_path);

  std::optional<linker::SurfaceFormDictionary> dict;
  if (config.linker == LinkerMode::Local && !config.dict_path.empty()) {
    dict = linker::SurfaceFormDictionary::load_tsv_file(config.dict_path);
  }

  // Mentions: precomputed file wins; otherwise link on the fly.
  std::map<std::pair<std::string, int>, std::vector<linker::EntityMention>> mentions_by_turn;
  if (!config.mentions_path.empty()) {
    std::ifstream in(config.mentions_path);
    if (!in) throw Error(ErrorCode::Io, "cannot open '" + config.mentions_path + "'");
    for (TurnMentions& tm : load_mentions(in)) {
      mentions_by_turn[{tm.conversation_id, tm.turn_index}] = std::move(tm.mentions);
    }
  } else {
    for (const TurnMentions& tm :
         link_corpus(conversations, config, dict ? &*dict : nullptr)) {
      mentions_by_turn[{tm.conversation_id, tm.turn_index}] = tm.mentions;
    }
  }

  detail::GoldScores gold;
  if (!config.annotations_path.empty()) {
    gold = detail::GoldScores::from_annotations(
        corpus::load_salience_annotations(config.annotations_path));
  }

  std::optional<double> popularity_cutoff;
  if (config.exclude_special_cases) {
    std::vector<double> popularity;
    for (const auto& [id, def] : store.snapshot()) {
      if (def.popularity) popularity.push_back(*def.popularity);
    }
    popularity_cutoff = salience::popularity_cutoff_from(popularity);
  }

  std::vector<TurnRewrite> rewrites;
  for (const corpus::Conversation& conversation : conversations) {
    std::vector<std::string> history;
    for (const corpus::Turn& turn : conversation.turns) {
      const auto& mentions = mentions_by_turn[{conversation.conversation_id, turn.turn_index}];
      std::map<std::string, double> scores;
      std::map<std::string, salience::SpecialCase> special_cases;
      for (const linker::EntityMention& m : mentions) {
        if (auto score = gold.lookup(conversation.conversation_id, turn.turn_index, m.entity_id)) {
          scores[m.entity_id] = *score;
        } else {
          scores[m.entity_id] = salience::predict_salience(m, turn.answer, history);
        }
        if (config.exclude_special_cases) {
          kb::KbType kb_type = kb::KbType::None;
          std::optional<double> popularity;
          if (store.has_snapshot_entry(m.entity_id)) {
            const kb::Definition& def = store.snapshot().at(m.entity_id);
            kb_type = def.kb_type;
            popularity = def.popularity;
          }
          salience::SpecialCaseConfig case_config;
          case_config.popularity_cutoff = popularity_cutoff;
          special_cases[m.entity_id] = salience::classify_special_case(
              m, turn.answer, turn.question, kb_type, popularity, case_config);
        }
      }
      for (rewriter::Strategy strategy : strategies) {
        rewrites.push_back(rewrite_turn(turn, conversation.conversation_id, mentions, scores,
                                        special_cases, store, strategy, config, err));
      }
      history.push_back(turn.answer);
    }
  }
  const auto write = [&](std::ostream& sink) {
    for (const TurnRewrite& tr : rewrites) sink << to_json(tr).dump() << '\n';
  };
  if (!config.out_path.empty()) {
    std::ofstream file = detail::open_output(config.out_path);
    write(file);
  } else {
    write(out);
  }
  err << "rewrote " << rewrites.size() << " turn/strategy pairs\n";
  return 0;
}

// --- analyze ---------------------------------------------------------------

namespace detail {

inline std::string fmt(double v, int precision = 4) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(precision) << v;
  return s.str();
}

inline void print_preference_rows(std::ostream& out, const std::vector<analytics::PreferenceRow>& rows,
                                  const analytics::PreferenceRow& total) {
  out << std::left << std::setw(40) << "condition" << std::right << std::setw(10) << "original"
      << std::setw(10) << "inline" << std::setw(10) << "followup" << std::setw(12) << "chi2"
      << std::setw(10) << "p" << '\n';
  const auto print_row = [&](const analytics::PreferenceRow& row) {
    out << std::left << std::setw(40) << row.label << std::right << std::setw(10) << row.counts[0]
        << std::setw(10) << row.counts[1] << std::setw(10) << row.counts[2] << std::setw(12)
        << fmt(row.chi2, 3) << std::setw(10) << fmt(row.p) << '\n';
  };
  for (const analytics::PreferenceRow& row : rows) print_row(row);
  print_row(total);
}

inline json row_to_json(const analytics::PreferenceRow& row) {
  return {{"label", row.label},
          {"original", row.counts[0]},
          {"inline", row.counts[1]},
          {"followup", row.counts[2]},
          {"chi2", row.chi2},
          {"p", row.p}};
}

inline std::vector<long> parse_counts(const std::string& csv) {
  std::vector<long> counts;
  std::istringstream stream(csv);
  std::string field;
  while (std::getline(stream, field, ',')) {
    try {
      counts.push_back(std::stol(text::trim(field)));
    } catch (const std::exception&) {
      throw Error(ErrorCode::InvalidConfig, "--counts must be comma-separated integers");
    }
  }
  return counts;
}

struct ExternalScores {
  std::map<std::pair<std::string, int>, std::map<std::string, double>> by_turn;
};

inline ExternalScores load_external_scores(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path + "'");
  ExternalScores external;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.contains("conversation_id") || !j.contains("turn_index") ||
        !j.contains("scores") || !j["scores"].is_object()) {
      throw Error(ErrorCode::MalformedLine,
                  "external scores line " + std::to_string(line_no) + ": bad schema");
    }
    try {
      auto& scores = external.by_turn[{j["conversation_id"].get<std::string>(),
                                       j["turn_index"].get<int>()}];
      for (const auto& [entity_id, score] : j["scores"].items()) {
        scores[entity_id] = score.get<double>();
      }
    } catch (const json::exception& e) {
      throw Error(ErrorCode::MalformedLine,
                  "external scores line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return external;
}

}  // namespace detail

inline int cmd_analyze(const RunConfig& config, const std::string& what,
                       const std::string& counts_csv, const std::string& external_path,
                       std::ostream& out, std::ostream& err) {
  json report{{"what", what}};
  if (what == "kappa") {
    if (config.annotations_path.empty()) {
      throw Error(ErrorCode::InvalidConfig, "--annotations is required for kappa");
    }
    const auto annotations = corpus::load_salience_annotations(config.annotations_path);
    const analytics::CountMatrix matrix = analytics::build_count_matrix(annotations);
    const std::optional<double> kappa = analytics::fleiss_kappa(matrix);
    report["items"] = matrix.items();
    report["raters"] = matrix.raters_per_item();
    if (kappa) {
      report["kappa"] = *kappa;
      out << "fleiss_kappa = " << detail::fmt(*kappa) << " (" << matrix.items() << " items, "
          << matrix.raters_per_item() << " raters)\n";
    } else {
      report["kappa"] = nullptr;
      report["degenerate"] = true;
      out << "fleiss_kappa = DEGENERATE (all mass in one category)\n";
    }
  } else if (what == "rho") {
    if (config.annotations_path.empty()) {
      throw Error(ErrorCode::InvalidConfig, "--annotations is required for rho");
    }
    const auto annotations = corpus::load_salience_annotations(config.annotations_path);
    const double rho = analytics::mean_pairwise_spearman(annotations);
    report["mean_pairwise_spearman"] = rho;
    out << "mean_pairwise_spearman = " << detail::fmt(rho) << '\n';
    if (!external_path.empty()) {
      const detail::ExternalScores external = detail::load_external_scores(external_path);
      std::map<std::pair<std::string, int>, std::map<std::string, double>> gold;
      for (const auto& a : annotations) {
        gold[{a.conversation_id, a.turn_index}][a.entity_id] =
            salience::aggregate(a.labels).score;
      }
      std::vector<double> rhos;
      for (const auto& [turn, scores] : gold) {
        auto it = external.by_turn.find(turn);
        if (it == external.by_turn.end()) continue;
        try {
          rhos.push_back(salience::rank_correlation_with_external(scores, it->second));
        } catch (const Error& e) {
          if (e.code() != ErrorCode::ConstantInput && e.code() != ErrorCode::Empty) throw;
        }
      }
      if (rhos.empty()) throw Error(ErrorCode::NoPairs, "no turn matches the external predictor");
      const double mean_external = analytics::mean_and_std(rhos).mean;
      report["external_mean_spearman"] = mean_external;
      report["external_turns"] = rhos.size();
      out << "external_mean_spearman = " << detail::fmt(mean_external) << " over " << rhos.size()
          << " turns\n";
    }
  } else if (what == "chisq") {
    if (counts_csv.empty()) {
      throw Error(ErrorCode::InvalidConfig, "--counts is required for chisq");
    }
    const std::vector<long> counts = detail::parse_counts(counts_csv);
    const analytics::ChiSquareResult chi = analytics::chi_square_uniform(counts);
    report["counts"] = counts;
    report["chi2"] = chi.chi2;
    report["p"] = chi.p;
    out << "chi2 = " << detail::fmt(chi.chi2, 3) << ", p = " << detail::fmt(chi.p) << '\n';
  } else if (what == "stats") {
    if (config.annotations_path.empty()) {
      throw Error(ErrorCode::InvalidConfig, "--annotations is required for stats");
    }
    const auto annotations = corpus::load_salience_annotations(config.annotations_path);
    const analytics::DatasetStats stats = analytics::dataset_stats(annotations);
    report["answers"] = stats.answers;
    report["entities"] = stats.entities;
    report["entities_per_answer"] = {{"mean", stats.entities_per_answer.mean},
                                     {"std", stats.entities_per_answer.stddev}};
    report["mean_entity_score"] = {{"mean", stats.mean_entity_score.mean},
                                   {"std", stats.mean_entity_score.stddev}};
    report["label_share"] = stats.label_share;
    report["salient_ratio"] = {{"mean", stats.salient_ratio.mean},
                               {"std", stats.salient_ratio.stddev}};
    if (stats.turn_drift) {
      report["turn_drift"] = {{"mean", stats.turn_drift->mean},
                              {"std", stats.turn_drift->stddev}};
    } else {
      report["turn_drift"] = nullptr;
    }
    out << "answers: " << stats.answers << ", entities: " << stats.entities << '\n'
        << "entities/answer: " << detail::fmt(stats.entities_per_answer.mean, 2) << " ± "
        << detail::fmt(stats.entities_per_answer.stddev, 2) << '\n'
        << "mean salience:   " << detail::fmt(stats.mean_entity_score.mean, 2) << " ± "
        << detail::fmt(stats.mean_entity_score.stddev, 2) << '\n'
        << "label share 0/1/2: " << detail::fmt(stats.label_share[0] * 100, 1) << "% / "
        << detail::fmt(stats.label_share[1] * 100, 1) << "% / "
        << detail::fmt(stats.label_share[2] * 100, 1) << "%\n"
        << "salient ratio:   " << detail::fmt(stats.salient_ratio.mean, 2) << " ± "
        << detail::fmt(stats.salient_ratio.stddev, 2) << '\n';
    if (stats.turn_drift) {
      out << "turn drift:      " << detail::fmt(stats.turn_drift->mean, 2) << " ± "
          << detail::fmt(stats.turn_drift->stddev, 2) << '\n';
    } else {
      out << "turn drift:      n/a (no entity spans consecutive turns)\n";
    }
  } else if (what == "preferences") {
    if (config.preferences_path.empty()) {
      throw Error(ErrorCode::InvalidConfig, "--preferences is required for preferences");
    }
    const auto records = corpus::load_preferences(config.preferences_path);
    const analytics::PreferenceTable table = analytics::aggregate_preferences(records);
    out << "-- by rewrite subtype --\n";
    detail::print_preference_rows(out, table.by_subtype, table.subtype_total);
    out << "-- by top N --\n";
    detail::print_preference_rows(out, table.by_top_n, table.top_n_total);
    json by_subtype = json::array();
    for (const auto& row : table.by_subtype) by_subtype.push_back(detail::row_to_json(row));
    json by_top_n = json::array();
    for (const auto& row : table.by_top_n) by_top_n.push_back(detail::row_to_json(row));
    report["by_subtype"] = by_subtype;
    report["by_top_n"] = by_top_n;
    report["total"] = detail::row_to_json(table.subtype_total);
  } else {
    throw Error(ErrorCode::InvalidConfig, "unknown analysis '" + what + "'");
  }
  if (!config.out_path.empty()) {
    std::ofstream file = detail::open_output(config.out_path);
    file << report.dump(2) << '\n';
    err << "report written to " << config.out_path << '\n';
  }
  return 0;
}

// --- chat ------------------------------------------------------------------

// Scripted answer store: JSONL {"question": ..., "answer": ...}, matched on
// the normalized question. Without one, the REPL echoes the input line back
// as the "system" answer.
inline std::map<std::string, std::string> load_answer_store(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path + "'");
  std::map<std::string, std::string> store;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.contains("question") || !j.contains("answer") ||
        !j["question"].is_string() || !j["answer"].is_string()) {
      throw Error(ErrorCode::MalformedLine,
                  "answer store line " + std::to_string(line_no) + ": bad schema");
    }
    store[text::normalize(j["question"].get<std::string>())] = j["answer"].get<std::string>();
  }
  return store;
}

inline int cmd_chat(const RunConfig& config, std::istream& in, std::ostream& out,
                    std::ostream& err) {
  config.validate();
  kb::DefinitionStore store;
  store.set_max_description_chars(config.max_definition_chars);
  if (!config.kb_snapshot_path.empty()) store.load_snapshot_file(config.kb_snapshot_path);
  if (!config.cache_path.empty()) store.attach_cache_file(config.cache_path);

  linker::SurfaceFormDictionary dict;
  if (!config.dict_path.empty()) {
    dict = linker::SurfaceFormDictionary::load_tsv_file(config.dict_path);
  } else {
    // Fall back to the snapshot labels as unambiguous surface forms.
    for (const auto& [id, def] : store.snapshot()) {
      if (!def.label.empty()) dict.add(def.label, id, 1.0);
    }
  }
  std::map<std::string, std::string> answers;
  const bool scripted = !config.answers_path.empty();
  if (scripted) answers = load_answer_store(config.answers_path);

  const rewriter::FollowupTemplates templates = config.followup_templates();
  std::optional<dialogue::FollowUpState> pending;
  std::vector<std::string> history;
  std::string line;
  while (std::getline(in, line)) {
    const std::string utterance = text::trim(line);
    if (utterance.empty()) continue;
    if (pending && !pending->resolved) {
      const dialogue::Outcome outcome = dialogue::interpret_user_turn(utterance, *pending);
      pending.reset();
      if (outcome.kind == dialogue::OutcomeKind::Define) {
        out << "system> " << outcome.response << '\n';
        continue;
      }
      // Offer ignored; fall through and treat the utterance as a new question.
    }
    std::string answer;
    if (scripted) {
      auto it = answers.find(text::normalize(utterance));
      if (it == answers.end()) {
        out << "system> I have no answer for that.\n";
        continue;
      }
      answer = it->second;
    } else {
      answer = utterance;
    }
    std::vector<linker::EntityMention> mentions = linker::link(answer, dict, config.threshold);
    // Echo mode repeats the question back, so filtering against it would
    // always empty the mention list.
    if (config.question_filter && scripted) {
      const std::vector<linker::EntityMention> question_mentions =
          linker::link(utterance, dict, config.threshold);
      mentions = linker::filter_question_entities(mentions, utterance, question_mentions);
    }
    std::map<std::string, double> scores;
    for (const linker::EntityMention& m : mentions) {
      scores[m.entity_id] = salience::predict_salience(m, answer, history);
    }
    const std::vector<rewriter::ScoredMention> selected =
        rewriter::select_targets(mentions, scores, {}, config.top_n);
    std::vector<rewriter::Target> targets;
    for (const rewriter::ScoredMention& sm : selected) {
      try {
        targets.push_back({sm.mention, store.get(sm.mention.entity_id), sm.score});
      } catch (const Error& e) {
        if (e.code() != ErrorCode::NotFound) throw;
        err << "warning: no definition for '" << sm.mention.entity_id << "'\n";
      }
    }
    rewriter::RewriteResult result;
    switch (config.strategy) {
      case rewriter::Strategy::InlineWiki:
        result = rewriter::rewrite_inline_wiki(answer, targets);
        break;
      case rewriter::Strategy::InlineNatural:
        result = rewriter::rewrite_inline_natural(answer, targets);
        break;
      case rewriter::Strategy::FollowupQuestion:
      case rewriter::Strategy::FollowupOffer: {
        const auto variant = config.strategy == rewriter::Strategy::FollowupQuestion
                                 ? rewriter::FollowupVariant::Question
                                 : rewriter::FollowupVariant::Offer;
        if (targets.empty()) {
          result.original = answer;
          result.rewritten = answer;
          result.strategy = config.strategy;
        } else {
          result = rewriter::rewrite_followup(answer, targets, variant, templates);
        }
        break;
      }
    }
    out << "system> " << result.rewritten << '\n';
    if (rewriter::is_followup(result.strategy) && !result.targets.empty()) {
      pending = dialogue::open_followup(result);
    }
    history.push_back(answer);
  }
  return 0;
}

// --- kb fetch ---------------------------------------------------------------

inline int cmd_kb_fetch(const RunConfig& config, const std::vector<std::string>& entity_ids,
                        std::ostream& out, std::ostream& err) {
  if (config.endpoint.empty()) throw Error(ErrorCode::InvalidConfig, "--endpoint is required");
  if (entity_ids.empty()) throw Error(ErrorCode::InvalidConfig, "no entity ids given");
  kb::DefinitionStore store;
  store.set_max_description_chars(config.max_definition_chars);
  if (!config.kb_snapshot_path.empty()) store.load_snapshot_file(config.kb_snapshot_path);
  if (!config.cache_path.empty()) store.attach_cache_file(config.cache_path);
  store.set_fetcher(kb::wikibase_fetcher(
      {config.endpoint, config.language, config.timeout_ms, config.retries}));
  int missing = 0;
  for (const std::string& entity_id : entity_ids) {
    try {
      const kb::Definition def = store.get(entity_id);
      out << def.entity_id << '\t' << def.label << '\t' << def.description << '\n';
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NotFound) throw;
      ++missing;
      err << "warning: " << e.what() << '\n';
    }
  }
  return missing == static_cast<int>(entity_ids.size()) ? 1 : 0;
}

}  // namespace salient::cli
