#pragma once

#include <algorithm>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "salient/errors.hpp"
#include "salient/kb.hpp"
#include "salient/linker.hpp"
#include "salient/salience.hpp"
#include "salient/text.hpp"

// The four answer rewrites: parenthetical inline definitions, comma-blended
// appositive definitions, and the two follow-up prompts. All rewrites log
// their insertions against original offsets so the original answer is
// recoverable byte-for-byte.

namespace salient::rewriter {

enum class Strategy { InlineWiki, InlineNatural, FollowupQuestion, FollowupOffer };

inline const char* to_string(Strategy s) {
  switch (s) {
    case Strategy::InlineWiki: return "INLINE_WIKI";
    case Strategy::InlineNatural: return "INLINE_NATURAL";
    case Strategy::FollowupQuestion: return "FOLLOWUP_QUESTION";
    case Strategy::FollowupOffer: return "FOLLOWUP_OFFER";
  }
  return "INLINE_WIKI";
}

inline Strategy parse_strategy(std::string_view s) {
  const std::string key = text::normalize(s);
  if (key == "inline-wiki" || key == "inline_wiki" || key == "wiki") return Strategy::InlineWiki;
  if (key == "inline-natural" || key == "inline_natural" || key == "natural") {
    return Strategy::InlineNatural;
  }
  if (key == "followup-question" || key == "followup_question" || key == "question") {
    return Strategy::FollowupQuestion;
  }
  if (key == "followup-offer" || key == "followup_offer" || key == "offer") {
    return Strategy::FollowupOffer;
  }
  throw Error(ErrorCode::InvalidConfig, "unknown strategy '" + std::string(s) + "'");
}

inline bool is_followup(Strategy s) {
  return s == Strategy::FollowupQuestion || s == Strategy::FollowupOffer;
}

struct Target {
  linker::EntityMention mention;  // first mention of the entity
  kb::Definition definition;
  double score = 0.0;
};

struct Insertion {
  std::size_t offset = 0;  // position in the original answer
  std::string text;
};

// What the rewrite was about; carried along so follow-up handling can offer
// the same entities in the same order.
struct TargetRef {
  std::string entity_id;
  std::string label;
  std::string description;
};

struct RewriteResult {
  std::string original;
  std::string rewritten;
  Strategy strategy = Strategy::InlineWiki;
  std::vector<Insertion> insertions;  // sorted by offset
  std::vector<TargetRef> targets;
};

struct ScoredMention {
  linker::EntityMention mention;
  double score = 0.0;
};

// Top-N selection: drop special-case entities, keep only the first mention
// of each entity, sort by score descending (earlier mention wins ties), and
// truncate. May return fewer than top_n.
inline std::vector<ScoredMention> select_targets(
    std::span<const linker::EntityMention> mentions,
    const std::map<std::string, double>& scores,
    const std::map<std::string, salience::SpecialCase>& special_cases, int top_n) {
  if (top_n < 1) throw Error(ErrorCode::OutOfRange, "top_n must be at least 1");
  std::map<std::string, ScoredMention> first_mentions;
  for (const linker::EntityMention& m : mentions) {
    auto case_it = special_cases.find(m.entity_id);
    if (case_it != special_cases.end() && case_it->second != salience::SpecialCase::None) {
      continue;
    }
    auto score_it = scores.find(m.entity_id);
    if (score_it == scores.end()) {
      throw Error(ErrorCode::MismatchedSets, "no score for entity '" + m.entity_id + "'");
    }
    auto [it, inserted] = first_mentions.emplace(m.entity_id, ScoredMention{m, score_it->second});
    if (!inserted && m.start < it->second.mention.start) it->second.mention = m;
  }
  std::vector<ScoredMention> ordered;
  ordered.reserve(first_mentions.size());
  for (auto& [id, sm] : first_mentions) ordered.push_back(std::move(sm));
  std::sort(ordered.begin(), ordered.end(), [](const ScoredMention& a, const ScoredMention& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.mention.start < b.mention.start;
  });
  if (ordered.size() > static_cast<std::size_t>(top_n)) ordered.resize(top_n);
  return ordered;
}

namespace detail {

inline void check_targets(std::string_view answer, std::span<const Target> targets) {
  for (const Target& t : targets) {
    const linker::EntityMention& m = t.mention;
    if (m.start >= m.end || m.end > answer.size() ||
        answer.substr(m.start, m.end - m.start) != m.surface) {
      throw Error(ErrorCode::OffsetInvalid,
                  "target '" + m.entity_id + "' does not match the answer slice");
    }
  }
}

inline RewriteResult apply_insertions(std::string_view answer, Strategy strategy,
                                      std::vector<Insertion> insertions,
                                      std::span<const Target> targets) {
  std::stable_sort(insertions.begin(), insertions.end(),
                   [](const Insertion& a, const Insertion& b) { return a.offset < b.offset; });
  std::string rewritten(answer);
  for (auto it = insertions.rbegin(); it != insertions.rend(); ++it) {
    rewritten.insert(it->offset, it->text);
  }
  RewriteResult result;
  result.original = std::string(answer);
  result.rewritten = std::move(rewritten);
  result.strategy = strategy;
  result.insertions = std::move(insertions);
  for (const Target& t : targets) {
    result.targets.push_back({t.definition.entity_id, t.definition.label,
                              t.definition.description});
  }
  return result;
}

inline bool starts_with_article(std::string_view description) {
  const std::string folded = text::normalize(description);
  return folded.rfind("a ", 0) == 0 || folded.rfind("an ", 0) == 0 ||
         folded.rfind("the ", 0) == 0;
}

inline std::string_view first_word(std::string_view s) {
  const std::vector<text::Token> tokens = text::tokenize(s);
  if (tokens.empty()) return {};
  return s.substr(tokens[0].start, tokens[0].end - tokens[0].start);
}

}  // namespace detail

// Appositive form of a definition. People get a "who is/was" clause; other
// entities get an indefinite article unless the description brings its own
// or an override says otherwise. The leading character is lowercased only
// when the description starts with a capitalized article, the one case where
// we know it is not a proper noun.
inline std::string naturalize(const kb::Definition& definition) {
  std::string body = definition.description;
  const std::string_view head = detail::first_word(body);
  if (!body.empty() && (head == "A" || head == "An" || head == "The")) {
    body[0] = text::fold_char(body[0]);
  }
  const bool has_article = detail::starts_with_article(body);
  kb::Article article = definition.article;
  std::string prefix;
  switch (article) {
    case kb::Article::Auto:
      if (!has_article) prefix = std::string(text::indefinite_article(detail::first_word(body))) + " ";
      break;
    case kb::Article::Indefinite:
      if (!has_article) prefix = std::string(text::indefinite_article(detail::first_word(body))) + " ";
      break;
    case kb::Article::Definite:
      if (!has_article) prefix = "the ";
      break;
    case kb::Article::None:
      break;
  }
  kb::HumanStyle style = definition.style;
  if (style == kb::HumanStyle::Auto) {
    style = definition.kb_type == kb::KbType::Human ? kb::HumanStyle::WhoIs : kb::HumanStyle::Plain;
  }
  switch (style) {
    case kb::HumanStyle::WhoIs: return "who is " + prefix + body;
    case kb::HumanStyle::WhoWas: return "who was " + prefix + body;
    default: return prefix + body;
  }
}

// " (definition)" immediately after the first mention of each target.
inline RewriteResult rewrite_inline_wiki(std::string_view answer, std::span<const Target> targets) {
  detail::check_targets(answer, targets);
  std::vector<Insertion> insertions;
  insertions.reserve(targets.size());
  for (const Target& t : targets) {
    insertions.push_back({t.mention.end, " (" + t.definition.description + ")"});
  }
  return detail::apply_insertions(answer, Strategy::InlineWiki, std::move(insertions), targets);
}

// ", definition," blended after the mention; the trailing comma is dropped
// when the insertion lands directly before sentence-final punctuation or at
// the end of the answer.
inline RewriteResult rewrite_inline_natural(std::string_view answer,
                                            std::span<const Target> targets) {
  detail::check_targets(answer, targets);
  std::vector<Insertion> insertions;
  insertions.reserve(targets.size());
  for (const Target& t : targets) {
    std::string text = ", " + naturalize(t.definition);
    const bool at_end = t.mention.end == answer.size();
    const char next = at_end ? '\0' : answer[t.mention.end];
    if (!at_end && next != '.' && next != '!' && next != '?') text += ",";
    insertions.push_back({t.mention.end, std::move(text)});
  }
  return detail::apply_insertions(answer, Strategy::InlineNatural, std::move(insertions), targets);
}

struct FollowupTemplates {
  std::string question = "Would you like to learn more about {list}?";
  std::string offer = "If you would like to learn more about {list}, feel free to ask!";
  bool serial_comma = true;
};

// Phrasings as they appear in generated output.
inline FollowupTemplates appendix_templates() {
  return {"Would you like to learn more about {list}?",
          "If you would like to learn more about {list}, feel free to ask!", true};
}

// Phrasings as described in prose; both ship because they disagree.
inline FollowupTemplates main_text_templates() {
  return {"Do you want to learn more about {list}?",
          "If you wish to learn more about {list}, feel free to ask.", true};
}

inline FollowupTemplates templates_for_preset(std::string_view preset) {
  const std::string key = text::normalize(preset);
  if (key == "appendix" || key.empty()) return appendix_templates();
  if (key == "main-text" || key == "main_text" || key == "main text") {
    return main_text_templates();
  }
  throw Error(ErrorCode::InvalidConfig, "unknown template preset '" + std::string(preset) + "'");
}

inline std::string render_entity_list(std::span<const std::string> labels, bool serial_comma) {
  if (labels.empty()) throw Error(ErrorCode::NoTargets, "empty entity list");
  if (labels.size() == 1) return labels[0];
  if (labels.size() == 2) return labels[0] + " or " + labels[1];
  std::string out;
  for (std::size_t i = 0; i + 1 < labels.size(); ++i) {
    out += labels[i];
    if (i + 2 < labels.size() || serial_comma) out += ",";
    out += " ";
  }
  out += "or " + labels.back();
  return out;
}

inline std::string fill_template(std::string_view tmpl, std::string_view list) {
  std::string out(tmpl);
  const std::size_t pos = out.find("{list}");
  if (pos == std::string::npos) {
    throw Error(ErrorCode::InvalidConfig, "template lacks a {list} placeholder");
  }
  out.replace(pos, 6, list);
  return out;
}

enum class FollowupVariant { Question, Offer };

// Appends one space plus the filled follow-up prompt.
inline RewriteResult rewrite_followup(std::string_view answer, std::span<const Target> targets,
                                      FollowupVariant variant,
                                      const FollowupTemplates& templates = {}) {
  if (targets.empty()) throw Error(ErrorCode::NoTargets, "follow-up needs at least one target");
  detail::check_targets(answer, targets);
  std::vector<std::string> labels;
  labels.reserve(targets.size());
  for (const Target& t : targets) {
    labels.push_back(t.definition.label.empty() ? t.definition.entity_id : t.definition.label);
  }
  const std::string list = render_entity_list(labels, templates.serial_comma);
  const std::string& tmpl =
      variant == FollowupVariant::Question ? templates.question : templates.offer;
  const std::string suffix = " " + fill_template(tmpl, list);
  std::vector<Insertion> insertions{{answer.size(), suffix}};
  const Strategy strategy = variant == FollowupVariant::Question ? Strategy::FollowupQuestion
                                                                 : Strategy::FollowupOffer;
  return detail::apply_insertions(answer, strategy, std::move(insertions), targets);
}

// Test and tooling helper: strips the logged insertions back out. The result
// must equal the original answer for every well-formed RewriteResult.
// Offsets are original-relative, so removing in ascending order means each
// insertion sits exactly at its own offset by the time it is erased.
inline std::string remove_insertions(const RewriteResult& result) {
  std::string original = result.rewritten;
  std::vector<Insertion> ordered = result.insertions;
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const Insertion& a, const Insertion& b) { return a.offset < b.offset; });
  for (const Insertion& ins : ordered) {
    if (ins.offset > original.size() || ins.offset + ins.text.size() > original.size()) {
      throw Error(ErrorCode::OffsetInvalid, "insertion log does not fit the rewritten text");
    }
    original.erase(ins.offset, ins.text.size());
  }
  return original;
}

}  // namespace salient::rewriter
