#pragma once

#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "json.hpp"
#include "salient/errors.hpp"
#include "salient/text.hpp"

// Data model and JSON-Lines ingestion for conversations, salience
// annotations, and rewrite-preference annotations. Loaders validate all
// invariants up front and preserve file order; loaded values are immutable
// from the caller's point of view and safe to share across threads.

namespace salient::corpus {

using nlohmann::json;

enum class Source { CAST, NQ, QUAC, OTHER };

inline const char* to_string(Source s) {
  switch (s) {
    case Source::CAST: return "CAST";
    case Source::NQ: return "NQ";
    case Source::QUAC: return "QUAC";
    case Source::OTHER: return "OTHER";
  }
  return "OTHER";
}

inline Source parse_source(std::string_view s) {
  if (s == "CAST") return Source::CAST;
  if (s == "NQ") return Source::NQ;
  if (s == "QUAC") return Source::QUAC;
  if (s == "OTHER") return Source::OTHER;
  throw Error(ErrorCode::MalformedLine, "unknown source '" + std::string(s) + "'");
}

struct Turn {
  int turn_index = 0;
  std::string question;
  std::string answer;
};

struct Conversation {
  std::string conversation_id;
  Source source = Source::OTHER;
  std::vector<Turn> turns;
};

struct SalienceAnnotation {
  std::string conversation_id;
  int turn_index = 0;
  std::string entity_id;
  std::string surface;
  std::vector<int> labels;  // each in {0, 1, 2}
};

enum class RewriteOption {
  ORIGINAL,
  INLINEDEF_WIKI,
  INLINEDEF_NATURAL,
  FOLLOWUP_QUESTION,
  FOLLOWUP_OFFER,
};

inline const char* to_string(RewriteOption o) {
  switch (o) {
    case RewriteOption::ORIGINAL: return "ORIGINAL";
    case RewriteOption::INLINEDEF_WIKI: return "INLINEDEF_WIKI";
    case RewriteOption::INLINEDEF_NATURAL: return "INLINEDEF_NATURAL";
    case RewriteOption::FOLLOWUP_QUESTION: return "FOLLOWUP_QUESTION";
    case RewriteOption::FOLLOWUP_OFFER: return "FOLLOWUP_OFFER";
  }
  return "ORIGINAL";
}

inline RewriteOption parse_rewrite_option(std::string_view s) {
  if (s == "ORIGINAL") return RewriteOption::ORIGINAL;
  if (s == "INLINEDEF_WIKI") return RewriteOption::INLINEDEF_WIKI;
  if (s == "INLINEDEF_NATURAL") return RewriteOption::INLINEDEF_NATURAL;
  if (s == "FOLLOWUP_QUESTION") return RewriteOption::FOLLOWUP_QUESTION;
  if (s == "FOLLOWUP_OFFER") return RewriteOption::FOLLOWUP_OFFER;
  throw Error(ErrorCode::MalformedLine, "unknown rewrite option '" + std::string(s) + "'");
}

struct PreferenceAnnotation {
  std::string qa_id;
  std::vector<RewriteOption> options_shown;  // 3 distinct entries
  int choice = 0;                            // index into options_shown
  std::string reason;
  int top_n = 1;  // {1, 2, 3}
};

namespace detail {

inline json parse_line(const std::string& line, std::size_t line_no) {
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw Error(ErrorCode::MalformedLine,
                "line " + std::to_string(line_no) + ": not a JSON object");
  }
  return j;
}

inline void require(bool ok, std::size_t line_no, const std::string& what) {
  if (!ok) {
    throw Error(ErrorCode::MalformedLine, "line " + std::to_string(line_no) + ": " + what);
  }
}

}  // namespace detail

// --- conversations.jsonl ---------------------------------------------------

inline Conversation conversation_from_json(const json& j, std::size_t line_no) {
  using detail::require;
  require(j.contains("conversation_id") && j["conversation_id"].is_string(), line_no,
          "missing conversation_id");
  require(j.contains("turns") && j["turns"].is_array() && !j["turns"].empty(), line_no,
          "missing or empty turns");
  Conversation conv;
  conv.conversation_id = j["conversation_id"].get<std::string>();
  require(!conv.conversation_id.empty(), line_no, "empty conversation_id");
  if (j.contains("source")) {
    require(j["source"].is_string(), line_no, "source must be a string");
    try {
      conv.source = parse_source(j["source"].get<std::string>());
    } catch (const Error&) {
      throw Error(ErrorCode::MalformedLine,
                  "line " + std::to_string(line_no) + ": unknown source");
    }
  }
  int expected_index = 1;
  for (const json& tj : j["turns"]) {
    require(tj.is_object(), line_no, "turn must be an object");
    require(tj.contains("turn_index") && tj["turn_index"].is_number_integer(), line_no,
            "missing turn_index");
    require(tj.contains("question") && tj["question"].is_string(), line_no, "missing question");
    require(tj.contains("answer") && tj["answer"].is_string(), line_no, "missing answer");
    Turn turn;
    turn.turn_index = tj["turn_index"].get<int>();
    turn.question = tj["question"].get<std::string>();
    turn.answer = tj["answer"].get<std::string>();
    require(turn.turn_index == expected_index, line_no,
            "turn indices must be contiguous starting at 1");
    require(!text::trim(turn.question).empty(), line_no, "question is blank");
    require(!text::trim(turn.answer).empty(), line_no, "answer is blank");
    ++expected_index;
    conv.turns.push_back(std::move(turn));
  }
  return conv;
}

inline json to_json(const Conversation& conv) {
  json turns = json::array();
  for (const Turn& t : conv.turns) {
    turns.push_back({{"turn_index", t.turn_index}, {"question", t.question}, {"answer", t.answer}});
  }
  return {{"conversation_id", conv.conversation_id},
          {"source", to_string(conv.source)},
          {"turns", turns}};
}

inline std::vector<Conversation> load_corpus(std::istream& in) {
  std::vector<Conversation> conversations;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    Conversation conv = conversation_from_json(detail::parse_line(line, line_no), line_no);
    if (!seen.insert(conv.conversation_id).second) {
      throw Error(ErrorCode::DuplicateId,
                  "conversation_id '" + conv.conversation_id + "' repeated at line " +
                      std::to_string(line_no));
    }
    conversations.push_back(std::move(conv));
  }
  return conversations;
}

inline std::vector<Conversation> load_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path + "'");
  return load_corpus(in);
}

inline void save_corpus(const std::vector<Conversation>& conversations, std::ostream& out) {
  for (const Conversation& c : conversations) out << to_json(c).dump() << '\n';
}

inline void save_corpus(const std::vector<Conversation>& conversations, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write '" + path + "'");
  save_corpus(conversations, out);
}

// --- salience.jsonl --------------------------------------------------------

inline SalienceAnnotation salience_annotation_from_json(const json& j, std::size_t line_no) {
  using detail::require;
  require(j.contains("conversation_id") && j["conversation_id"].is_string(), line_no,
          "missing conversation_id");
  require(j.contains("turn_index") && j["turn_index"].is_number_integer(), line_no,
          "missing turn_index");
  require(j.contains("entity_id") && j["entity_id"].is_string(), line_no, "missing entity_id");
  require(j.contains("surface") && j["surface"].is_string(), line_no, "missing surface");
  require(j.contains("labels") && j["labels"].is_array(), line_no, "missing labels");
  SalienceAnnotation a;
  a.conversation_id = j["conversation_id"].get<std::string>();
  a.turn_index = j["turn_index"].get<int>();
  a.entity_id = j["entity_id"].get<std::string>();
  a.surface = j["surface"].get<std::string>();
  require(a.turn_index >= 1, line_no, "turn_index must be positive");
  require(!a.entity_id.empty(), line_no, "empty entity_id");
  if (j["labels"].empty()) {
    throw Error(ErrorCode::InvalidLabel,
                "line " + std::to_string(line_no) + ": labels must be non-empty");
  }
  for (const json& lj : j["labels"]) {
    if (!lj.is_number_integer()) {
      throw Error(ErrorCode::InvalidLabel,
                  "line " + std::to_string(line_no) + ": label is not an integer");
    }
    const int label = lj.get<int>();
    if (label < 0 || label > 2) {
      throw Error(ErrorCode::InvalidLabel, "line " + std::to_string(line_no) + ": label " +
                                               std::to_string(label) + " outside {0,1,2}");
    }
    a.labels.push_back(label);
  }
  return a;
}

inline json to_json(const SalienceAnnotation& a) {
  return {{"conversation_id", a.conversation_id},
          {"turn_index", a.turn_index},
          {"entity_id", a.entity_id},
          {"surface", a.surface},
          {"labels", a.labels}};
}

inline std::vector<SalienceAnnotation> load_salience_annotations(std::istream& in) {
  std::vector<SalienceAnnotation> annotations;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    annotations.push_back(
        salience_annotation_from_json(detail::parse_line(line, line_no), line_no));
  }
  return annotations;
}

inline std::vector<SalienceAnnotation> load_salience_annotations(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path + "'");
  return load_salience_annotations(in);
}

inline void save_salience_annotations(const std::vector<SalienceAnnotation>& annotations,
                                      std::ostream& out) {
  for (const SalienceAnnotation& a : annotations) out << to_json(a).dump() << '\n';
}

// --- preferences.jsonl -----------------------------------------------------

inline PreferenceAnnotation preference_from_json(const json& j, std::size_t line_no) {
  using detail::require;
  require(j.contains("qa_id") && j["qa_id"].is_string(), line_no, "missing qa_id");
  require(j.contains("options_shown") && j["options_shown"].is_array(), line_no,
          "missing options_shown");
  require(j.contains("choice") && j["choice"].is_number_integer(), line_no, "missing choice");
  require(j.contains("top_n") && j["top_n"].is_number_integer(), line_no, "missing top_n");
  PreferenceAnnotation p;
  p.qa_id = j["qa_id"].get<std::string>();
  for (const json& oj : j["options_shown"]) {
    require(oj.is_string(), line_no, "option must be a string");
    try {
      p.options_shown.push_back(parse_rewrite_option(oj.get<std::string>()));
    } catch (const Error&) {
      throw Error(ErrorCode::MalformedLine,
                  "line " + std::to_string(line_no) + ": unknown rewrite option");
    }
  }
  require(p.options_shown.size() == 3, line_no, "options_shown must have 3 entries");
  require(std::set<RewriteOption>(p.options_shown.begin(), p.options_shown.end()).size() == 3,
          line_no, "options_shown entries must be distinct");
  p.choice = j["choice"].get<int>();
  if (p.choice < 0 || p.choice >= static_cast<int>(p.options_shown.size())) {
    throw Error(ErrorCode::OutOfRange, "line " + std::to_string(line_no) + ": choice " +
                                           std::to_string(p.choice) + " outside options_shown");
  }
  if (j.contains("reason")) {
    require(j["reason"].is_string(), line_no, "reason must be a string");
    p.reason = j["reason"].get<std::string>();
  }
  p.top_n = j["top_n"].get<int>();
  require(p.top_n >= 1 && p.top_n <= 3, line_no, "top_n must be in {1,2,3}");
  return p;
}

inline json to_json(const PreferenceAnnotation& p) {
  json options = json::array();
  for (RewriteOption o : p.options_shown) options.push_back(to_string(o));
  return {{"qa_id", p.qa_id},
          {"options_shown", options},
          {"choice", p.choice},
          {"reason", p.reason},
          {"top_n", p.top_n}};
}

inline std::vector<PreferenceAnnotation> load_preferences(std::istream& in) {
  std::vector<PreferenceAnnotation> prefs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    prefs.push_back(preference_from_json(detail::parse_line(line, line_no), line_no));
  }
  return prefs;
}

inline std::vector<PreferenceAnnotation> load_preferences(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path + "'");
  return load_preferences(in);
}

inline void save_preferences(const std::vector<PreferenceAnnotation>& prefs, std::ostream& out) {
  for (const PreferenceAnnotation& p : prefs) out << to_json(p).dump() << '\n';
}

}  // namespace salient::corpus
