#pragma once

#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "httplib.h"
#include "json.hpp"
#include "salient/errors.hpp"
#include "salient/text.hpp"

// Short entity definitions from a local TSV snapshot or a Wikibase-style
// endpoint, with an append-only persistent cache and conversational-length
// cleanup of descriptions.

namespace salient::kb {

constexpr std::size_t kDefaultMaxDescriptionChars = 120;

enum class KbType { None, Human, Location, Organization, Other };

inline KbType parse_kb_type(std::string_view s) {
  const std::string folded = text::normalize(s);
  if (folded.empty()) return KbType::None;
  if (folded == "human" || folded == "person") return KbType::Human;
  if (folded == "geographic location" || folded == "location" || folded == "geo") {
    return KbType::Location;
  }
  if (folded == "organization" || folded == "organisation" || folded == "org") {
    return KbType::Organization;
  }
  return KbType::Other;
}

inline const char* to_string(KbType t) {
  switch (t) {
    case KbType::None: return "";
    case KbType::Human: return "human";
    case KbType::Location: return "geographic location";
    case KbType::Organization: return "organization";
    case KbType::Other: return "other";
  }
  return "";
}

enum class DefinitionSource { Snapshot, Remote, Curated };

// Article choice when a definition is blended into text as an appositive.
enum class Article { Auto, Indefinite, Definite, None };

inline Article parse_article(std::string_view s) {
  const std::string folded = text::normalize(s);
  if (folded.empty() || folded == "auto") return Article::Auto;
  if (folded == "a" || folded == "an" || folded == "indefinite") return Article::Indefinite;
  if (folded == "the" || folded == "definite") return Article::Definite;
  if (folded == "none") return Article::None;
  throw Error(ErrorCode::MalformedLine, "unknown article override '" + std::string(s) + "'");
}

// Relative-clause style for definitions of people.
enum class HumanStyle { Auto, WhoIs, WhoWas, Plain };

inline HumanStyle parse_human_style(std::string_view s) {
  const std::string folded = text::normalize(s);
  if (folded.empty() || folded == "auto") return HumanStyle::Auto;
  if (folded == "who_is" || folded == "who is") return HumanStyle::WhoIs;
  if (folded == "who_was" || folded == "who was") return HumanStyle::WhoWas;
  if (folded == "plain") return HumanStyle::Plain;
  throw Error(ErrorCode::MalformedLine, "unknown style override '" + std::string(s) + "'");
}

struct Definition {
  std::string entity_id;
  std::string label;
  std::string description;  // cleaned: single line, capped, no trailing period
  DefinitionSource source = DefinitionSource::Snapshot;
  KbType kb_type = KbType::None;
  Article article = Article::Auto;
  HumanStyle style = HumanStyle::Auto;
  std::optional<double> popularity;
};

namespace detail {

// True when the period at `pos` ends a sentence: it is followed by
// whitespace (or the end of the string) and the word before it is longer
// than one letter, so initials like "J.K." do not split.
inline bool is_sentence_end(std::string_view s, std::size_t pos) {
  if (s[pos] != '.' && s[pos] != '!' && s[pos] != '?') return false;
  if (pos + 1 < s.size() && !text::is_space_char(static_cast<unsigned char>(s[pos + 1]))) {
    return false;
  }
  if (s[pos] != '.') return true;
  std::size_t word_len = 0;
  std::size_t i = pos;
  while (i > 0 && text::is_word_char(static_cast<unsigned char>(s[i - 1]))) {
    ++word_len;
    --i;
  }
  return word_len != 1;
}

inline std::string first_sentence(std::string_view s) {
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (is_sentence_end(s, i)) return std::string(s.substr(0, i + 1));
  }
  return std::string(s);
}

inline std::string strip_parentheticals(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  int depth = 0;
  for (char c : s) {
    if (c == '(') {
      ++depth;
      continue;
    }
    if (c == ')') {
      if (depth > 0) --depth;
      continue;
    }
    if (depth == 0) out.push_back(c);
  }
  return out;
}

inline std::string tidy_spacing(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    if (text::is_space_char(static_cast<unsigned char>(c))) {
      if (out.empty() || out.back() == ' ') continue;
      out.push_back(' ');
      continue;
    }
    if ((c == ',' || c == '.' || c == ';' || c == ':' || c == '!' || c == '?') && !out.empty() &&
        out.back() == ' ') {
      out.pop_back();
    }
    out.push_back(c);
  }
  while (!out.empty() && out.back() == ' ') out.pop_back();
  return out;
}

}  // namespace detail

// Cleanup applied to every description before it can be inserted into an
// answer: first sentence only, parentheticals removed, truncated at a word
// boundary within `max_chars`, trailing period dropped. Idempotent.
inline std::string clean_description(std::string_view raw,
                                     std::size_t max_chars = kDefaultMaxDescriptionChars) {
  std::string s = detail::first_sentence(text::trim(raw));
  s = detail::tidy_spacing(detail::strip_parentheticals(s));
  if (s.size() > max_chars) {
    std::size_t cut = max_chars;
    while (cut > 0 && s[cut] != ' ') --cut;
    if (cut == 0) cut = max_chars;  // one giant word; hard cut
    s.resize(cut);
    while (!s.empty() && (s.back() == ' ' || s.back() == ',')) s.pop_back();
  }
  while (!s.empty() && (s.back() == '.' || s.back() == ' ')) s.pop_back();
  return s;
}

// Snapshot rows: entity_id \t label \t description, with optional trailing
// columns popularity, kb_type, article override, and style override. Rows
// carrying naturalization overrides count as curated.
inline Definition parse_snapshot_row(const std::string& line, std::size_t line_no,
                                     std::size_t max_chars = kDefaultMaxDescriptionChars) {
  std::vector<std::string> fields;
  std::istringstream stream(line);
  std::string field;
  while (std::getline(stream, field, '\t')) fields.push_back(field);
  if (fields.size() < 3) {
    throw Error(ErrorCode::MalformedLine,
                "snapshot line " + std::to_string(line_no) + ": expected at least 3 fields");
  }
  Definition def;
  def.entity_id = text::trim(fields[0]);
  def.label = text::trim(fields[1]);
  def.description = clean_description(fields[2], max_chars);
  if (def.entity_id.empty() || def.description.empty()) {
    throw Error(ErrorCode::MalformedLine,
                "snapshot line " + std::to_string(line_no) + ": empty id or description");
  }
  if (fields.size() > 3 && !text::trim(fields[3]).empty()) {
    try {
      def.popularity = std::stod(fields[3]);
    } catch (const std::exception&) {
      throw Error(ErrorCode::MalformedLine,
                  "snapshot line " + std::to_string(line_no) + ": bad popularity");
    }
  }
  if (fields.size() > 4) def.kb_type = parse_kb_type(fields[4]);
  if (fields.size() > 5) def.article = parse_article(fields[5]);
  if (fields.size() > 6) def.style = parse_human_style(fields[6]);
  def.source = (def.article != Article::Auto || def.style != HumanStyle::Auto)
                   ? DefinitionSource::Curated
                   : DefinitionSource::Snapshot;
  return def;
}

struct FetchedEntity {
  std::string label;
  std::string description;
};

using RemoteFetcher = std::function<FetchedEntity(const std::string& entity_id)>;

// Definition lookup: snapshot first, then the persistent cache, then the
// remote fetcher. Remote results are cleaned, cached in memory, and appended
// to the cache file when one is configured. Reads may run concurrently;
// cache writes are serialized.
class DefinitionStore {
 public:
  DefinitionStore() = default;

  void load_snapshot(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (text::trim(line).empty() || line.front() == '#') continue;
      Definition def = parse_snapshot_row(line, line_no, max_chars_);
      snapshot_[def.entity_id] = std::move(def);
    }
  }

  void load_snapshot_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open '" + path + "'");
    load_snapshot(in);
  }

  // Loads any existing rows, then appends new fetches to the same file.
  void attach_cache_file(const std::string& path) {
    cache_path_ = path;
    std::ifstream in(path);
    if (!in) return;  // will be created on first write
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (text::trim(line).empty()) continue;
      Definition def = parse_snapshot_row(line, line_no, max_chars_);
      def.source = DefinitionSource::Remote;
      cache_[def.entity_id] = std::move(def);
    }
  }

  void set_fetcher(RemoteFetcher fetcher) { fetcher_ = std::move(fetcher); }
  void set_max_description_chars(std::size_t max_chars) { max_chars_ = max_chars; }

  bool has_snapshot_entry(const std::string& entity_id) const {
    return snapshot_.count(entity_id) > 0;
  }

  const std::map<std::string, Definition>& snapshot() const { return snapshot_; }

  Definition get(const std::string& entity_id) {
    if (entity_id.empty()) throw Error(ErrorCode::NotFound, "empty entity id");
    if (auto it = snapshot_.find(entity_id); it != snapshot_.end()) return it->second;
    {
      std::lock_guard<std::mutex> lock(mutex_);
      if (auto it = cache_.find(entity_id); it != cache_.end()) return it->second;
    }
    if (!fetcher_) {
      throw Error(ErrorCode::NotFound, "no definition for '" + entity_id + "'");
    }
    FetchedEntity fetched = fetcher_(entity_id);
    Definition def;
    def.entity_id = entity_id;
    def.label = fetched.label.empty() ? entity_id : fetched.label;
    def.description = clean_description(fetched.description, max_chars_);
    def.source = DefinitionSource::Remote;
    if (def.description.empty()) {
      throw Error(ErrorCode::NotFound, "no usable description for '" + entity_id + "'");
    }
    std::lock_guard<std::mutex> lock(mutex_);
    auto [it, inserted] = cache_.emplace(entity_id, def);
    if (inserted && !cache_path_.empty()) {
      std::ofstream out(cache_path_, std::ios::app);
      if (!out) throw Error(ErrorCode::Io, "cannot append to '" + cache_path_ + "'");
      out << def.entity_id << '\t' << def.label << '\t' << def.description << '\n';
    }
    return it->second;
  }

 private:
  std::map<std::string, Definition> snapshot_;
  std::map<std::string, Definition> cache_;
  std::string cache_path_;
  RemoteFetcher fetcher_;
  std::size_t max_chars_ = kDefaultMaxDescriptionChars;
  std::mutex mutex_;
};

struct WikibaseConfig {
  std::string api_url;  // e.g. https://www.wikidata.org/w/api.php
  std::string language = "en";
  int timeout_ms = 5000;
  int retries = 1;
};

// Label and description for one entity out of a wbgetentities response.
inline FetchedEntity parse_wikibase_entity(const std::string& body, const std::string& entity_id,
                                           const std::string& language) {
  const nlohmann::json parsed = nlohmann::json::parse(body, nullptr, false);
  if (parsed.is_discarded() || !parsed.is_object()) {
    throw Error(ErrorCode::Parse, "entity response is not JSON");
  }
  if (!parsed.contains("entities") || !parsed["entities"].is_object()) {
    throw Error(ErrorCode::Parse, "entity response lacks 'entities'");
  }
  const auto& entities = parsed["entities"];
  if (!entities.contains(entity_id)) {
    throw Error(ErrorCode::NotFound, "entity '" + entity_id + "' not in response");
  }
  const auto& entity = entities[entity_id];
  if (entity.contains("missing")) {
    throw Error(ErrorCode::NotFound, "entity '" + entity_id + "' is missing upstream");
  }
  FetchedEntity fetched;
  if (entity.contains("labels") && entity["labels"].contains(language) &&
      entity["labels"][language].contains("value")) {
    fetched.label = entity["labels"][language]["value"].get<std::string>();
  }
  if (!entity.contains("descriptions") || !entity["descriptions"].contains(language) ||
      !entity["descriptions"][language].contains("value")) {
    throw Error(ErrorCode::NotFound,
                "no '" + language + "' description for '" + entity_id + "'");
  }
  fetched.description = entity["descriptions"][language]["value"].get<std::string>();
  return fetched;
}

inline FetchedEntity fetch_remote_description(const std::string& entity_id,
                                              const WikibaseConfig& config) {
  if (entity_id.empty()) throw Error(ErrorCode::NotFound, "empty entity id");
  const std::size_t scheme = config.api_url.find("://");
  if (scheme == std::string::npos) {
    throw Error(ErrorCode::InvalidConfig, "api_url must include a scheme");
  }
  const std::size_t path_start = config.api_url.find('/', scheme + 3);
  const std::string host = config.api_url.substr(0, path_start);
  const std::string path =
      path_start == std::string::npos ? std::string("/") : config.api_url.substr(path_start);
  httplib::Client client(host);
  client.set_connection_timeout(0, config.timeout_ms * 1000);
  client.set_read_timeout(0, config.timeout_ms * 1000);
  const std::string query = path + "?action=wbgetentities&format=json&props=labels%7Cdescriptions" +
                            "&ids=" + entity_id + "&languages=" + config.language;
  httplib::Result result;
  for (int attempt = 0; attempt <= config.retries; ++attempt) {
    result = client.Get(query);
    if (result && result->status < 500) break;
  }
  if (!result) {
    throw Error(ErrorCode::Network, "no response from '" + config.api_url + "': " +
                                        httplib::to_string(result.error()));
  }
  if (result->status != 200) {
    throw Error(ErrorCode::Network,
                "'" + config.api_url + "' returned status " + std::to_string(result->status));
  }
  return parse_wikibase_entity(result->body, entity_id, config.language);
}

// Ready-made fetcher for DefinitionStore.
inline RemoteFetcher wikibase_fetcher(WikibaseConfig config) {
  return [config = std::move(config)](const std::string& entity_id) {
    return fetch_remote_description(entity_id, config);
  };
}

}  // namespace salient::kb
