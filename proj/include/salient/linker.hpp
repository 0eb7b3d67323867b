#pragma once

#include <algorithm>
#include <chrono>
#include <cstddef>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "httplib.h"
#include "json.hpp"
#include "salient/errors.hpp"
#include "salient/text.hpp"

// Entity mention detection over answers: a local dictionary-based wikifier
// plus a client for WAT-compatible annotation services. Both share the same
// confidence threshold and overlap-resolution rules.

namespace salient::linker {

constexpr double kDefaultThreshold = 0.45;

struct EntityMention {
  std::string entity_id;
  std::string surface;   // exact slice answer[start, end)
  std::size_t start = 0;
  std::size_t end = 0;   // exclusive
  double confidence = 0.0;

  std::size_t length() const { return end - start; }
  bool overlaps(const EntityMention& other) const {
    return start < other.end && other.start < end;
  }
};

// Surface form -> candidate entities with commonness (link prior). Keys are
// stored in matching-normal form: case-folded, whitespace collapsed, and
// stripped of leading/trailing non-word characters so any key is reachable
// from a token span of running text.
class SurfaceFormDictionary {
 public:
  struct Candidate {
    std::string entity_id;
    double commonness = 0.0;
  };

  static std::string canonical_key(std::string_view surface) {
    return text::matching_key(surface);
  }

  void add(std::string_view surface, std::string entity_id, double commonness) {
    if (commonness < 0.0 || commonness > 1.0) {
      throw Error(ErrorCode::OutOfRange, "commonness must be in [0,1]");
    }
    const std::string key = canonical_key(surface);
    if (key.empty()) throw Error(ErrorCode::MalformedLine, "empty surface form");
    auto& candidates = entries_[key];
    double sum = commonness;
    for (const Candidate& c : candidates) sum += c.commonness;
    if (sum > 1.0 + 1e-9) {
      throw Error(ErrorCode::OutOfRange, "commonness for '" + key + "' sums above 1");
    }
    candidates.push_back({std::move(entity_id), commonness});
    max_key_tokens_ = std::max(max_key_tokens_, text::tokenize(key).size());
  }

  // One candidate per line: normalized_surface \t entity_id \t commonness.
  static SurfaceFormDictionary load_tsv(std::istream& in) {
    SurfaceFormDictionary dict;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (text::trim(line).empty() || line.front() == '#') continue;
      std::istringstream fields(line);
      std::string surface, entity_id, commonness;
      if (!std::getline(fields, surface, '\t') || !std::getline(fields, entity_id, '\t') ||
          !std::getline(fields, commonness, '\t')) {
        throw Error(ErrorCode::MalformedLine,
                    "dictionary line " + std::to_string(line_no) + ": expected 3 fields");
      }
      try {
        dict.add(surface, entity_id, std::stod(commonness));
      } catch (const Error&) {
        throw;
      } catch (const std::exception&) {
        throw Error(ErrorCode::MalformedLine,
                    "dictionary line " + std::to_string(line_no) + ": bad commonness");
      }
    }
    return dict;
  }

  static SurfaceFormDictionary load_tsv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open '" + path + "'");
    return load_tsv(in);
  }

  const Candidate* best(const std::string& key) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return nullptr;
    const Candidate* best = nullptr;
    for (const Candidate& c : it->second) {
      if (!best || c.commonness > best->commonness) best = &c;
    }
    return best;
  }

  bool empty() const { return entries_.empty(); }
  std::size_t surface_count() const { return entries_.size(); }
  std::size_t max_key_tokens() const { return max_key_tokens_; }

 private:
  std::unordered_map<std::string, std::vector<Candidate>> entries_;
  std::size_t max_key_tokens_ = 0;
};

namespace detail {

inline void check_threshold(double threshold) {
  if (threshold < 0.0 || threshold > 1.0) {
    throw Error(ErrorCode::OutOfRange, "threshold must be in [0,1]");
  }
}

}  // namespace detail

// Greedy longest-match wikification. Matching is threshold-independent: the
// tiling is fixed first, then mentions below the threshold are dropped, so
// raising the threshold can only ever remove mentions.
inline std::vector<EntityMention> link(std::string_view answer,
                                       const SurfaceFormDictionary& dict,
                                       double threshold = kDefaultThreshold) {
  detail::check_threshold(threshold);
  std::vector<EntityMention> mentions;
  if (dict.empty()) return mentions;
  const std::vector<text::Token> tokens = text::tokenize(answer);
  std::size_t i = 0;
  while (i < tokens.size()) {
    const std::size_t longest = std::min(dict.max_key_tokens(), tokens.size() - i);
    std::size_t matched_len = 0;
    const SurfaceFormDictionary::Candidate* matched = nullptr;
    for (std::size_t len = longest; len >= 1; --len) {
      const std::size_t start = tokens[i].start;
      const std::size_t end = tokens[i + len - 1].end;
      const std::string key = text::normalize(answer.substr(start, end - start));
      if (const auto* candidate = dict.best(key)) {
        matched = candidate;
        matched_len = len;
        break;
      }
    }
    if (matched) {
      const std::size_t start = tokens[i].start;
      const std::size_t end = tokens[i + matched_len - 1].end;
      mentions.push_back({matched->entity_id, std::string(answer.substr(start, end - start)),
                          start, end, matched->commonness});
      i += matched_len;
    } else {
      ++i;
    }
  }
  std::erase_if(mentions, [&](const EntityMention& m) { return m.confidence < threshold; });
  return mentions;
}

// Longest span wins; ties broken by earlier start, then higher confidence.
// Result is sorted by start offset and non-overlapping.
inline std::vector<EntityMention> resolve_overlaps(std::vector<EntityMention> mentions) {
  std::sort(mentions.begin(), mentions.end(), [](const EntityMention& a, const EntityMention& b) {
    if (a.length() != b.length()) return a.length() > b.length();
    if (a.start != b.start) return a.start < b.start;
    return a.confidence > b.confidence;
  });
  std::vector<EntityMention> accepted;
  for (EntityMention& m : mentions) {
    const bool clashes = std::any_of(accepted.begin(), accepted.end(),
                                     [&](const EntityMention& a) { return a.overlaps(m); });
    if (!clashes) accepted.push_back(std::move(m));
  }
  std::sort(accepted.begin(), accepted.end(),
            [](const EntityMention& a, const EntityMention& b) { return a.start < b.start; });
  return accepted;
}

// Annotation list from a WAT-style JSON response. Accepts either a bare array
// or an object with an "annotations" array; field spellings follow the
// service conventions (spot/surface, title/id, rho/score).
inline std::vector<EntityMention> parse_remote_annotations(const std::string& body,
                                                           std::string_view answer) {
  const nlohmann::json parsed = nlohmann::json::parse(body, nullptr, false);
  if (parsed.is_discarded()) throw Error(ErrorCode::Parse, "response is not JSON");
  const nlohmann::json* annotations = nullptr;
  if (parsed.is_array()) {
    annotations = &parsed;
  } else if (parsed.is_object() && parsed.contains("annotations") &&
             parsed["annotations"].is_array()) {
    annotations = &parsed["annotations"];
  } else {
    throw Error(ErrorCode::Parse, "no annotation list in response");
  }
  std::vector<EntityMention> mentions;
  for (const auto& a : *annotations) {
    if (!a.is_object()) throw Error(ErrorCode::Parse, "annotation is not an object");
    const auto pick = [&](const char* primary, const char* fallback) -> const nlohmann::json* {
      if (a.contains(primary)) return &a[primary];
      if (a.contains(fallback)) return &a[fallback];
      return nullptr;
    };
    const nlohmann::json* id = pick("title", "id");
    const nlohmann::json* score = pick("rho", "score");
    if (!id || !id->is_string() || !score || !score->is_number() || !a.contains("start") ||
        !a.contains("end") || !a["start"].is_number_integer() || !a["end"].is_number_integer()) {
      throw Error(ErrorCode::Parse, "annotation missing required fields");
    }
    const long long start = a["start"].get<long long>();
    const long long end = a["end"].get<long long>();
    if (start < 0 || end <= start || static_cast<std::size_t>(end) > answer.size()) {
      throw Error(ErrorCode::Parse, "annotation offsets out of range");
    }
    EntityMention m;
    m.entity_id = id->get<std::string>();
    m.start = static_cast<std::size_t>(start);
    m.end = static_cast<std::size_t>(end);
    // The answer slice is authoritative; services disagree with their own
    // "spot" field often enough (whitespace, casing) that we ignore it.
    m.surface = std::string(answer.substr(m.start, m.end - m.start));
    m.confidence = score->get<double>();
    if (m.confidence < 0.0 || m.confidence > 1.0) {
      throw Error(ErrorCode::Parse, "annotation score outside [0,1]");
    }
    mentions.push_back(std::move(m));
  }
  return mentions;
}

struct RemoteLinkerConfig {
  std::string endpoint;  // full URL, e.g. http://host:port/tag
  int timeout_ms = 5000;
  int retries = 1;  // additional attempts after the first
};

namespace detail {

struct SplitUrl {
  std::string host_port;  // scheme://host:port
  std::string path;
};

inline SplitUrl split_url(const std::string& url) {
  const std::size_t scheme = url.find("://");
  if (scheme == std::string::npos) {
    throw Error(ErrorCode::InvalidConfig, "endpoint must include a scheme: '" + url + "'");
  }
  const std::size_t path_start = url.find('/', scheme + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

inline httplib::Result post_with_retries(const std::string& endpoint,
                                         const httplib::Params& params, int timeout_ms,
                                         int retries) {
  const SplitUrl url = split_url(endpoint);
  httplib::Client client(url.host_port);
  client.set_connection_timeout(0, timeout_ms * 1000);
  client.set_read_timeout(0, timeout_ms * 1000);
  httplib::Result result;
  for (int attempt = 0; attempt <= retries; ++attempt) {
    result = client.Post(url.path, params);
    if (result && result->status < 500) return result;
    if (attempt < retries) std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
  return result;
}

}  // namespace detail

// Remote annotation via a WAT-compatible endpoint. Applies the same
// threshold and overlap rules as the local linker.
inline std::vector<EntityMention> link_remote(std::string_view answer,
                                              const RemoteLinkerConfig& config,
                                              double threshold = kDefaultThreshold) {
  detail::check_threshold(threshold);
  if (answer.empty()) return {};
  httplib::Params params{{"text", std::string(answer)}};
  httplib::Result result =
      detail::post_with_retries(config.endpoint, params, config.timeout_ms, config.retries);
  if (!result) {
    throw Error(ErrorCode::Network, "no response from '" + config.endpoint + "': " +
                                        httplib::to_string(result.error()));
  }
  if (result->status != 200) {
    throw Error(ErrorCode::Network,
                "'" + config.endpoint + "' returned status " + std::to_string(result->status));
  }
  std::vector<EntityMention> mentions = parse_remote_annotations(result->body, answer);
  std::erase_if(mentions, [&](const EntityMention& m) { return m.confidence < threshold; });
  return resolve_overlaps(std::move(mentions));
}

struct QuestionFilterOptions {
  bool by_entity_id = true;  // drop mentions whose entity also links in the question
  bool by_surface = true;    // drop mentions whose surface occurs in the question
};

// Removes answer mentions the asker evidently already knows about: entities
// linked in the question and surfaces occurring verbatim (token-boundary,
// case-folded) in the question. Order is preserved.
inline std::vector<EntityMention> filter_question_entities(
    std::span<const EntityMention> mentions, std::string_view question,
    std::span<const EntityMention> question_mentions, QuestionFilterOptions options = {}) {
  std::unordered_set<std::string> question_ids;
  for (const EntityMention& m : question_mentions) question_ids.insert(m.entity_id);
  std::vector<EntityMention> kept;
  kept.reserve(mentions.size());
  for (const EntityMention& m : mentions) {
    if (options.by_entity_id && question_ids.count(m.entity_id) > 0) continue;
    if (options.by_surface && text::contains_token_phrase(question, m.surface)) continue;
    kept.push_back(m);
  }
  return kept;
}

}  // namespace salient::linker
