#pragma once

#include <cstdlib>
#include <fstream>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

#include "json.hpp"
#include "salient/errors.hpp"
#include "salient/rewriter.hpp"
#include "salient/text.hpp"

// Run configuration for the CLI. Values resolve in the order
// defaults < config file < environment (SALIENT_*) < command-line flags.

namespace salient::cli {

enum class LinkerMode { Local, Remote };

inline LinkerMode parse_linker_mode(std::string_view s) {
  const std::string key = text::normalize(s);
  if (key == "local") return LinkerMode::Local;
  if (key == "remote") return LinkerMode::Remote;
  throw Error(ErrorCode::InvalidConfig, "unknown linker mode '" + std::string(s) + "'");
}

struct RunConfig {
  // paths
  std::string corpus_path;
  std::string annotations_path;
  std::string preferences_path;
  std::string mentions_path;
  std::string kb_snapshot_path;
  std::string cache_path;
  std::string dict_path;
  std::string answers_path;
  std::string out_path;

  // linker
  LinkerMode linker = LinkerMode::Local;
  std::string endpoint;
  double threshold = 0.45;
  bool question_filter = true;

  // rewriting
  rewriter::Strategy strategy = rewriter::Strategy::InlineWiki;
  int top_n = 3;
  int max_top_n = 3;
  std::string template_preset = "appendix";
  std::optional<std::string> question_template;  // override on top of the preset
  std::optional<std::string> offer_template;
  bool serial_comma = true;
  bool exclude_special_cases = false;

  // kb
  std::size_t max_definition_chars = 120;
  std::string language = "en";
  int timeout_ms = 5000;
  int retries = 1;

  void validate() const {
    if (threshold < 0.0 || threshold > 1.0) {
      throw Error(ErrorCode::InvalidConfig, "threshold must be in [0,1]");
    }
    if (top_n < 1 || top_n > max_top_n) {
      throw Error(ErrorCode::InvalidConfig,
                  "top_n must be in [1," + std::to_string(max_top_n) + "]");
    }
    if (max_definition_chars == 0) {
      throw Error(ErrorCode::InvalidConfig, "max_definition_chars must be positive");
    }
  }

  rewriter::FollowupTemplates followup_templates() const {
    rewriter::FollowupTemplates templates = rewriter::templates_for_preset(template_preset);
    if (question_template) templates.question = *question_template;
    if (offer_template) templates.offer = *offer_template;
    templates.serial_comma = serial_comma;
    return templates;
  }
};

inline void apply_json(RunConfig& config, const nlohmann::json& j) try {
  if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, "config file must hold a JSON object");
  const auto str = [&](const char* key, std::string& out) {
    if (j.contains(key)) out = j.at(key).get<std::string>();
  };
  if (j.contains("paths")) {
    const auto& p = j.at("paths");
    const auto path = [&](const char* key, std::string& out) {
      if (p.contains(key)) out = p.at(key).get<std::string>();
    };
    path("corpus", config.corpus_path);
    path("annotations", config.annotations_path);
    path("preferences", config.preferences_path);
    path("mentions", config.mentions_path);
    path("kb_snapshot", config.kb_snapshot_path);
    path("cache", config.cache_path);
    path("dict", config.dict_path);
    path("answers", config.answers_path);
    path("out", config.out_path);
  }
  if (j.contains("linker")) config.linker = parse_linker_mode(j.at("linker").get<std::string>());
  str("endpoint", config.endpoint);
  if (j.contains("threshold")) config.threshold = j.at("threshold").get<double>();
  if (j.contains("question_filter")) config.question_filter = j.at("question_filter").get<bool>();
  if (j.contains("strategy")) {
    config.strategy = rewriter::parse_strategy(j.at("strategy").get<std::string>());
  }
  if (j.contains("top_n")) config.top_n = j.at("top_n").get<int>();
  if (j.contains("max_top_n")) config.max_top_n = j.at("max_top_n").get<int>();
  str("template_preset", config.template_preset);
  if (j.contains("serial_comma")) config.serial_comma = j.at("serial_comma").get<bool>();
  if (j.contains("exclude_special_cases")) {
    config.exclude_special_cases = j.at("exclude_special_cases").get<bool>();
  }
  if (j.contains("followup")) {
    const auto& f = j.at("followup");
    if (f.contains("question_template")) {
      config.question_template = f.at("question_template").get<std::string>();
    }
    if (f.contains("offer_template")) {
      config.offer_template = f.at("offer_template").get<std::string>();
    }
  }
  if (j.contains("inline") && j.at("inline").contains("max_definition_chars")) {
    config.max_definition_chars = j.at("inline").at("max_definition_chars").get<std::size_t>();
  }
  str("language", config.language);
  if (j.contains("timeout_ms")) config.timeout_ms = j.at("timeout_ms").get<int>();
  if (j.contains("retries")) config.retries = j.at("retries").get<int>();
} catch (const nlohmann::json::exception& e) {
  throw Error(ErrorCode::InvalidConfig, std::string("config value: ") + e.what());
}

inline void apply_config_file(RunConfig& config, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open config '" + path + "'");
  nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::InvalidConfig, "config '" + path + "' is not JSON");
  apply_json(config, j);
}

using EnvLookup = std::function<const char*(const char*)>;

inline EnvLookup system_env() {
  return [](const char* name) { return std::getenv(name); };
}

// SALIENT_* environment overrides; lookup is injectable for tests.
inline void apply_env(RunConfig& config, const EnvLookup& env = system_env()) {
  const auto str = [&](const char* name, std::string& out) {
    if (const char* v = env(name)) out = v;
  };
  const auto boolean = [&](const char* name, bool& out) {
    if (const char* v = env(name)) {
      const std::string key = text::normalize(v);
      if (key == "1" || key == "true" || key == "yes" || key == "on") {
        out = true;
      } else if (key == "0" || key == "false" || key == "no" || key == "off") {
        out = false;
      } else {
        throw Error(ErrorCode::InvalidConfig, std::string(name) + " must be a boolean");
      }
    }
  };
  str("SALIENT_CORPUS", config.corpus_path);
  str("SALIENT_ANNOTATIONS", config.annotations_path);
  str("SALIENT_PREFERENCES", config.preferences_path);
  str("SALIENT_MENTIONS", config.mentions_path);
  str("SALIENT_KB_SNAPSHOT", config.kb_snapshot_path);
  str("SALIENT_CACHE", config.cache_path);
  str("SALIENT_DICT", config.dict_path);
  str("SALIENT_ANSWERS", config.answers_path);
  str("SALIENT_ENDPOINT", config.endpoint);
  str("SALIENT_TEMPLATE_PRESET", config.template_preset);
  str("SALIENT_LANGUAGE", config.language);
  if (const char* v = env("SALIENT_LINKER")) config.linker = parse_linker_mode(v);
  if (const char* v = env("SALIENT_STRATEGY")) config.strategy = rewriter::parse_strategy(v);
  try {
    if (const char* v = env("SALIENT_THRESHOLD")) config.threshold = std::stod(v);
    if (const char* v = env("SALIENT_TOP_N")) config.top_n = std::stoi(v);
    if (const char* v = env("SALIENT_TIMEOUT_MS")) config.timeout_ms = std::stoi(v);
    if (const char* v = env("SALIENT_RETRIES")) config.retries = std::stoi(v);
  } catch (const std::exception&) {
    throw Error(ErrorCode::InvalidConfig, "numeric SALIENT_* variable is not a number");
  }
  boolean("SALIENT_SERIAL_COMMA", config.serial_comma);
  boolean("SALIENT_QUESTION_FILTER", config.question_filter);
  boolean("SALIENT_EXCLUDE_SPECIAL_CASES", config.exclude_special_cases);
}

}  // namespace salient::cli
