#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "salient/commands.hpp"
#include "salient/config.hpp"
#include "salient/errors.hpp"

// salient: entity-based answer rewriting for conversational search.
// Subcommands: ingest, link, rewrite, analyze, chat, kb fetch.
//
// Configuration precedence: command-line flag > SALIENT_* environment
// variable > --config JSON file > built-in default.

namespace {

using salient::cli::RunConfig;

struct CliValues {
  std::optional<std::string> corpus, annotations, preferences, mentions, kb_snapshot, cache, dict,
      answers, out, endpoint, template_preset, linker, strategy, language, external;
  std::optional<double> threshold;
  std::optional<int> top_n, timeout_ms, retries;
  std::optional<bool> serial_comma, question_filter, exclude_special_cases;
  std::string config_file;
  std::string what;      // analyze
  std::string counts;    // analyze chisq
  std::vector<std::string> ids;  // kb fetch
};

void add_common_options(CLI::App* cmd, CliValues& values) {
  cmd->add_option("--config", values.config_file, "JSON config file");
  cmd->add_option("--corpus", values.corpus, "conversations.jsonl");
  cmd->add_option("--annotations", values.annotations, "salience.jsonl");
  cmd->add_option("--preferences", values.preferences, "preferences.jsonl");
  cmd->add_option("--mentions", values.mentions, "precomputed mentions.jsonl");
  cmd->add_option("--kb-snapshot", values.kb_snapshot, "definitions snapshot TSV");
  cmd->add_option("--cache", values.cache, "definitions cache TSV (read + append)");
  cmd->add_option("--dict", values.dict, "surface form dictionary TSV");
  cmd->add_option("--answers", values.answers, "scripted answer store for chat");
  cmd->add_option("--out", values.out, "output file (default stdout)");
  cmd->add_option("--endpoint", values.endpoint, "remote service URL");
  cmd->add_option("--threshold", values.threshold, "linker confidence threshold")
      ->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--linker", values.linker, "local|remote")
      ->check(CLI::IsMember({"local", "remote"}));
  cmd->add_option("--strategy", values.strategy,
                  "inline-wiki|inline-natural|followup-question|followup-offer|all");
  cmd->add_option("--top-n", values.top_n, "rewrite the top N salient entities");
  cmd->add_option("--template-preset", values.template_preset, "appendix|main-text")
      ->check(CLI::IsMember({"appendix", "main-text"}));
  cmd->add_flag("--serial-comma,!--no-serial-comma", values.serial_comma,
                "serial comma in 3-entity lists");
  cmd->add_flag("--question-filter,!--no-question-filter", values.question_filter,
                "drop entities already present in the question");
  cmd->add_flag("--exclude-special-cases,!--no-exclude-special-cases",
                values.exclude_special_cases,
                "skip entities classified as needing no definition");
  cmd->add_option("--language", values.language, "KB language code");
  cmd->add_option("--timeout-ms", values.timeout_ms, "HTTP timeout");
  cmd->add_option("--retries", values.retries, "HTTP retry count");
}

RunConfig resolve_config(const CliValues& values) {
  RunConfig config;
  std::string config_file = values.config_file;
  if (config_file.empty()) {
    if (const char* env = std::getenv("SALIENT_CONFIG")) config_file = env;
  }
  if (!config_file.empty()) salient::cli::apply_config_file(config, config_file);
  salient::cli::apply_env(config);
  const auto set_str = [](const std::optional<std::string>& v, std::string& out) {
    if (v) out = *v;
  };
  set_str(values.corpus, config.corpus_path);
  set_str(values.annotations, config.annotations_path);
  set_str(values.preferences, config.preferences_path);
  set_str(values.mentions, config.mentions_path);
  set_str(values.kb_snapshot, config.kb_snapshot_path);
  set_str(values.cache, config.cache_path);
  set_str(values.dict, config.dict_path);
  set_str(values.answers, config.answers_path);
  set_str(values.out, config.out_path);
  set_str(values.endpoint, config.endpoint);
  set_str(values.template_preset, config.template_preset);
  set_str(values.language, config.language);
  if (values.linker) config.linker = salient::cli::parse_linker_mode(*values.linker);
  if (values.strategy && *values.strategy != "all") {
    config.strategy = salient::rewriter::parse_strategy(*values.strategy);
  }
  if (values.threshold) config.threshold = *values.threshold;
  if (values.top_n) config.top_n = *values.top_n;
  if (values.timeout_ms) config.timeout_ms = *values.timeout_ms;
  if (values.retries) config.retries = *values.retries;
  if (values.serial_comma) config.serial_comma = *values.serial_comma;
  if (values.question_filter) config.question_filter = *values.question_filter;
  if (values.exclude_special_cases) config.exclude_special_cases = *values.exclude_special_cases;
  return config;
}

std::vector<salient::rewriter::Strategy> requested_strategies(const CliValues& values,
                                                              const RunConfig& config) {
  using salient::rewriter::Strategy;
  if (values.strategy && *values.strategy == "all") {
    return {Strategy::InlineWiki, Strategy::InlineNatural, Strategy::FollowupQuestion,
            Strategy::FollowupOffer};
  }
  return {config.strategy};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"entity-based answer rewriting for conversational search", "salient"};
  app.require_subcommand(1);
  CliValues values;

  CLI::App* ingest = app.add_subcommand("ingest", "validate and canonicalize a corpus");
  add_common_options(ingest, values);
  CLI::App* link = app.add_subcommand("link", "detect entity mentions per turn");
  add_common_options(link, values);
  CLI::App* rewrite = app.add_subcommand("rewrite", "rewrite answers with a chosen strategy");
  add_common_options(rewrite, values);
  CLI::App* analyze = app.add_subcommand("analyze", "dataset and preference statistics");
  add_common_options(analyze, values);
  analyze->add_option("what", values.what, "kappa|rho|chisq|stats|preferences")->required();
  analyze->add_option("--counts", values.counts, "comma-separated counts for chisq");
  analyze->add_option("--external", values.external, "external predictor scores JSONL");
  CLI::App* chat = app.add_subcommand("chat", "interactive rewriting demo");
  add_common_options(chat, values);
  CLI::App* kb = app.add_subcommand("kb", "knowledge base utilities");
  kb->require_subcommand(1);
  CLI::App* kb_fetch = kb->add_subcommand("fetch", "fetch definitions into the cache");
  add_common_options(kb_fetch, values);
  kb_fetch->add_option("ids", values.ids, "entity ids to fetch")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    const RunConfig config = resolve_config(values);
    if (ingest->parsed()) return salient::cli::cmd_ingest(config, std::cout, std::cerr);
    if (link->parsed()) return salient::cli::cmd_link(config, std::cout, std::cerr);
    if (rewrite->parsed()) {
      return salient::cli::cmd_rewrite(config, std::cout, std::cerr,
                                       requested_strategies(values, config));
    }
    if (analyze->parsed()) {
      return salient::cli::cmd_analyze(config, values.what, values.counts,
                                       values.external.value_or(""), std::cout, std::cerr);
    }
    if (chat->parsed()) return salient::cli::cmd_chat(config, std::cin, std::cout, std::cerr);
    if (kb->parsed() && kb_fetch->parsed()) {
      return salient::cli::cmd_kb_fetch(config, values.ids, std::cout, std::cerr);
    }
  } catch (const salient::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
