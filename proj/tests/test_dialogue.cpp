#include "salient/dialogue.hpp"

#include <fstream>
#include <string>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "json.hpp"

using namespace salient;
using namespace salient::dialogue;
using nlohmann::json;

namespace {

std::string fixture(const std::string& name) { return std::string(FIXTURE_DIR) + "/" + name; }

rewriter::RewriteResult followup_over(std::vector<rewriter::TargetRef> targets,
                                      rewriter::Strategy strategy) {
  rewriter::RewriteResult result;
  result.original = "Some answer.";
  result.rewritten = "Some answer. Prompt?";
  result.strategy = strategy;
  result.targets = std::move(targets);
  return result;
}

// Scripted-session harness: first line declares the offer, each further line
// is a user turn with its expected outcome.
void run_session_script(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::string line;
  REQUIRE(std::getline(in, line));
  const json header = json::parse(line);
  std::vector<rewriter::TargetRef> offered;
  for (const json& o : header.at("offer")) {
    offered.push_back({o.at("entity_id").get<std::string>(), o.at("label").get<std::string>(),
                       o.at("description").get<std::string>()});
  }
  FollowUpState state =
      open_followup(followup_over(offered, rewriter::Strategy::FollowupOffer), "s", 1);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json turn = json::parse(line);
    const Outcome outcome = interpret_user_turn(turn.at("user").get<std::string>(), state);
    if (turn.at("expect") == "DEFINE") {
      CHECK(outcome.kind == OutcomeKind::Define);
      CHECK(outcome.entity_id == turn.at("entity_id").get<std::string>());
      CHECK(outcome.response == turn.at("response").get<std::string>());
    } else {
      CHECK(outcome.kind == OutcomeKind::PassThrough);
      CHECK(outcome.entity_id.empty());
    }
    CHECK(state.resolved);
  }
}

}  // namespace

TEST_CASE("open_followup mirrors the rendered entity order") {
  const std::vector<rewriter::TargetRef> targets{{"Q15", "Africa", "continent on the Earth"},
                                                 {"Q1285", "Hannibal", "Carthaginian general"}};
  const FollowUpState state =
      open_followup(followup_over(targets, rewriter::Strategy::FollowupOffer), "conv", 3);
  REQUIRE(state.offered.size() == 2);
  CHECK(state.offered[0].entity_id == "Q15");
  CHECK(state.offered[1].entity_id == "Q1285");
  CHECK(state.turn_index == 3);
  CHECK_FALSE(state.resolved);
}

TEST_CASE("open_followup rejects non-followup rewrites") {
  const std::vector<rewriter::TargetRef> targets{{"Q15", "Africa", "continent"}};
  try {
    open_followup(followup_over(targets, rewriter::Strategy::InlineWiki));
    FAIL("expected WRONG_STRATEGY");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::WrongStrategy);
  }
}

TEST_CASE("three offered entities stay in rendered order") {
  const std::vector<rewriter::TargetRef> targets{
      {"Q177332", "Activation energy", "d1"}, {"Q7868", "Cell (biology)", "d2"},
      {"Q11367", "Lipid", "d3"}};
  const FollowUpState state =
      open_followup(followup_over(targets, rewriter::Strategy::FollowupQuestion));
  REQUIRE(state.offered.size() == 3);
  CHECK(state.offered[2].label == "Lipid");
}

TEST_CASE("bare affirmative accepts a single offer") {
  std::vector<rewriter::TargetRef> targets{
      {"Q102561", "Sisyphus", "king of Ephyra in Greek mythology"}};
  for (const std::string yes : {"yes", "Yes!", "sure", "ok", "yes please", "  YES.  "}) {
    FollowUpState state =
        open_followup(followup_over(targets, rewriter::Strategy::FollowupQuestion));
    const Outcome outcome = interpret_user_turn(yes, state);
    CHECK(outcome.kind == OutcomeKind::Define);
    CHECK(outcome.entity_id == "Q102561");
    CHECK(outcome.response == "Sisyphus: king of Ephyra in Greek mythology.");
  }
}

TEST_CASE("bare affirmative is ambiguous with several offers") {
  const std::vector<rewriter::TargetRef> targets{{"Q15", "Africa", "continent"},
                                                 {"Q1285", "Hannibal", "general"}};
  FollowUpState state = open_followup(followup_over(targets, rewriter::Strategy::FollowupOffer));
  const Outcome outcome = interpret_user_turn("yes", state);
  CHECK(outcome.kind == OutcomeKind::PassThrough);
}

TEST_CASE("naming an offered entity wins over the affirmative word") {
  const std::vector<rewriter::TargetRef> targets{{"Q15", "Africa", "continent on the Earth"},
                                                 {"Q1285", "Hannibal", "Carthaginian general"}};
  FollowUpState state = open_followup(followup_over(targets, rewriter::Strategy::FollowupOffer));
  const Outcome outcome = interpret_user_turn("yes, tell me about Hannibal", state);
  CHECK(outcome.kind == OutcomeKind::Define);
  CHECK(outcome.entity_id == "Q1285");
}

TEST_CASE("a resolved state refuses a second interpretation") {
  const std::vector<rewriter::TargetRef> targets{{"Q15", "Africa", "continent"}};
  FollowUpState state = open_followup(followup_over(targets, rewriter::Strategy::FollowupOffer));
  interpret_user_turn("something unrelated", state);
  try {
    interpret_user_turn("Africa", state);
    FAIL("expected ALREADY_RESOLVED");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::AlreadyResolved);
  }
}

TEST_CASE("DEFINE quotes the stored definition verbatim") {
  const std::vector<rewriter::TargetRef> targets{
      {"Q7868", "Cell (biology)", "basic structural and functional unit of all organisms"}};
  FollowUpState state =
      open_followup(followup_over(targets, rewriter::Strategy::FollowupQuestion));
  const Outcome outcome = interpret_user_turn("what is cell (biology)?", state);
  CHECK(outcome.kind == OutcomeKind::Define);
  CHECK(outcome.response ==
        "Cell (biology): basic structural and functional unit of all organisms.");
}

TEST_CASE("scripted sessions: accept by name") { run_session_script(fixture("session_accept_by_name.jsonl")); }

TEST_CASE("scripted sessions: bare affirmative with single offer") {
  run_session_script(fixture("session_bare_affirmative.jsonl"));
}

TEST_CASE("scripted sessions: ignore the offer") { run_session_script(fixture("session_ignore.jsonl")); }

TEST_CASE("scripted sessions: ambiguous multi-match defines the first offered") {
  run_session_script(fixture("session_ambiguous_multi.jsonl"));
}
