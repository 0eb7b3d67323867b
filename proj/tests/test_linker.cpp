#include "salient/linker.hpp"

#include <sstream>
#include <string>
#include <thread>

#include <catch2/catch_amalgamated.hpp>

#include "httplib.h"

using namespace salient;
using namespace salient::linker;

namespace {

SurfaceFormDictionary mythology_dict() {
  SurfaceFormDictionary dict;
  dict.add("sisyphus", "Q102561", 0.9);
  dict.add("ephyra", "Q1327989", 0.6);
  return dict;
}

// Serves one canned body for any POST to /tag.
struct MockService {
  httplib::Server server;
  std::thread thread;
  int port = 0;

  explicit MockService(std::string body, int status = 200) {
    server.Post("/tag", [body = std::move(body), status](const httplib::Request&,
                                                         httplib::Response& res) {
      res.status = status;
      res.set_content(body, "application/json");
    });
    port = server.bind_to_any_port("127.0.0.1");
    thread = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }

  std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port) + "/tag"; }

  ~MockService() {
    server.stop();
    thread.join();
  }
};

}  // namespace

TEST_CASE("link finds dictionary surfaces at their offsets") {
  const std::string answer =
      "Sisyphus, king of Ephyra, was punished to roll an immense boulder up a hill.";
  const auto mentions = link(answer, mythology_dict());
  REQUIRE(mentions.size() == 2);
  CHECK(mentions[0].entity_id == "Q102561");
  CHECK(mentions[0].surface == "Sisyphus");
  CHECK(mentions[0].start == answer.find("Sisyphus"));
  CHECK(mentions[0].end == mentions[0].start + 8);
  CHECK(mentions[1].entity_id == "Q1327989");
  CHECK(mentions[1].surface == "Ephyra");
  CHECK(mentions[1].start == answer.find("Ephyra"));
  for (const auto& m : mentions) {
    CHECK(answer.substr(m.start, m.end - m.start) == m.surface);
  }
}

TEST_CASE("link drops candidates below the threshold") {
  SurfaceFormDictionary dict;
  dict.add("boulder", "Q628792", 0.3);
  CHECK(link("an immense boulder", dict, 0.45).empty());
  CHECK(link("an immense boulder", dict, 0.3).size() == 1);
}

TEST_CASE("link on an empty answer returns nothing") {
  CHECK(link("", mythology_dict()).empty());
}

TEST_CASE("link prefers the longest surface at a position") {
  SurfaceFormDictionary dict;
  dict.add("new york", "Q60", 0.8);
  dict.add("york", "Q42462", 0.9);
  dict.add("new york city", "Q60", 0.7);
  const auto mentions = link("I moved to New York last fall", dict);
  REQUIRE(mentions.size() == 1);
  CHECK(mentions[0].surface == "New York");
  CHECK(mentions[0].entity_id == "Q60");
  CHECK(mentions[0].confidence == 0.8);
}

TEST_CASE("link picks the argmax-commonness candidate per surface") {
  SurfaceFormDictionary dict;
  dict.add("mercury", "Q308", 0.55);   // planet
  dict.add("mercury", "Q925", 0.30);   // element
  const auto mentions = link("Mercury is closest to the sun", dict);
  REQUIRE(mentions.size() == 1);
  CHECK(mentions[0].entity_id == "Q308");
}

TEST_CASE("raising the threshold never adds mentions") {
  const std::string answer =
      "Sisyphus, king of Ephyra, was punished to roll an immense boulder up a hill.";
  const auto low = link(answer, mythology_dict(), 0.5);
  const auto high = link(answer, mythology_dict(), 0.8);
  for (const auto& m : high) {
    CHECK(std::any_of(low.begin(), low.end(), [&](const EntityMention& l) {
      return l.entity_id == m.entity_id && l.start == m.start && l.end == m.end;
    }));
  }
  CHECK(low.size() == 2);
  CHECK(high.size() == 1);
}

TEST_CASE("dictionary TSV loading and validation") {
  std::istringstream tsv(
      "sisyphus\tQ102561\t0.9\n"
      "# comment\n"
      "ephyra\tQ1327989\t0.6\n");
  const SurfaceFormDictionary dict = SurfaceFormDictionary::load_tsv(tsv);
  CHECK(dict.surface_count() == 2);
  CHECK(dict.best("sisyphus")->commonness == 0.9);

  std::istringstream bad("only_two_fields\tQ1\n");
  CHECK_THROWS_AS(SurfaceFormDictionary::load_tsv(bad), Error);

  SurfaceFormDictionary oversum;
  oversum.add("x", "Q1", 0.7);
  CHECK_THROWS_AS(oversum.add("x", "Q2", 0.5), Error);
  CHECK_THROWS_AS(oversum.add("y", "Q3", 1.5), Error);
}

TEST_CASE("link rejects thresholds outside [0,1]") {
  CHECK_THROWS_AS(link("text", mythology_dict(), 1.5), Error);
  CHECK_THROWS_AS(link("text", mythology_dict(), -0.1), Error);
}

TEST_CASE("greedy tiling matches exhaustive left-to-right longest-first search") {
  SurfaceFormDictionary dict;
  dict.add("rock and roll", "Q7749", 0.9);
  dict.add("rock", "Q8063", 0.8);
  dict.add("roll", "Q1234", 0.7);
  dict.add("and roll", "Q99", 0.6);
  const std::string answer = "rock and roll will never die and roll on";
  const auto greedy = link(answer, dict, 0.0);
  REQUIRE(greedy.size() == 2);
  CHECK(greedy[0].surface == "rock and roll");
  CHECK(greedy[1].surface == "and roll");
}

TEST_CASE("filter_question_entities removes question surfaces and ids") {
  SurfaceFormDictionary dict;
  dict.add("igloos", "Q81900", 0.8);
  dict.add("snow", "Q7561", 0.7);
  dict.add("insulator", "Q1325416", 0.6);
  const std::string question = "Why is snow used for igloos?";
  const std::string answer =
      "Snow is used for igloos because the air pockets trapped in it make it an insulator";
  const auto mentions = link(answer, dict);
  REQUIRE(mentions.size() == 3);
  const auto question_mentions = link(question, dict);
  const auto kept = filter_question_entities(mentions, question, question_mentions);
  REQUIRE(kept.size() == 1);
  CHECK(kept[0].entity_id == "Q1325416");  // "Snow" and "igloos" both removed
}

TEST_CASE("filter_question_entities is the identity without overlap") {
  SurfaceFormDictionary dict;
  dict.add("insulator", "Q1325416", 0.6);
  const auto mentions = link("it is an insulator", dict);
  const auto kept = filter_question_entities(mentions, "why build with it?", {});
  REQUIRE(kept.size() == mentions.size());
  CHECK(kept[0].entity_id == mentions[0].entity_id);
}

TEST_CASE("filter_question_entities matches case-folded surfaces") {
  SurfaceFormDictionary dict;
  dict.add("snow", "Q7561", 0.7);
  const auto mentions = link("Snow is cold", dict);
  REQUIRE(mentions.size() == 1);
  CHECK(mentions[0].surface == "Snow");
  const auto kept = filter_question_entities(mentions, "why is snow used?", {});
  CHECK(kept.empty());
}

TEST_CASE("filter flags can narrow the rule to ids or surfaces only") {
  SurfaceFormDictionary dict;
  dict.add("snow", "Q7561", 0.7);
  const auto mentions = link("Snow is cold", dict);
  QuestionFilterOptions surface_only{false, true};
  CHECK(filter_question_entities(mentions, "why is snow used?", {}, surface_only).empty());
  QuestionFilterOptions id_only{true, false};
  CHECK(filter_question_entities(mentions, "why is snow used?", {}, id_only).size() == 1);
  const auto question_mentions = link("why is snow used?", dict);
  CHECK(filter_question_entities(mentions, "why is snow used?", question_mentions, id_only)
            .empty());
}

TEST_CASE("parse_remote_annotations reads WAT-shaped payloads") {
  const std::string answer = "Hannibal crossed the Alps";
  const std::string body = R"({"annotations": [
    {"spot": "Hannibal", "start": 0, "end": 8, "title": "Q1285", "rho": 0.7},
    {"spot": "Alps", "start": 21, "end": 25, "id": "Q1286", "score": 0.5}
  ]})";
  const auto mentions = parse_remote_annotations(body, answer);
  REQUIRE(mentions.size() == 2);
  CHECK(mentions[0].entity_id == "Q1285");
  CHECK(mentions[0].surface == "Hannibal");
  CHECK(mentions[1].confidence == 0.5);
  CHECK_THROWS_AS(parse_remote_annotations("not json", answer), Error);
  CHECK_THROWS_AS(parse_remote_annotations(R"({"annotations": [{"start": 0}]})", answer), Error);
  CHECK_THROWS_AS(
      parse_remote_annotations(
          R"([{"spot": "x", "start": 0, "end": 99, "title": "Q1", "rho": 0.9}])", answer),
      Error);
}

TEST_CASE("link_remote keeps annotations above the default threshold") {
  MockService service(
      R"({"annotations": [{"spot": "Hannibal", "start": 0, "end": 8, "title": "Q1285", "rho": 0.7}]})");
  const auto mentions = link_remote("Hannibal crossed the Alps", {service.endpoint()});
  REQUIRE(mentions.size() == 1);
  CHECK(mentions[0].entity_id == "Q1285");
  CHECK(mentions[0].confidence == 0.7);
}

TEST_CASE("link_remote drops scores below 0.45") {
  MockService service(
      R"({"annotations": [{"spot": "Hannibal", "start": 0, "end": 8, "title": "Q1285", "rho": 0.44}]})");
  CHECK(link_remote("Hannibal crossed the Alps", {service.endpoint()}).empty());
}

TEST_CASE("link_remote resolves overlapping spans toward the longer one") {
  const std::string answer = "the Second Punic War ended";
  // "Second Punic War" [4,20) vs "Punic War" [11,20): longer span wins.
  MockService service(R"({"annotations": [
    {"spot": "Punic War", "start": 11, "end": 20, "title": "Q6271", "rho": 0.9},
    {"spot": "Second Punic War", "start": 4, "end": 20, "title": "Q6271x", "rho": 0.6}
  ]})");
  const auto mentions = link_remote(answer, {service.endpoint()});
  REQUIRE(mentions.size() == 1);
  CHECK(mentions[0].entity_id == "Q6271x");
  CHECK(mentions[0].surface == "Second Punic War");
}

TEST_CASE("link_remote surfaces transport failures as NETWORK") {
  try {
    link_remote("text", {"http://127.0.0.1:1/tag", 200, 0});
    FAIL("expected NETWORK");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Network);
  }
  MockService failing("oops", 503);
  try {
    link_remote("text", {failing.endpoint(), 2000, 0});
    FAIL("expected NETWORK");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Network);
  }
}

TEST_CASE("link_remote reports malformed bodies as PARSE") {
  MockService service("{\"nope\": true}");
  try {
    link_remote("text", {service.endpoint()});
    FAIL("expected PARSE");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Parse);
  }
}
