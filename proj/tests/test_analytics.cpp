#include "salient/analytics.hpp"

#include <string>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

using namespace salient;
using namespace salient::analytics;
using Catch::Matchers::WithinAbs;

namespace {

SalienceAnnotation annotation(const std::string& conv, int turn, const std::string& entity,
                              std::vector<int> labels) {
  return {conv, turn, entity, entity, std::move(labels)};
}

std::vector<PreferenceAnnotation> preference_block(long original, long inline_count,
                                                   long followup_count, RewriteOption inline_opt,
                                                   RewriteOption followup_opt, int top_n) {
  std::vector<PreferenceAnnotation> records;
  const std::vector<RewriteOption> options{RewriteOption::ORIGINAL, inline_opt, followup_opt};
  const auto add = [&](long n, int choice) {
    for (long i = 0; i < n; ++i) {
      records.push_back({"qa" + std::to_string(records.size()), options, choice, "", top_n});
    }
  };
  add(original, 0);
  add(inline_count, 1);
  add(followup_count, 2);
  return records;
}

}  // namespace

TEST_CASE("build_count_matrix tallies labels per item") {
  const std::vector<SalienceAnnotation> annotations{
      annotation("c", 1, "a", {2, 2, 1, 0, 2}),
      annotation("c", 1, "b", {1, 1, 1, 1, 1}),
  };
  const CountMatrix m = build_count_matrix(annotations);
  CHECK(m.items() == 2);
  CHECK(m.raters_per_item() == 5);
  CHECK(m.at(0, 0) == 1);
  CHECK(m.at(0, 1) == 1);
  CHECK(m.at(0, 2) == 3);
  CHECK(m.at(1, 1) == 5);
}

TEST_CASE("build_count_matrix rejects ragged rater counts") {
  const std::vector<SalienceAnnotation> annotations{
      annotation("c", 1, "a", {2, 2, 1}),
      annotation("c", 1, "b", {1, 1}),
  };
  try {
    fleiss_kappa(build_count_matrix(annotations));
    FAIL("expected UNEQUAL_RATERS");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnequalRaters);
  }
}

TEST_CASE("mean_pairwise_spearman treats label positions as annotator slots") {
  // Turn 1: the two annotators rank three entities in exactly opposite
  // order (rho = -1). Turn 2: identical rankings (rho = 1). Mean = 0.
  const std::vector<SalienceAnnotation> annotations{
      annotation("c", 1, "e1", {0, 2}), annotation("c", 1, "e2", {1, 1}),
      annotation("c", 1, "e3", {2, 0}),
      annotation("c", 2, "e1", {0, 0}), annotation("c", 2, "e2", {1, 1}),
      annotation("c", 2, "e3", {2, 2}),
  };
  CHECK_THAT(mean_pairwise_spearman(annotations), WithinAbs(0.0, 1e-12));
}

TEST_CASE("mean_pairwise_spearman skips constant annotators and sparse turns") {
  const std::vector<SalienceAnnotation> annotations{
      // Annotator 2 is constant; only the (0,1) pair is undefined, so the
      // turn still contributes via... no other pair exists: turn skipped.
      annotation("c", 1, "e1", {0, 1}), annotation("c", 1, "e2", {2, 1}),
      // This turn has a single entity: skipped.
      annotation("c", 2, "e1", {0, 1}),
  };
  CHECK_THROWS_AS(mean_pairwise_spearman(annotations), Error);

  const std::vector<SalienceAnnotation> with_valid{
      annotation("c", 1, "e1", {0, 1, 0}), annotation("c", 1, "e2", {2, 1, 2}),
  };
  // Pairs (0,1) and (1,2) are undefined (annotator 1 constant); (0,2) gives 1.
  CHECK_THAT(mean_pairwise_spearman(with_valid), WithinAbs(1.0, 1e-12));
}

TEST_CASE("dataset_stats on a two-entity turn") {
  const std::vector<SalienceAnnotation> annotations{
      annotation("c", 1, "a", {2, 2}),
      annotation("c", 1, "b", {0, 0}),
  };
  const DatasetStats stats = dataset_stats(annotations);
  CHECK(stats.answers == 1);
  CHECK(stats.entities == 2);
  CHECK(stats.entities_per_answer.mean == 2.0);
  CHECK(stats.entities_per_answer.stddev == 0.0);
  CHECK_THAT(stats.salient_ratio.mean, WithinAbs(0.5, 1e-12));
  CHECK_THAT(stats.mean_entity_score.mean, WithinAbs(1.0, 1e-12));
  CHECK_THAT(stats.mean_entity_score.stddev, WithinAbs(1.0, 1e-12));
  CHECK_THAT(stats.label_share[0], WithinAbs(0.5, 1e-12));
  CHECK_THAT(stats.label_share[1], WithinAbs(0.0, 1e-12));
  CHECK_THAT(stats.label_share[2], WithinAbs(0.5, 1e-12));
  CHECK_FALSE(stats.turn_drift.has_value());
}

TEST_CASE("dataset_stats on a single singleton entity") {
  const std::vector<SalienceAnnotation> annotations{annotation("c", 1, "a", {1})};
  const DatasetStats stats = dataset_stats(annotations);
  CHECK(stats.mean_entity_score.mean == 1.0);
  CHECK(stats.label_share[0] == 0.0);
  CHECK(stats.label_share[1] == 1.0);
  CHECK(stats.label_share[2] == 0.0);
  CHECK_THROWS_AS(dataset_stats(std::vector<SalienceAnnotation>{}), Error);
}

TEST_CASE("dataset_stats reports drift when entities span turns") {
  const std::vector<SalienceAnnotation> annotations{
      annotation("c", 1, "a", {1, 1}),
      annotation("c", 2, "a", {2, 2}),
  };
  const DatasetStats stats = dataset_stats(annotations);
  REQUIRE(stats.turn_drift.has_value());
  CHECK_THAT(stats.turn_drift->mean, WithinAbs(1.0, 1e-12));
}

TEST_CASE("aggregate_preferences reproduces the first published row") {
  const auto records = preference_block(60, 66, 45, RewriteOption::INLINEDEF_WIKI,
                                        RewriteOption::FOLLOWUP_OFFER, 1);
  REQUIRE(records.size() == 171);
  const PreferenceTable table = aggregate_preferences(records);
  REQUIRE(table.by_subtype.size() == 1);
  CHECK(table.by_subtype[0].counts == std::array<long, 3>{60, 66, 45});
  CHECK_THAT(table.by_subtype[0].p, WithinAbs(0.13, 0.005));
  REQUIRE(table.by_top_n.size() == 1);
  CHECK(table.by_top_n[0].label == "Top 1");
  CHECK(table.by_top_n[0].counts == std::array<long, 3>{60, 66, 45});
}

TEST_CASE("aggregate_preferences reproduces the full subtype table") {
  std::vector<PreferenceAnnotation> records;
  const auto append = [&records](std::vector<PreferenceAnnotation> block) {
    records.insert(records.end(), block.begin(), block.end());
  };
  append(preference_block(60, 66, 45, RewriteOption::INLINEDEF_WIKI,
                          RewriteOption::FOLLOWUP_OFFER, 1));
  append(preference_block(56, 53, 41, RewriteOption::INLINEDEF_WIKI,
                          RewriteOption::FOLLOWUP_QUESTION, 2));
  append(preference_block(54, 60, 36, RewriteOption::INLINEDEF_NATURAL,
                          RewriteOption::FOLLOWUP_OFFER, 3));
  append(preference_block(52, 71, 27, RewriteOption::INLINEDEF_NATURAL,
                          RewriteOption::FOLLOWUP_QUESTION, 1));
  const PreferenceTable table = aggregate_preferences(records);
  REQUIRE(table.by_subtype.size() == 4);
  CHECK(table.by_subtype[0].counts == std::array<long, 3>{60, 66, 45});
  CHECK(table.by_subtype[1].counts == std::array<long, 3>{56, 53, 41});
  CHECK(table.by_subtype[2].counts == std::array<long, 3>{54, 60, 36});
  CHECK(table.by_subtype[3].counts == std::array<long, 3>{52, 71, 27});
  CHECK_THAT(table.by_subtype[0].p, WithinAbs(0.13, 0.005));
  CHECK_THAT(table.by_subtype[1].p, WithinAbs(0.28, 0.005));
  CHECK_THAT(table.by_subtype[2].p, WithinAbs(0.04, 0.005));
  CHECK(table.by_subtype[3].p < 0.01);
  CHECK(table.subtype_total.counts == std::array<long, 3>{222, 250, 149});
  CHECK(table.subtype_total.p < 0.01);
}

TEST_CASE("aggregate_preferences reproduces the top-N table") {
  std::vector<PreferenceAnnotation> records;
  const auto append = [&records](std::vector<PreferenceAnnotation> block) {
    records.insert(records.end(), block.begin(), block.end());
  };
  append(preference_block(80, 84, 65, RewriteOption::INLINEDEF_WIKI,
                          RewriteOption::FOLLOWUP_OFFER, 1));
  append(preference_block(87, 83, 42, RewriteOption::INLINEDEF_WIKI,
                          RewriteOption::FOLLOWUP_OFFER, 2));
  append(preference_block(55, 83, 42, RewriteOption::INLINEDEF_WIKI,
                          RewriteOption::FOLLOWUP_OFFER, 3));
  const PreferenceTable table = aggregate_preferences(records);
  REQUIRE(table.by_top_n.size() == 3);
  CHECK(table.by_top_n[0].counts == std::array<long, 3>{80, 84, 65});
  CHECK_THAT(table.by_top_n[0].p, WithinAbs(0.27, 0.005));
  CHECK(table.by_top_n[1].p < 0.01);
  CHECK(table.by_top_n[2].p < 0.01);
  CHECK(table.top_n_total.counts == std::array<long, 3>{222, 250, 149});
  CHECK(table.top_n_total.p < 0.01);
}

TEST_CASE("aggregate_preferences validates the option mix") {
  std::vector<PreferenceAnnotation> records{
      {"qa0",
       {RewriteOption::ORIGINAL, RewriteOption::INLINEDEF_WIKI, RewriteOption::INLINEDEF_NATURAL},
       0,
       "",
       1}};
  CHECK_THROWS_AS(aggregate_preferences(records), Error);
  CHECK(aggregate_preferences(std::vector<PreferenceAnnotation>{}).by_subtype.empty());
}

TEST_CASE("single-record aggregation matches the closed form") {
  const auto records = preference_block(1, 0, 0, RewriteOption::INLINEDEF_WIKI,
                                        RewriteOption::FOLLOWUP_OFFER, 1);
  const PreferenceTable table = aggregate_preferences(records);
  CHECK_THAT(table.subtype_total.chi2, WithinAbs(2.0, 1e-12));
  CHECK_THAT(table.subtype_total.p, WithinAbs(std::exp(-1.0), 1e-12));
}
