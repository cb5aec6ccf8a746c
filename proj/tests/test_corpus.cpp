#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <set>

#include "planwrite/dataset_io.hpp"
#include "planwrite/extract.hpp"
#include "planwrite/gamegen.hpp"
#include "planwrite/rotowire.hpp"
#include "support.hpp"

using namespace planwrite;

TEST_CASE("generate_game is deterministic per seed") {
  CHECK(generate_game(42) == generate_game(42));
  CHECK_FALSE(generate_game(42) == generate_game(43));
}

TEST_CASE("winner is mentioned before the loser in the first sentence") {
  for (uint64_t seed = 0; seed < 20; ++seed) {
    auto gg = generate_game_with_log(seed);
    const auto& ex = gg.example;
    // first two plan steps are the winner's city and name introduction
    const Record& first = ex.table.rec(ex.plan.step(0));
    CHECK(first.type == kTeamCity);
    // find that team's TEAM-PTS and the other team's
    int win_pts = -1, other_pts = -1;
    for (const Record& r : ex.table.records()) {
      if (r.type != "TEAM-PTS") continue;
      if (r.entity == first.entity)
        win_pts = std::stoi(r.value);
      else
        other_pts = std::stoi(r.value);
    }
    CHECK(win_pts > other_pts);
  }
}

TEST_CASE("every entity-number pair in a generated summary matches a table record") {
  for (uint64_t seed = 100; seed < 130; ++seed) {
    auto ex = generate_game(seed);
    MentionIndex index(ex.table);
    for (int s = 0; s < ex.summary.sentence_count(); ++s) {
      auto [begin, end] = ex.summary.sentence_range(s);
      auto mentions = index.find(ex.summary.tokens, begin, end);
      for (int p = begin; p < end; ++p) {
        auto norm = normalize_number_token(ex.summary.tokens[static_cast<size_t>(p)]);
        if (!norm.has_value()) continue;
        bool matched = false;
        for (const auto& m : mentions)
          if (!ex.table.find(m.entity, *norm).empty()) matched = true;
        CHECK_MESSAGE(matched, "dangling number token ", *norm, " (seed ", seed, ")");
      }
    }
  }
}

TEST_CASE("extraction reproduces the documented name and stat ordering") {
  // "Isaiah Thomas ... 23 points and five assists" style fragment against a
  // matching table yields FIRST_NAME, SECOND_NAME, PTS, AST in that order.
  auto table = pwtest::isaiah_table();
  Summary s = pwtest::make_summary(
      {"Isaiah", "Thomas", "led", "the", "team", ",", "totaling", "23", "points", "and",
       "five", "assists", "."},
      {0});
  ContentPlan plan = extract_content_plan(table, s);
  REQUIRE(plan.length() == 4);
  CHECK(table.rec(plan.step(0)).type == kFirstName);
  CHECK(table.rec(plan.step(1)).type == kSecondName);
  CHECK(table.rec(plan.step(2)).type == "PTS");
  CHECK(table.rec(plan.step(3)).type == "AST");
}

TEST_CASE("number words normalize for matching but plain words do not") {
  CHECK(normalize_number_token("five").value() == "5");
  CHECK(normalize_number_token("twenty").value() == "20");
  CHECK(normalize_number_token("23").value() == "23");
  CHECK_FALSE(normalize_number_token("points").has_value());
  CHECK_FALSE(normalize_number_token("fiveish").has_value());
}

TEST_CASE("a record verbalized twice is emitted twice, in appearance order") {
  auto table = pwtest::isaiah_table();
  Summary s = pwtest::make_summary(
      {"Isaiah", "Thomas", "scored", "23", "points", ".", "Thomas", "finished", "with", "23",
       "points", "."},
      {0, 6});
  ContentPlan plan = extract_content_plan(table, s);
  REQUIRE(plan.length() == 4);  // FIRST, SECOND, PTS, PTS again
  CHECK(table.rec(plan.step(2)).type == "PTS");
  CHECK(table.rec(plan.step(3)).type == "PTS");
  CHECK(plan.step(2) == plan.step(3));
}

TEST_CASE("same entity-value pairs with different types disambiguate by cue") {
  RecordTable table({
      {kFirstName, "Cole_Reed", "Cole", Side::Home},
      {kSecondName, "Cole_Reed", "Reed", Side::Home},
      {"PTS", "Cole_Reed", "9", Side::Home},
      {"REB", "Cole_Reed", "9", Side::Home},
  });
  Summary s = pwtest::make_summary(
      {"Cole", "Reed", "had", "9", "points", "and", "9", "rebounds", "."}, {0});
  ContentPlan plan = extract_content_plan(table, s);
  REQUIRE(plan.length() == 4);
  CHECK(table.rec(plan.step(2)).type == "PTS");
  CHECK(table.rec(plan.step(3)).type == "REB");
}

TEST_CASE("summary with no table entities yields an empty plan") {
  auto table = pwtest::isaiah_table();
  Summary s = pwtest::make_summary({"It", "was", "a", "close", "game", "."}, {0});
  CHECK(extract_content_plan(table, s).empty());
}

TEST_CASE("extraction agrees with the generator log on at least 99% of steps") {
  long agree = 0, total = 0;
  for (uint64_t seed = 0; seed < 40; ++seed) {
    auto gg = generate_game_with_log(seed);
    const auto& plan = gg.example.plan;
    const auto& log = gg.generator_log;
    const long n = std::max<long>(plan.length(), static_cast<long>(log.size()));
    total += n;
    for (long i = 0; i < n; ++i) {
      if (i < plan.length() && i < static_cast<long>(log.size()) &&
          plan.step(static_cast<int>(i)) == log[static_cast<size_t>(i)].record)
        ++agree;
    }
  }
  CHECK(static_cast<double>(agree) / static_cast<double>(total) >= 0.99);
}

TEST_CASE("extraction is idempotent and ordered by appearance") {
  for (uint64_t seed = 7; seed < 27; ++seed) {
    auto ex = generate_game(seed);
    auto once = extract_content_plan(ex.table, ex.summary);
    auto twice = extract_content_plan(ex.table, ex.summary);
    CHECK(once == twice);
    auto emissions = extract_emissions(ex.table, ex.summary);
    for (size_t i = 1; i < emissions.size(); ++i)
      CHECK(emissions[i - 1].pos <= emissions[i].pos);
  }
}

TEST_CASE("copy labels point at matching plan steps") {
  auto table = pwtest::isaiah_table();
  Summary s = pwtest::make_summary(
      {"Isaiah", "Thomas", "scored", "23", "points", "and", "5", "assists", "."}, {0});
  ContentPlan plan = extract_content_plan(table, s);
  Summary labeled = mark_copy_targets(s, plan, table);
  REQUIRE(labeled.copy_labels.size() == s.tokens.size());

  // "23" is copied from the PTS step
  CHECK(labeled.copy_labels[3].copied());
  CHECK(table.rec(plan.step(labeled.copy_labels[3].step)).type == "PTS");
  // function words are not copied
  CHECK_FALSE(labeled.copy_labels[2].copied());
  CHECK_FALSE(labeled.copy_labels[8].copied());

  // every label's source value equals the token, and the earliest
  // qualifying step wins
  for (size_t t = 0; t < labeled.tokens.size(); ++t) {
    const CopyLabel& l = labeled.copy_labels[t];
    if (!l.copied()) continue;
    CHECK(table.rec(plan.step(l.step)).value == labeled.tokens[t]);
    for (int k = 0; k < l.step; ++k)
      CHECK_FALSE(table.rec(plan.step(k)).value == labeled.tokens[t]);
  }
}

TEST_CASE("generated examples carry consistent copy labels") {
  for (uint64_t seed = 50; seed < 70; ++seed) {
    auto ex = generate_game(seed);
    REQUIRE(ex.summary.copy_labels.size() == ex.summary.tokens.size());
    for (size_t t = 0; t < ex.summary.tokens.size(); ++t) {
      const CopyLabel& l = ex.summary.copy_labels[t];
      if (l.copied())
        CHECK(ex.table.rec(ex.plan.step(l.step)).value == ex.summary.tokens[t]);
    }
  }
}

TEST_CASE("dataset save/load round-trips losslessly") {
  auto corpus = generate_corpus(12, 3);
  const std::string path = "/tmp/pw_test_roundtrip.jsonl";
  save_dataset(path, corpus);
  auto loaded = load_dataset(path);
  REQUIRE(loaded.size() == corpus.size());
  for (size_t i = 0; i < corpus.size(); ++i) CHECK(loaded[i] == corpus[i]);
  std::remove(path.c_str());
}

TEST_CASE("empty file loads as an empty corpus") {
  const std::string path = "/tmp/pw_test_empty.jsonl";
  std::ofstream(path).close();
  CHECK(load_dataset(path).empty());
  std::remove(path.c_str());
}

TEST_CASE("corrupt line reports its line number") {
  auto corpus = generate_corpus(3, 5);
  const std::string path = "/tmp/pw_test_corrupt.jsonl";
  {
    std::ofstream out(path);
    out << example_to_json(corpus[0]).dump() << "\n";
    out << example_to_json(corpus[1]).dump() << "\n";
    out << "{\"table\": [[\"PTS\",\"x\"]]}\n";
  }
  try {
    load_dataset(path);
    FAIL("expected a parse error");
  } catch (const std::exception& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
  std::remove(path.c_str());
}

TEST_CASE("rotowire-layout loader maps stats onto records") {
  const std::string path = "/tmp/pw_test_rotowire.json";
  {
    std::ofstream out(path);
    out << R"([{
      "home_name": "Hawks", "home_city": "Riverton",
      "vis_name": "Royals", "vis_city": "Oakdale",
      "home_line": {"TEAM-PTS": "104", "TEAM-WINS": "22", "TEAM-LOSSES": "10"},
      "vis_line": {"TEAM-PTS": "95", "TEAM-FG_PCT": "44"},
      "box_score": {
        "FIRST_NAME": {"0": "Jalen", "1": "Devin"},
        "SECOND_NAME": {"0": "Carter", "1": "Hayes"},
        "PTS": {"0": "28", "1": "N/A"},
        "REB": {"0": "7", "1": "3"},
        "TEAM_CITY": {"0": "Riverton", "1": "Oakdale"}
      },
      "summary": ["Jalen", "Carter", "scored", "28", "points", ".", "A", "win", "."]
    }])";
  }
  auto corpus = load_rotowire(path);
  REQUIRE(corpus.size() == 1);
  const auto& ex = corpus[0];
  CHECK(ex.table.find_typed("Hawks", "104", "TEAM-PTS") >= 0);
  CHECK(ex.table.find_typed("Hawks", "22", "TEAM-WIN") >= 0);
  CHECK(ex.table.find_typed("Jalen_Carter", "28", "PTS") >= 0);
  CHECK(ex.table.find_typed("Jalen_Carter", "7", "REB") >= 0);
  // N/A stats are dropped
  CHECK(ex.table.find("Devin_Hayes", "N/A").empty());
  // sides follow TEAM_CITY
  int pos = ex.table.find_typed("Devin_Hayes", "3", "REB");
  REQUIRE(pos >= 0);
  CHECK(ex.table.rec(pos).side == Side::Visiting);
  CHECK(ex.summary.sentence_count() == 2);

  auto plan = extract_content_plan(ex.table, ex.summary);
  REQUIRE(plan.length() == 3);
  CHECK(ex.table.rec(plan.step(2)).type == "PTS");
  std::remove(path.c_str());
}
