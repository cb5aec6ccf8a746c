#include <doctest.h>

#include <cmath>
#include <map>

#include "planwrite/gamegen.hpp"
#include "planwrite/metrics.hpp"
#include "planwrite/template_baseline.hpp"
#include "support.hpp"

using namespace planwrite;

namespace {

RelationTuple rel(const std::string& e, const std::string& v, const std::string& t,
                  Side s = Side::Home, int pos = 0) {
  return {e, v, t, s, pos};
}

// Full-matrix memoized Damerau-Levenshtein (adjacent transpositions), kept
// deliberately separate from the rolling-array implementation under test.
int dld_oracle(const std::vector<int>& a, const std::vector<int>& b) {
  const int la = static_cast<int>(a.size()), lb = static_cast<int>(b.size());
  std::vector<std::vector<int>> d(static_cast<size_t>(la) + 1,
                                  std::vector<int>(static_cast<size_t>(lb) + 1, 0));
  for (int i = 0; i <= la; ++i) d[static_cast<size_t>(i)][0] = i;
  for (int j = 0; j <= lb; ++j) d[0][static_cast<size_t>(j)] = j;
  for (int i = 1; i <= la; ++i) {
    for (int j = 1; j <= lb; ++j) {
      const int cost = a[static_cast<size_t>(i) - 1] == b[static_cast<size_t>(j) - 1] ? 0 : 1;
      int best = std::min({d[static_cast<size_t>(i) - 1][static_cast<size_t>(j)] + 1,
                           d[static_cast<size_t>(i)][static_cast<size_t>(j) - 1] + 1,
                           d[static_cast<size_t>(i) - 1][static_cast<size_t>(j) - 1] + cost});
      if (i > 1 && j > 1 && a[static_cast<size_t>(i) - 1] == b[static_cast<size_t>(j) - 2] &&
          a[static_cast<size_t>(i) - 2] == b[static_cast<size_t>(j) - 1])
        best = std::min(best, d[static_cast<size_t>(i) - 2][static_cast<size_t>(j) - 2] + 1);
      d[static_cast<size_t>(i)][static_cast<size_t>(j)] = best;
    }
  }
  return d[static_cast<size_t>(la)][static_cast<size_t>(lb)];
}

// Straightforward per-pair BLEU re-implementation used as a reference.
double bleu_oracle(const std::vector<std::vector<std::string>>& cands,
                   const std::vector<std::vector<std::string>>& refs) {
  double logsum = 0;
  long clen = 0, rlen = 0;
  for (int n = 1; n <= 4; ++n) {
    double match = 0, total = 0;
    for (size_t i = 0; i < cands.size(); ++i) {
      std::map<std::string, int> cgrams, rgrams;
      auto key = [](const std::vector<std::string>& t, size_t j, int n2) {
        std::string k;
        for (int x = 0; x < n2; ++x) k += t[j + static_cast<size_t>(x)] + "\x01";
        return k;
      };
      for (size_t j = 0; j + static_cast<size_t>(n) <= cands[i].size(); ++j)
        ++cgrams[key(cands[i], j, n)];
      for (size_t j = 0; j + static_cast<size_t>(n) <= refs[i].size(); ++j)
        ++rgrams[key(refs[i], j, n)];
      for (const auto& [k, c] : cgrams) {
        total += c;
        auto it = rgrams.find(k);
        if (it != rgrams.end()) match += std::min(c, it->second);
      }
    }
    if (match == 0 || total == 0) return 0;
    logsum += std::log(match / total);
  }
  for (size_t i = 0; i < cands.size(); ++i) {
    clen += static_cast<long>(cands[i].size());
    rlen += static_cast<long>(refs[i].size());
  }
  const double bp = clen < rlen ? std::exp(1.0 - static_cast<double>(rlen) / clen) : 1.0;
  return bp * std::exp(logsum / 4);
}

std::vector<RelationTuple> as_rels(const std::vector<int>& ids) {
  std::vector<RelationTuple> out;
  for (size_t i = 0; i < ids.size(); ++i)
    out.push_back(rel("e" + std::to_string(ids[i]), "v", "T", Side::Home,
                      static_cast<int>(i)));
  return out;
}

}  // namespace

TEST_CASE("relation extraction on gold summaries equals the gold plan records") {
  for (uint64_t seed = 0; seed < 15; ++seed) {
    auto ex = generate_game(seed);
    auto rels = extract_relations(ex.table, ex.summary);
    REQUIRE(static_cast<int>(rels.size()) == ex.plan.length());
    for (int k = 0; k < ex.plan.length(); ++k) {
      const Record& r = ex.table.rec(ex.plan.step(k));
      CHECK(rels[static_cast<size_t>(k)].entity == r.entity);
      CHECK(rels[static_cast<size_t>(k)].value == r.value);
      CHECK(rels[static_cast<size_t>(k)].type == r.type);
    }
  }
}

TEST_CASE("fabricated stats are not type-matchable and are excluded") {
  auto ex = generate_game(3);
  Summary fake = pwtest::make_summary({"Jalen", "scored", "99", "points", "."}, {0});
  // no entity in this table has value 99 (player points cap below it)
  auto rels = extract_relations(ex.table, fake);
  for (const auto& r : rels) CHECK(r.value != "99");

  Summary empty;
  CHECK(extract_relations(ex.table, empty).empty());
}

TEST_CASE("relation generation counts supported unique tuples") {
  RecordTable table({{"PTS", "A_B", "7", Side::Home}, {"REB", "A_B", "3", Side::Home}});
  std::vector<RelationTuple> extracted = {rel("A_B", "7", "PTS"), rel("A_B", "3", "REB"),
                                          rel("A_B", "9", "AST")};
  auto rg = relation_generation(extracted, table);
  CHECK(rg.count == 2);
  CHECK(rg.precision == doctest::Approx(66.6667).epsilon(1e-3));
  CHECK_FALSE(rg.flagged);

  auto subset = relation_generation({rel("A_B", "7", "PTS")}, table);
  CHECK(subset.precision == 100.0);

  auto none = relation_generation({}, table);
  CHECK(none.count == 0);
  CHECK(none.precision == 100.0);
  CHECK(none.flagged);

  // duplicates collapse before counting
  auto dup = relation_generation({rel("A_B", "7", "PTS"), rel("A_B", "7", "PTS")}, table);
  CHECK(dup.count == 1);
  CHECK(dup.precision == 100.0);
}

TEST_CASE("content selection precision and recall over unique tuples") {
  auto a = rel("x", "1", "T"), b = rel("y", "2", "T"), c = rel("z", "3", "T"),
       d = rel("w", "4", "T");
  auto pr = content_selection({a, b, c}, {b, c, d});
  CHECK(pr.precision == doctest::Approx(66.6667).epsilon(1e-3));
  CHECK(pr.recall == doctest::Approx(66.6667).epsilon(1e-3));

  auto same = content_selection({a, b}, {b, a});
  CHECK(same.precision == 100.0);
  CHECK(same.recall == 100.0);

  auto empty_sys = content_selection({}, {a});
  CHECK(empty_sys.precision_flagged);
  CHECK(empty_sys.recall == 0.0);

  auto empty_gold = content_selection({a}, {});
  CHECK(empty_gold.recall_flagged);
  CHECK(empty_gold.recall == 100.0);
}

TEST_CASE("content ordering spot values") {
  auto s123 = as_rels({1, 2, 3});
  CHECK(content_ordering(s123, s123) == 100.0);
  CHECK(content_ordering(as_rels({1, 2, 3}), as_rels({1, 3, 2})) ==
        doctest::Approx(100.0 * (1.0 - 1.0 / 3)));
  CHECK(content_ordering(as_rels({1, 2, 3}), as_rels({4, 5, 6})) == 0.0);
  CHECK(content_ordering({}, {}) == 100.0);
  CHECK(content_ordering(as_rels({1}), {}) == 0.0);
}

TEST_CASE("rolling DLD equals the exhaustive DP for every pair up to length 6") {
  // all sequences over a 3-symbol alphabet, lengths 0..6
  std::vector<std::vector<int>> all;
  all.push_back({});
  size_t begin = 0;
  for (int len = 1; len <= 6; ++len) {
    size_t end = all.size();
    for (size_t i = begin; i < end; ++i)
      for (int sym = 0; sym < 3; ++sym) {
        auto next = all[i];
        next.push_back(sym);
        all.push_back(std::move(next));
      }
    begin = end;
  }
  long checked = 0;
  for (const auto& a : all)
    for (const auto& b : all) {
      if (dld_distance(a, b) != dld_oracle(a, b)) {
        CAPTURE(a);
        CAPTURE(b);
        REQUIRE(dld_distance(a, b) == dld_oracle(a, b));
      }
      ++checked;
    }
  CHECK(checked == static_cast<long>(all.size()) * static_cast<long>(all.size()));
}

TEST_CASE("bleu hand examples") {
  std::vector<std::string> ref = {"a", "b", "c", "d"};
  CHECK(corpus_bleu({ref}, {ref}) == doctest::Approx(1.0));
  CHECK(corpus_bleu({{"a", "a", "a", "a"}}, {ref}) == 0.0);
  CHECK_THROWS_AS(corpus_bleu({}, {}), std::runtime_error);

  // brevity penalty engages for short candidates
  double short_bleu = corpus_bleu({{"a", "b", "c", "d"}}, {{"a", "b", "c", "d", "e", "f"}});
  double expect = std::exp(1.0 - 6.0 / 4.0) *
                  std::exp((std::log(1.0) + std::log(1.0) + std::log(1.0)) / 4 +
                           std::log(1.0) / 4);
  CHECK(short_bleu == doctest::Approx(expect));
}

TEST_CASE("bleu matches an independent implementation on synthetic pairs") {
  Rng rng(91);
  std::vector<std::vector<std::string>> cands, refs;
  const std::vector<std::string> pool = {"the", "team", "won", "points", "a", "big", "game",
                                         "night", "crowd", "scored"};
  for (int i = 0; i < 10; ++i) {
    std::vector<std::string> ref, cand;
    const int len = rng.uniform_int(6, 14);
    for (int j = 0; j < len; ++j) ref.push_back(pool[static_cast<size_t>(
        rng.uniform_int(0, static_cast<int>(pool.size()) - 1))]);
    cand = ref;
    // perturb the candidate a little
    for (auto& w : cand)
      if (rng.next_double() < 0.25)
        w = pool[static_cast<size_t>(rng.uniform_int(0, static_cast<int>(pool.size()) - 1))];
    if (rng.next_double() < 0.3) cand.pop_back();
    cands.push_back(std::move(cand));
    refs.push_back(std::move(ref));
  }
  CHECK(corpus_bleu(cands, refs) == doctest::Approx(bleu_oracle(cands, refs)).epsilon(1e-4));
}

TEST_CASE("duplicate ratio") {
  auto a = rel("x", "1", "T"), b = rel("y", "2", "T");
  CHECK(duplicate_ratio({a, b, a}).nondup_pct == doctest::Approx(66.6667).epsilon(1e-3));
  CHECK(duplicate_ratio({a, b}).nondup_pct == 100.0);
  CHECK(duplicate_ratio({}).flagged);
}

TEST_CASE("template baseline is deterministic and fully supported by the table") {
  auto ex = generate_game(11);
  auto t1 = render_template(ex.table);
  auto t2 = render_template(ex.table);
  CHECK(t1.summary == t2.summary);
  CHECK(t1.plan == t2.plan);

  // player sentences: min(6, players), ordered by descending points
  CHECK(t1.summary.sentence_count() == 2 + 6);

  auto rels = extract_relations(ex.table, t1.summary);
  auto rg = relation_generation(rels, ex.table);
  CHECK(rg.precision == 100.0);
  CHECK(rg.count == unique_relations(rels).size());

  // the frame carries the documented stat fields
  const auto& toks = t1.summary.tokens;
  auto [s, e] = t1.summary.sentence_range(1);
  std::vector<std::string> sentence(toks.begin() + s, toks.begin() + e);
  bool has_scored = false, has_fg = false, has_rebounds = false;
  for (const auto& w : sentence) {
    if (w == "scored") has_scored = true;
    if (w == "FG") has_fg = true;
    if (w == "rebounds") has_rebounds = true;
  }
  CHECK(has_scored);
  CHECK(has_fg);
  CHECK(has_rebounds);
}

TEST_CASE("template requires the record types it verbalizes") {
  RecordTable half({{"TEAM-PTS", "Hawks", "104", Side::Home},
                    {"TEAM-PTS", "Royals", "95", Side::Visiting}});
  try {
    render_template(half);
    FAIL("expected a missing-type error");
  } catch (const std::exception& e) {
    CHECK(std::string(e.what()).find("TEAM-CITY") != std::string::npos);
  }
}

TEST_CASE("gold vs gold scores perfectly") {
  auto corpus = generate_corpus(10, 17);
  std::vector<Summary> system;
  for (const auto& ex : corpus) system.push_back(ex.summary);
  auto rep = evaluate_corpus(corpus, system);
  CHECK(rep.cs_precision == 100.0);
  CHECK(rep.cs_recall == 100.0);
  CHECK(rep.co_dld_pct == 100.0);
  CHECK(rep.bleu == doctest::Approx(1.0));
  CHECK(rep.rg_precision == 100.0);
}

TEST_CASE("metrics are invariant under corpus permutation and worker count") {
  auto corpus = generate_corpus(12, 19);
  std::vector<Summary> system;
  for (const auto& ex : corpus) {
    auto t = render_template(ex.table);
    system.push_back(t.summary);
  }
  auto rep1 = evaluate_corpus(corpus, system, 1);

  std::vector<int> order(corpus.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  Rng rng(5);
  rng.shuffle(order);
  std::vector<DatasetExample> corpus2;
  std::vector<Summary> system2;
  for (int i : order) {
    corpus2.push_back(corpus[static_cast<size_t>(i)]);
    system2.push_back(system[static_cast<size_t>(i)]);
  }
  auto rep2 = evaluate_corpus(corpus2, system2, 3);
  CHECK(rep1.rg_count == doctest::Approx(rep2.rg_count));
  CHECK(rep1.rg_precision == doctest::Approx(rep2.rg_precision));
  CHECK(rep1.cs_precision == doctest::Approx(rep2.cs_precision));
  CHECK(rep1.cs_recall == doctest::Approx(rep2.cs_recall));
  CHECK(rep1.co_dld_pct == doctest::Approx(rep2.co_dld_pct));
  CHECK(rep1.bleu == doctest::Approx(rep2.bleu));
  CHECK(rep1.nondup_pct == doctest::Approx(rep2.nondup_pct));
}
