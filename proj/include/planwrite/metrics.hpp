#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "planwrite/extract.hpp"

namespace planwrite {

// One extracted fact as compared across summaries.
struct RelationTuple {
  std::string entity, value, type;
  Side side = Side::Home;
  int pos = 0;  // first token position, for ordering

  auto key() const { return std::tie(entity, value, type, side); }
  bool operator==(const RelationTuple& o) const { return key() == o.key(); }
  bool operator<(const RelationTuple& o) const { return key() < o.key(); }
};

// Relations found in a text by the same matcher that extracts content
// plans. Pairs that match no table record carry no type and are excluded.
inline std::vector<RelationTuple> extract_relations(const RecordTable& table,
                                                    const Summary& summary) {
  std::vector<RelationTuple> out;
  for (const Emission& e : extract_emissions(table, summary)) {
    const Record& r = table.rec(e.record);
    out.push_back({r.entity, r.value, r.type, r.side, e.pos});
  }
  return out;
}

inline std::set<RelationTuple> unique_relations(const std::vector<RelationTuple>& rels) {
  return std::set<RelationTuple>(rels.begin(), rels.end());
}

struct RgResult {
  double count = 0;      // unique extracted tuples supported by the table
  double precision = 100;  // percent
  bool flagged = false;  // no extracted tuples at all
};

// Factuality: how many unique extracted relations are supported by the
// table, and what fraction of the extracted ones they are.
inline RgResult relation_generation(const std::vector<RelationTuple>& extracted,
                                    const RecordTable& table) {
  auto uniq = unique_relations(extracted);
  RgResult r;
  if (uniq.empty()) {
    r.flagged = true;
    return r;
  }
  int supported = 0;
  for (const auto& t : uniq)
    if (table.contains({t.type, t.entity, t.value, t.side})) ++supported;
  r.count = supported;
  r.precision = 100.0 * supported / static_cast<double>(uniq.size());
  return r;
}

struct PrResult {
  double precision = 100, recall = 100;  // percent
  bool precision_flagged = false, recall_flagged = false;
};

// Set precision/recall of system relations against gold relations.
inline PrResult content_selection(const std::vector<RelationTuple>& sys,
                                  const std::vector<RelationTuple>& gold) {
  auto s = unique_relations(sys);
  auto g = unique_relations(gold);
  PrResult r;
  int both = 0;
  for (const auto& t : s)
    if (g.count(t) > 0) ++both;
  if (s.empty()) {
    r.precision_flagged = true;
    r.recall = g.empty() ? 100 : 0;
    r.recall_flagged = g.empty();
    return r;
  }
  r.precision = 100.0 * both / static_cast<double>(s.size());
  if (g.empty()) {
    r.recall_flagged = true;
  } else {
    r.recall = 100.0 * both / static_cast<double>(g.size());
  }
  return r;
}

// Damerau-Levenshtein distance restricted to single edits (insert, delete,
// substitute, adjacent transposition), each cost 1. Rolling three-row DP.
template <typename Seq>
int dld_distance(const Seq& a, const Seq& b) {
  const int la = static_cast<int>(a.size()), lb = static_cast<int>(b.size());
  if (la == 0) return lb;
  if (lb == 0) return la;
  std::vector<int> prev2(static_cast<size_t>(lb) + 1), prev(static_cast<size_t>(lb) + 1),
      cur(static_cast<size_t>(lb) + 1);
  for (int j = 0; j <= lb; ++j) prev[static_cast<size_t>(j)] = j;
  for (int i = 1; i <= la; ++i) {
    cur[0] = i;
    for (int j = 1; j <= lb; ++j) {
      const bool eq = a[static_cast<size_t>(i) - 1] == b[static_cast<size_t>(j) - 1];
      int best = std::min({prev[static_cast<size_t>(j)] + 1, cur[static_cast<size_t>(j) - 1] + 1,
                           prev[static_cast<size_t>(j) - 1] + (eq ? 0 : 1)});
      if (i > 1 && j > 1 && a[static_cast<size_t>(i) - 1] == b[static_cast<size_t>(j) - 2] &&
          a[static_cast<size_t>(i) - 2] == b[static_cast<size_t>(j) - 1])
        best = std::min(best, prev2[static_cast<size_t>(j) - 2] + 1);
      cur[static_cast<size_t>(j)] = best;
    }
    std::swap(prev2, prev);
    std::swap(prev, cur);
  }
  return prev[static_cast<size_t>(lb)];
}

// 100 * (1 - DLD / max(|s|, |g|)) over the raw (not deduplicated) relation
// sequences; 100 when both are empty.
inline double content_ordering(const std::vector<RelationTuple>& sys,
                               const std::vector<RelationTuple>& gold) {
  if (sys.empty() && gold.empty()) return 100.0;
  const int d = dld_distance(sys, gold);
  const double denom = static_cast<double>(std::max(sys.size(), gold.size()));
  return 100.0 * (1.0 - static_cast<double>(d) / denom);
}

// Corpus-level BLEU-4: geometric mean of clipped n-gram precisions with a
// brevity penalty. No smoothing by default: a zero n-gram precision zeroes
// the score. Returns a value in [0, 1].
inline double corpus_bleu(const std::vector<std::vector<std::string>>& candidates,
                          const std::vector<std::vector<std::string>>& references,
                          bool add_one_smoothing = false) {
  check(!candidates.empty(), "bleu: empty candidate corpus");
  check(candidates.size() == references.size(), "bleu: one reference per candidate required");
  constexpr int kMaxN = 4;
  double clipped[kMaxN] = {0, 0, 0, 0};
  double total[kMaxN] = {0, 0, 0, 0};
  long cand_len = 0, ref_len = 0;

  auto ngram_counts = [](const std::vector<std::string>& toks, int n) {
    std::map<std::vector<std::string>, int> counts;
    for (size_t i = 0; i + static_cast<size_t>(n) <= toks.size(); ++i) {
      std::vector<std::string> gram(toks.begin() + static_cast<long>(i),
                                    toks.begin() + static_cast<long>(i) + n);
      ++counts[gram];
    }
    return counts;
  };

  for (size_t i = 0; i < candidates.size(); ++i) {
    cand_len += static_cast<long>(candidates[i].size());
    ref_len += static_cast<long>(references[i].size());
    for (int n = 1; n <= kMaxN; ++n) {
      auto cand = ngram_counts(candidates[i], n);
      auto ref = ngram_counts(references[i], n);
      for (const auto& [gram, cnt] : cand) {
        total[n - 1] += cnt;
        auto it = ref.find(gram);
        if (it != ref.end()) clipped[n - 1] += std::min(cnt, it->second);
      }
    }
  }

  double log_precision = 0;
  for (int n = 0; n < kMaxN; ++n) {
    double num = clipped[n], den = total[n];
    if (add_one_smoothing) {
      num += 1;
      den += 1;
    }
    if (num == 0 || den == 0) return 0.0;
    log_precision += std::log(num / den);
  }
  const double bp =
      cand_len < ref_len ? std::exp(1.0 - static_cast<double>(ref_len) / cand_len) : 1.0;
  return bp * std::exp(log_precision / kMaxN);
}

struct DupResult {
  double nondup_pct = 100;
  bool flagged = false;
};

// Percent of extracted relations that are not duplicates of an earlier one.
inline DupResult duplicate_ratio(const std::vector<RelationTuple>& extracted) {
  DupResult r;
  if (extracted.empty()) {
    r.flagged = true;
    return r;
  }
  r.nondup_pct = 100.0 * static_cast<double>(unique_relations(extracted).size()) /
                 static_cast<double>(extracted.size());
  return r;
}

struct MetricReport {
  double rg_count = 0;       // mean unique supported relations per summary
  double rg_precision = 100;
  double cs_precision = 100;
  double cs_recall = 100;
  double co_dld_pct = 100;
  double bleu = 1.0;         // in [0, 1]
  double nondup_pct = 100;
  long flagged_examples = 0;
};

// Runs fn(0..n-1) across `workers` threads; slot-indexed writes keep the
// result order deterministic.
template <typename Fn>
void parallel_for(int n, int workers, Fn&& fn) {
  if (workers <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  const int count = std::min(workers, n);
  pool.reserve(static_cast<size_t>(count));
  for (int w = 0; w < count; ++w) {
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

// Corpus evaluation. RG count is a per-summary mean; RG precision, CS
// precision/recall and the non-duplicate ratio aggregate over corpus
// totals; CO averages per-summary scores; BLEU is corpus-level.
// Per-example extraction is a pure function, so the map phase may run on
// several workers; the reduce is ordered and single-threaded.
inline MetricReport evaluate_corpus(const std::vector<DatasetExample>& gold,
                                    const std::vector<Summary>& system, int workers = 1) {
  check(gold.size() == system.size(), "evaluate: gold/system size mismatch");
  check(!gold.empty(), "evaluate: empty corpus");

  struct PerExample {
    std::vector<RelationTuple> sys, gold;
  };
  std::vector<PerExample> rel(gold.size());
  parallel_for(static_cast<int>(gold.size()), workers, [&](int i) {
    const size_t s = static_cast<size_t>(i);
    rel[s].sys = extract_relations(gold[s].table, system[s]);
    rel[s].gold = extract_relations(gold[s].table, gold[s].summary);
  });

  MetricReport rep;
  double rg_count_sum = 0;
  long rg_supported = 0, rg_extracted = 0;
  long cs_both = 0, cs_sys = 0, cs_gold = 0;
  double co_sum = 0;
  long dup_unique = 0, dup_total = 0;
  std::vector<std::vector<std::string>> cands, refs;

  for (size_t i = 0; i < gold.size(); ++i) {
    const RecordTable& table = gold[i].table;
    const auto& sys_rel = rel[i].sys;
    const auto& gold_rel = rel[i].gold;

    auto rg = relation_generation(sys_rel, table);
    if (rg.flagged) ++rep.flagged_examples;
    rg_count_sum += rg.count;
    auto s = unique_relations(sys_rel);
    auto g = unique_relations(gold_rel);
    rg_extracted += static_cast<long>(s.size());
    rg_supported += static_cast<long>(rg.count);

    for (const auto& t : s)
      if (g.count(t) > 0) ++cs_both;
    cs_sys += static_cast<long>(s.size());
    cs_gold += static_cast<long>(g.size());

    co_sum += content_ordering(sys_rel, gold_rel);

    dup_unique += static_cast<long>(s.size());
    dup_total += static_cast<long>(sys_rel.size());

    cands.push_back(system[i].tokens);
    refs.push_back(gold[i].summary.tokens);
  }

  const double n = static_cast<double>(gold.size());
  rep.rg_count = rg_count_sum / n;
  rep.rg_precision = rg_extracted > 0 ? 100.0 * rg_supported / rg_extracted : 100.0;
  rep.cs_precision = cs_sys > 0 ? 100.0 * cs_both / cs_sys : 100.0;
  rep.cs_recall = cs_gold > 0 ? 100.0 * cs_both / cs_gold : 100.0;
  rep.co_dld_pct = co_sum / n;
  rep.bleu = corpus_bleu(cands, refs);
  rep.nondup_pct = dup_total > 0 ? 100.0 * dup_unique / dup_total : 100.0;
  return rep;
}

}  // namespace planwrite
