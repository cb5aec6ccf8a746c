#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "planwrite/data.hpp"

namespace planwrite {

// Number words 0..20 normalize to digit strings before value matching;
// digit tokens pass through unchanged.
inline std::optional<std::string> normalize_number_token(const std::string& tok) {
  static const std::map<std::string, std::string> words = {
      {"zero", "0"},     {"one", "1"},       {"two", "2"},      {"three", "3"},
      {"four", "4"},     {"five", "5"},      {"six", "6"},      {"seven", "7"},
      {"eight", "8"},    {"nine", "9"},      {"ten", "10"},     {"eleven", "11"},
      {"twelve", "12"},  {"thirteen", "13"}, {"fourteen", "14"},{"fifteen", "15"},
      {"sixteen", "16"}, {"seventeen", "17"},{"eighteen", "18"},{"nineteen", "19"},
      {"twenty", "20"}};
  if (!tok.empty() && std::all_of(tok.begin(), tok.end(), [](char c) {
        return c >= '0' && c <= '9';
      }))
    return tok;
  auto it = words.find(tok);
  if (it != words.end()) return it->second;
  return std::nullopt;
}

// An entity mention found in text: token span plus the name-introduction
// records covered by the span (e.g. FIRST_NAME at the first token).
struct Mention {
  std::string entity;
  int start = 0;                              // token position
  int end = 0;                                // exclusive
  std::vector<std::pair<int, int>> intro;     // (record position, token position)
};

// Surface forms an entity can be mentioned by, derived from its
// name-introduction records; entities without them fall back to their
// underscore-split entity string.
class MentionIndex {
 public:
  explicit MentionIndex(const RecordTable& table) : table_(&table) {
    for (const std::string& entity : table.entities()) {
      int first = find_intro(entity, kFirstName);
      int second = find_intro(entity, kSecondName);
      int city = find_intro(entity, kTeamCity);
      int name = find_intro(entity, kTeamName);
      if (first >= 0 && second >= 0)
        add_span(entity, {table.rec(first).value, table.rec(second).value}, {first, second});
      if (city >= 0 && name >= 0)
        add_span(entity, {table.rec(city).value, table.rec(name).value}, {city, name});
      if (first >= 0) add_span(entity, {table.rec(first).value}, {first});
      if (second >= 0) add_span(entity, {table.rec(second).value}, {second});
      if (city >= 0) add_span(entity, {table.rec(city).value}, {city});
      if (name >= 0) add_span(entity, {table.rec(name).value}, {name});
      if (first < 0 && second < 0 && city < 0 && name < 0) add_fallback(entity);
    }
  }

  // Left-to-right longest-match scan over one sentence.
  std::vector<Mention> find(const std::vector<std::string>& tokens, int begin, int end) const {
    std::vector<Mention> out;
    int p = begin;
    while (p < end) {
      const Span* best = nullptr;
      for (const Span& s : spans_) {
        if (p + static_cast<int>(s.words.size()) > end) continue;
        bool hit = true;
        for (size_t i = 0; i < s.words.size(); ++i) {
          if (tokens[static_cast<size_t>(p) + i] != s.words[i]) {
            hit = false;
            break;
          }
        }
        if (hit && (best == nullptr || s.words.size() > best->words.size())) best = &s;
      }
      if (best == nullptr) {
        ++p;
        continue;
      }
      Mention m;
      m.entity = best->entity;
      m.start = p;
      m.end = p + static_cast<int>(best->words.size());
      for (size_t i = 0; i < best->intro_records.size(); ++i) {
        int rec = best->intro_records[i];
        if (rec >= 0) m.intro.emplace_back(rec, p + static_cast<int>(i));
      }
      out.push_back(std::move(m));
      p = out.back().end;
    }
    return out;
  }

 private:
  struct Span {
    std::string entity;
    std::vector<std::string> words;
    std::vector<int> intro_records;  // parallel to words; -1 for no record
  };

  const RecordTable* table_;
  std::vector<Span> spans_;

  int find_intro(const std::string& entity, const std::string& type) const {
    if (const auto* pos = table_->positions_of(entity)) {
      for (int i : *pos)
        if (table_->rec(i).type == type) return i;
    }
    return -1;
  }

  void add_span(const std::string& entity, std::vector<std::string> words,
                std::vector<int> recs) {
    for (const Span& s : spans_)
      if (s.words == words) return;  // earliest entity keeps an ambiguous surface
    spans_.push_back({entity, std::move(words), std::move(recs)});
  }

  void add_fallback(const std::string& entity) {
    std::vector<std::string> words;
    std::string cur;
    for (char c : entity) {
      if (c == '_') {
        if (!cur.empty()) words.push_back(cur);
        cur.clear();
      } else {
        cur.push_back(c);
      }
    }
    if (!cur.empty()) words.push_back(cur);
    if (words.empty()) return;
    std::vector<int> recs(words.size(), -1);
    add_span(entity, words, recs);
    if (words.size() > 1) {
      for (const std::string& w : words) add_span(entity, {w}, {-1});
    }
  }
};

namespace detail {

inline bool is_number(const std::vector<std::string>& toks, int i, int begin, int end) {
  return i >= begin && i < end && normalize_number_token(toks[static_cast<size_t>(i)]).has_value();
}

inline bool tok_is(const std::vector<std::string>& toks, int i, int begin, int end,
                   const char* w) {
  return i >= begin && i < end && toks[static_cast<size_t>(i)] == w;
}

// Local context cues narrowing a value's record type. Patterns first
// (field-goal "a - of - b" / "a of b" / "( a - b FG )" and win-loss
// parentheses), then stat words near the value.
inline std::set<std::string> cue_types(const std::vector<std::string>& toks, int p, int begin,
                                       int end) {
  // ( w - l )
  if (tok_is(toks, p - 1, begin, end, "(") && tok_is(toks, p + 1, begin, end, "-") &&
      is_number(toks, p + 2, begin, end) && tok_is(toks, p + 3, begin, end, ")"))
    return {"TEAM-WIN"};
  if (tok_is(toks, p + 1, begin, end, ")") && tok_is(toks, p - 1, begin, end, "-") &&
      is_number(toks, p - 2, begin, end) && tok_is(toks, p - 3, begin, end, "("))
    return {"TEAM-LOSS"};
  // a - of - b  |  a of b
  if (tok_is(toks, p + 1, begin, end, "-") && tok_is(toks, p + 2, begin, end, "of"))
    return {"FGM"};
  if (tok_is(toks, p - 1, begin, end, "-") && tok_is(toks, p - 2, begin, end, "of"))
    return {"FGA"};
  if (tok_is(toks, p + 1, begin, end, "of") && is_number(toks, p + 2, begin, end))
    return {"FGM"};
  if (tok_is(toks, p - 1, begin, end, "of") && is_number(toks, p - 2, begin, end))
    return {"FGA"};
  // a - b FG
  if (tok_is(toks, p + 1, begin, end, "-") && is_number(toks, p + 2, begin, end) &&
      tok_is(toks, p + 3, begin, end, "FG"))
    return {"FGM"};
  if (tok_is(toks, p - 1, begin, end, "-") && is_number(toks, p - 2, begin, end) &&
      tok_is(toks, p + 1, begin, end, "FG"))
    return {"FGA"};

  auto word_cue = [](const std::string& w) -> std::set<std::string> {
    if (w == "points" || w == "point") return {"PTS", "TEAM-PTS"};
    if (w == "assists" || w == "assist") return {"AST", "TEAM-AST"};
    if (w == "rebounds" || w == "rebound" || w == "rebounded")
      return {"REB", "TEAM-REB"};
    if (w == "percent") return {"TEAM-FG_PCT"};
    return {};
  };
  for (int i = p + 1; i <= p + 3 && i < end; ++i) {
    auto c = word_cue(toks[static_cast<size_t>(i)]);
    if (!c.empty()) return c;
  }
  for (int i = p - 1; i >= p - 6 && i >= begin; --i) {
    auto c = word_cue(toks[static_cast<size_t>(i)]);
    if (!c.empty()) return c;
  }
  return {};
}

}  // namespace detail

// One matched fact: a table record anchored at a token position.
struct Emission {
  int record = -1;
  int pos = -1;
};

// The shared matcher behind plan extraction, relation extraction and copy
// labeling. Within each sentence, entity mentions are found longest-match
// first; each number token is paired with a record whose entity is
// mentioned in the sentence and whose value matches. Ambiguities resolve by
// type cue, then by the nearest entity mention before the value, then by
// table position. Name-introduction records are emitted at an entity's
// first mention. Output is ordered by token position.
inline std::vector<Emission> extract_emissions(const RecordTable& table,
                                               const Summary& summary) {
  std::vector<Emission> out;
  if (table.size() == 0 || summary.tokens.empty() || summary.sentence_starts.empty())
    return out;
  MentionIndex index(table);
  std::set<std::string> introduced;

  for (int s = 0; s < summary.sentence_count(); ++s) {
    auto [begin, end] = summary.sentence_range(s);
    std::vector<Mention> mentions = index.find(summary.tokens, begin, end);
    if (mentions.empty()) continue;

    for (const Mention& m : mentions) {
      if (introduced.insert(m.entity).second) {
        for (auto [rec, pos] : m.intro) out.push_back({rec, pos});
      }
    }

    for (int p = begin; p < end; ++p) {
      auto norm = normalize_number_token(summary.tokens[static_cast<size_t>(p)]);
      if (!norm.has_value()) continue;

      std::vector<int> candidates;
      for (const Mention& m : mentions) {
        for (int rec : table.find(m.entity, *norm)) {
          if (std::find(candidates.begin(), candidates.end(), rec) == candidates.end())
            candidates.push_back(rec);
        }
      }
      if (candidates.empty()) continue;

      if (candidates.size() > 1) {
        auto cues = detail::cue_types(summary.tokens, p, begin, end);
        if (!cues.empty()) {
          std::vector<int> filtered;
          for (int rec : candidates)
            if (cues.count(table.rec(rec).type) > 0) filtered.push_back(rec);
          if (!filtered.empty()) candidates = std::move(filtered);
        }
      }

      if (candidates.size() > 1) {
        // Nearest mention ending at or before the value token; else nearest
        // mention after it.
        const Mention* chosen = nullptr;
        int best_dist = 1 << 30;
        for (const Mention& m : mentions) {
          if (m.end > p) continue;
          bool has = std::any_of(candidates.begin(), candidates.end(), [&](int rec) {
            return table.rec(rec).entity == m.entity;
          });
          if (has && p - m.end < best_dist) {
            best_dist = p - m.end;
            chosen = &m;
          }
        }
        if (chosen == nullptr) {
          for (const Mention& m : mentions) {
            if (m.start <= p) continue;
            bool has = std::any_of(candidates.begin(), candidates.end(), [&](int rec) {
              return table.rec(rec).entity == m.entity;
            });
            if (has && m.start - p < best_dist) {
              best_dist = m.start - p;
              chosen = &m;
            }
          }
        }
        if (chosen != nullptr) {
          std::vector<int> filtered;
          for (int rec : candidates)
            if (table.rec(rec).entity == chosen->entity) filtered.push_back(rec);
          candidates = std::move(filtered);
        }
      }

      out.push_back({*std::min_element(candidates.begin(), candidates.end()), p});
    }
  }

  std::stable_sort(out.begin(), out.end(),
                   [](const Emission& a, const Emission& b) { return a.pos < b.pos; });
  return out;
}

// Content plan as the sequence of matched record positions, in order of
// appearance. Empty for fact-free text.
inline ContentPlan extract_content_plan(const RecordTable& table, const Summary& summary) {
  std::vector<int> steps;
  for (const Emission& e : extract_emissions(table, summary)) steps.push_back(e.record);
  return ContentPlan(std::move(steps), table.size());
}

// Token y_t is labeled copied from step k iff it equals step k's record
// value and that record's entity is mentioned in the token's sentence; the
// earliest qualifying step wins.
inline Summary mark_copy_targets(const Summary& summary, const ContentPlan& plan,
                                 const RecordTable& table) {
  Summary out = summary;
  out.copy_labels.assign(summary.tokens.size(), CopyLabel{});
  if (plan.empty() || summary.sentence_starts.empty()) return out;

  MentionIndex index(table);
  std::vector<std::set<std::string>> sentence_entities(
      static_cast<size_t>(summary.sentence_count()));
  for (int s = 0; s < summary.sentence_count(); ++s) {
    auto [begin, end] = summary.sentence_range(s);
    for (const Mention& m : index.find(summary.tokens, begin, end))
      sentence_entities[static_cast<size_t>(s)].insert(m.entity);
  }

  for (int t = 0; t < summary.token_count(); ++t) {
    const std::string& tok = summary.tokens[static_cast<size_t>(t)];
    const auto& mentioned = sentence_entities[static_cast<size_t>(summary.sentence_of(t))];
    for (int k = 0; k < plan.length(); ++k) {
      const Record& r = table.rec(plan.step(k));
      if (r.value == tok && mentioned.count(r.entity) > 0) {
        out.copy_labels[static_cast<size_t>(t)].step = k;
        break;
      }
    }
  }
  return out;
}

}  // namespace planwrite
