#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "planwrite/data.hpp"

namespace planwrite {

// Rule-based baseline: an introductory sentence (who won/lost), one
// sentence per top scorer across both teams (six at full scale, fewer when
// the table has fewer players), and a closing sentence. Entirely filled
// from table values, so its relation precision is 100% by construction.
struct TemplateOutput {
  Summary summary;
  ContentPlan plan;  // records verbalized, in order
};

namespace template_detail {

inline int require(const RecordTable& table, const std::string& entity,
                   const std::string& type) {
  if (const auto* pos = table.positions_of(entity)) {
    for (int i : *pos)
      if (table.rec(i).type == type) return i;
  }
  throw std::runtime_error("template: missing required record type " + type + " for " +
                           entity);
}

}  // namespace template_detail

inline TemplateOutput render_template(const RecordTable& table, int player_sentences = 6) {
  using template_detail::require;

  // The two team entities, identified by their TEAM-PTS records.
  std::vector<std::string> teams;
  for (const Record& r : table.records())
    if (r.type == "TEAM-PTS" &&
        std::find(teams.begin(), teams.end(), r.entity) == teams.end())
      teams.push_back(r.entity);
  check(teams.size() == 2, "template: table must contain exactly two teams");
  const int pts0 = std::stoi(table.rec(require(table, teams[0], "TEAM-PTS")).value);
  const int pts1 = std::stoi(table.rec(require(table, teams[1], "TEAM-PTS")).value);
  const std::string& winner = pts0 > pts1 ? teams[0] : teams[1];
  const std::string& loser = pts0 > pts1 ? teams[1] : teams[0];

  // Players ranked by points, ties broken by entity name.
  struct P {
    std::string entity;
    int pts;
  };
  std::vector<P> players;
  for (const Record& r : table.records())
    if (r.type == "PTS") players.push_back({r.entity, std::stoi(r.value)});
  std::sort(players.begin(), players.end(), [](const P& a, const P& b) {
    return a.pts != b.pts ? a.pts > b.pts : a.entity < b.entity;
  });
  const int n_players = std::min<int>(player_sentences, static_cast<int>(players.size()));

  std::vector<std::string> toks;
  std::vector<int> starts;
  std::vector<int> plan;
  auto begin_sentence = [&] { starts.push_back(static_cast<int>(toks.size())); };
  auto word = [&](const std::string& w) { toks.push_back(w); };
  auto fact = [&](int rec) {
    plan.push_back(rec);
    toks.push_back(table.rec(rec).value);
  };

  begin_sentence();
  word("The");
  fact(require(table, winner, kTeamCity));
  fact(require(table, winner, kTeamName));
  word("(");
  fact(require(table, winner, "TEAM-WIN"));
  word("-");
  fact(require(table, winner, "TEAM-LOSS"));
  word(")");
  word("defeated");
  word("the");
  fact(require(table, loser, kTeamCity));
  fact(require(table, loser, kTeamName));
  word("(");
  fact(require(table, loser, "TEAM-WIN"));
  word("-");
  fact(require(table, loser, "TEAM-LOSS"));
  word(")");
  fact(require(table, winner, "TEAM-PTS"));
  word("-");
  fact(require(table, loser, "TEAM-PTS"));
  word(".");

  for (int i = 0; i < n_players; ++i) {
    const std::string& e = players[static_cast<size_t>(i)].entity;
    begin_sentence();
    fact(require(table, e, kFirstName));
    fact(require(table, e, kSecondName));
    word("scored");
    fact(require(table, e, "PTS"));
    word("points");
    word("(");
    fact(require(table, e, "FGM"));
    word("-");
    fact(require(table, e, "FGA"));
    word("FG");
    word(")");
    word("to");
    word("go");
    word("with");
    fact(require(table, e, "REB"));
    word("rebounds");
    word(".");
  }

  begin_sentence();
  for (const char* w :
       {"Both", "teams", "will", "look", "to", "build", "on", "this", "result", "."})
    word(w);

  TemplateOutput out;
  out.summary.tokens = std::move(toks);
  out.summary.sentence_starts = std::move(starts);
  out.plan = ContentPlan(std::move(plan), table.size());
  return out;
}

}  // namespace planwrite
