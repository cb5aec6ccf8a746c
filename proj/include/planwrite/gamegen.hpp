#pragma once

#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "planwrite/data.hpp"
#include "planwrite/extract.hpp"
#include "planwrite/rng.hpp"

namespace planwrite {

struct StatRange {
  int lo = 0, hi = 0;
  int draw(Rng& rng) const { return rng.uniform_int(lo, hi); }
  bool valid() const { return lo <= hi && lo >= 0; }
};

struct CorpusConfig {
  int players_per_team = 3;
  StatRange team_win{5, 50};
  StatRange team_loss{5, 50};
  StatRange winner_pts{95, 128};
  StatRange victory_margin{1, 14};
  StatRange team_fg_pct{39, 55};
  StatRange team_reb{30, 58};
  StatRange team_ast{15, 34};
  // Each team's first player is its star; the disjoint scoring ranges give
  // every game a clear scoring hierarchy.
  StatRange star_pts{22, 34};
  StatRange player_pts{2, 20};
  StatRange player_reb{0, 14};
  StatRange player_ast{0, 11};
  StatRange player_fga{4, 24};
  // A player's points sentence is generated only for top scorers; lower
  // slots appear only above these cutoffs. This makes content selection
  // table-dependent.
  int loser_second_scorer_min_pts = 12;
  int winner_third_scorer_min_pts = 10;

  void validate() const {
    check(players_per_team >= 2, "corpus config: need at least 2 players per team");
    for (const StatRange* r : {&team_win, &team_loss, &winner_pts, &victory_margin,
                               &team_fg_pct, &team_reb, &team_ast, &star_pts, &player_pts,
                               &player_reb, &player_ast, &player_fga})
      check(r->valid(), "corpus config: invalid range");
    check(victory_margin.lo >= 1, "corpus config: margin must be positive");
  }
};

struct TeamSpec {
  std::string city, name;
  int win = 0, loss = 0, pts = 0, fg_pct = 0, reb = 0, ast = 0;
};

struct PlayerSpec {
  std::string first, second;
  int pts = 0, reb = 0, ast = 0, fgm = 0, fga = 0;
  std::string entity() const { return first + "_" + second; }
};

// Sampled game data; the raw material both the table and the summary are
// built from.
struct GameSpec {
  uint64_t seed = 0;
  TeamSpec home, visiting;
  std::vector<PlayerSpec> home_players, visiting_players;
  bool home_won = false;

  const TeamSpec& winner() const { return home_won ? home : visiting; }
  const TeamSpec& loser() const { return home_won ? visiting : home; }
};

namespace pools {
inline const std::vector<std::pair<std::string, std::string>>& franchises() {
  static const std::vector<std::pair<std::string, std::string>> v = {
      {"Riverton", "Hawks"},    {"Brookfield", "Comets"}, {"Lakewood", "Pioneers"},
      {"Fairmont", "Storm"},    {"Masonville", "Wolves"}, {"Oakdale", "Royals"},
      {"Hartwell", "Titans"},   {"Linden", "Flyers"},     {"Crestview", "Chargers"},
      {"Norwood", "Rockets"},   {"Eastgate", "Miners"},   {"Summerside", "Stags"}};
  return v;
}
// Pools are small enough that a few dozen training games cover nearly all
// player name combinations, keeping held-out entities in-vocabulary.
inline const std::vector<std::string>& first_names() {
  static const std::vector<std::string> v = {"Jalen", "Marcus", "Devin", "Tyrese",
                                             "Aaron", "Cole",   "Jordan", "Malik"};
  return v;
}
inline const std::vector<std::string>& second_names() {
  static const std::vector<std::string> v = {"Carter", "Brooks", "Hayes",  "Porter",
                                             "Reed",   "Bennett", "Fisher", "Monroe"};
  return v;
}
}  // namespace pools

inline GameSpec sample_game(uint64_t seed, const CorpusConfig& cfg) {
  cfg.validate();
  Rng rng(seed);
  GameSpec game;
  game.seed = seed;

  int f_home = rng.uniform_int(0, static_cast<int>(pools::franchises().size()) - 1);
  int f_vis = f_home;
  while (f_vis == f_home)
    f_vis = rng.uniform_int(0, static_cast<int>(pools::franchises().size()) - 1);
  game.home.city = pools::franchises()[static_cast<size_t>(f_home)].first;
  game.home.name = pools::franchises()[static_cast<size_t>(f_home)].second;
  game.visiting.city = pools::franchises()[static_cast<size_t>(f_vis)].first;
  game.visiting.name = pools::franchises()[static_cast<size_t>(f_vis)].second;

  game.home_won = rng.next_double() < 0.5;
  int wpts = cfg.winner_pts.draw(rng);
  int lpts = wpts - cfg.victory_margin.draw(rng);
  TeamSpec& w = game.home_won ? game.home : game.visiting;
  TeamSpec& l = game.home_won ? game.visiting : game.home;
  w.pts = wpts;
  l.pts = lpts;
  for (TeamSpec* t : {&game.home, &game.visiting}) {
    t->win = cfg.team_win.draw(rng);
    t->loss = cfg.team_loss.draw(rng);
    t->fg_pct = cfg.team_fg_pct.draw(rng);
    t->reb = cfg.team_reb.draw(rng);
    t->ast = cfg.team_ast.draw(rng);
  }
  // Paired team stats must differ so that value matching stays unambiguous.
  while (l.reb == w.reb) l.reb = cfg.team_reb.draw(rng);

  std::set<std::string> used_first, used_second;
  auto sample_players = [&](std::vector<PlayerSpec>& out) {
    for (int i = 0; i < cfg.players_per_team; ++i) {
      PlayerSpec p;
      do {
        p.first = rng.pick(pools::first_names());
      } while (used_first.count(p.first) > 0);
      used_first.insert(p.first);
      do {
        p.second = rng.pick(pools::second_names());
      } while (used_second.count(p.second) > 0);
      used_second.insert(p.second);
      p.pts = (i == 0 ? cfg.star_pts : cfg.player_pts).draw(rng);
      p.reb = cfg.player_reb.draw(rng);
      p.ast = cfg.player_ast.draw(rng);
      p.fga = cfg.player_fga.draw(rng);
      p.fgm = rng.uniform_int(1, std::min(p.fga, 13));
      out.push_back(std::move(p));
    }
  };
  sample_players(game.home_players);
  sample_players(game.visiting_players);
  return game;
}

// Record positions for one team / player, filled while building the table.
struct TeamRecords {
  int city, name, pts, win, loss, fg_pct, reb, ast;
};
struct PlayerRecords {
  int first, second, pts, reb, ast, fgm, fga;
};

struct TableLayout {
  RecordTable table;
  TeamRecords home_team{}, visiting_team{};
  std::vector<PlayerRecords> home_players, visiting_players;
};

// Records are an unordered set; tables are stored in a per-game shuffled
// order so that positions carry no information.
inline TableLayout build_table(const GameSpec& game, Rng* shuffle_rng = nullptr) {
  std::vector<Record> recs;
  auto num = [](int v) { return std::to_string(v); };

  auto add_team = [&](const TeamSpec& t, Side side) {
    TeamRecords tr{};
    int base = static_cast<int>(recs.size());
    recs.push_back({kTeamCity, t.name, t.city, side});
    recs.push_back({kTeamName, t.name, t.name, side});
    recs.push_back({"TEAM-PTS", t.name, num(t.pts), side});
    recs.push_back({"TEAM-WIN", t.name, num(t.win), side});
    recs.push_back({"TEAM-LOSS", t.name, num(t.loss), side});
    recs.push_back({"TEAM-FG_PCT", t.name, num(t.fg_pct), side});
    recs.push_back({"TEAM-REB", t.name, num(t.reb), side});
    recs.push_back({"TEAM-AST", t.name, num(t.ast), side});
    tr = {base, base + 1, base + 2, base + 3, base + 4, base + 5, base + 6, base + 7};
    return tr;
  };
  auto add_player = [&](const PlayerSpec& p, Side side) {
    PlayerRecords pr{};
    int base = static_cast<int>(recs.size());
    const std::string e = p.entity();
    recs.push_back({kFirstName, e, p.first, side});
    recs.push_back({kSecondName, e, p.second, side});
    recs.push_back({"PTS", e, num(p.pts), side});
    recs.push_back({"REB", e, num(p.reb), side});
    recs.push_back({"AST", e, num(p.ast), side});
    recs.push_back({"FGM", e, num(p.fgm), side});
    recs.push_back({"FGA", e, num(p.fga), side});
    pr = {base, base + 1, base + 2, base + 3, base + 4, base + 5, base + 6};
    return pr;
  };

  TableLayout out;
  out.home_team = add_team(game.home, Side::Home);
  out.visiting_team = add_team(game.visiting, Side::Visiting);
  for (const auto& p : game.home_players) out.home_players.push_back(add_player(p, Side::Home));
  for (const auto& p : game.visiting_players)
    out.visiting_players.push_back(add_player(p, Side::Visiting));

  if (shuffle_rng != nullptr) {
    std::vector<int> perm(recs.size());
    for (size_t i = 0; i < perm.size(); ++i) perm[i] = static_cast<int>(i);
    shuffle_rng->shuffle(perm);  // perm[i] = new position of record i
    std::vector<Record> shuffled(recs.size());
    for (size_t i = 0; i < recs.size(); ++i)
      shuffled[static_cast<size_t>(perm[i])] = recs[i];
    recs = std::move(shuffled);
    auto remap_team = [&](TeamRecords& tr) {
      for (int* f : {&tr.city, &tr.name, &tr.pts, &tr.win, &tr.loss, &tr.fg_pct, &tr.reb,
                     &tr.ast})
        *f = perm[static_cast<size_t>(*f)];
    };
    auto remap_player = [&](PlayerRecords& pr) {
      for (int* f : {&pr.first, &pr.second, &pr.pts, &pr.reb, &pr.ast, &pr.fgm, &pr.fga})
        *f = perm[static_cast<size_t>(*f)];
    };
    remap_team(out.home_team);
    remap_team(out.visiting_team);
    for (auto& pr : out.home_players) remap_player(pr);
    for (auto& pr : out.visiting_players) remap_player(pr);
  }
  out.table = RecordTable(std::move(recs));
  return out;
}

namespace gen_detail {

// Accumulates tokens plus the generator's own emission log, used in tests
// as an oracle for the extractor.
struct SummaryBuilder {
  std::vector<std::string> tokens;
  std::vector<int> sentence_starts;
  std::vector<Emission> log;
  std::set<std::string> introduced;
  const RecordTable* table = nullptr;

  void begin_sentence() { sentence_starts.push_back(static_cast<int>(tokens.size())); }

  void words(std::initializer_list<const char*> ws) {
    for (const char* w : ws) tokens.emplace_back(w);
  }

  // Emit a record's value as a token and log it.
  void fact(int rec) {
    log.push_back({rec, static_cast<int>(tokens.size())});
    tokens.push_back(table->rec(rec).value);
  }

  // Mention by full name; name-introduction records are logged once.
  void mention(std::initializer_list<int> name_recs) {
    const std::string& entity = table->rec(*name_recs.begin()).entity;
    bool first_time = introduced.insert(entity).second;
    for (int rec : name_recs) {
      if (first_time) log.push_back({rec, static_cast<int>(tokens.size())});
      tokens.push_back(table->rec(rec).value);
    }
  }
};

}  // namespace gen_detail

struct GeneratedGame {
  DatasetExample example;
  std::vector<Emission> generator_log;  // oracle for extractor tests
};

// Deterministic per seed. The summary verbalizes only table facts, every
// value's entity is mentioned in the same sentence, and numbers are
// rendered as digits. The stored gold plan is the extractor's output; the
// generator log is returned alongside for verification.
inline GeneratedGame generate_game_with_log(uint64_t seed, const CorpusConfig& cfg = {}) {
  GameSpec game = sample_game(seed, cfg);
  Rng shuffle_rng(Rng::mix(seed, 0x7ab1e));
  TableLayout t = build_table(game, &shuffle_rng);
  Rng rng(Rng::mix(seed, 0x5eed));

  const bool hw = game.home_won;
  const TeamRecords& wt = hw ? t.home_team : t.visiting_team;
  const TeamRecords& lt = hw ? t.visiting_team : t.home_team;
  const std::vector<PlayerRecords>& wp = hw ? t.home_players : t.visiting_players;
  const std::vector<PlayerRecords>& lp = hw ? t.visiting_players : t.home_players;
  const std::vector<PlayerSpec>& wps = hw ? game.home_players : game.visiting_players;
  const std::vector<PlayerSpec>& lps = hw ? game.visiting_players : game.home_players;

  gen_detail::SummaryBuilder b;
  b.table = &t.table;

  // Sentence blocks between the fixed opening and closing sentences vary in
  // order from game to game, so getting the document structure right
  // genuinely requires a plan.
  const bool stats_before_standings = rng.next_double() < 0.5;
  const bool loser_block_first = rng.next_double() < 0.5;

  // Winner is always mentioned before the loser in the opening sentence.
  b.begin_sentence();
  b.words({"The"});
  b.mention({wt.city, wt.name});
  b.words({rng.next_double() < 0.5 ? "defeated" : "beat", "the"});
  b.mention({lt.city, lt.name});
  b.fact(wt.pts);
  b.words({"-"});
  b.fact(lt.pts);
  b.words({"."});

  auto standings = [&] {
    b.begin_sentence();
    if (rng.next_double() < 0.5) {
      b.words({"The"});
      b.mention({wt.name});
      b.words({"improved", "to"});
      b.fact(wt.win);
      b.words({"-"});
      b.fact(wt.loss);
      b.words({"while", "the"});
      b.mention({lt.name});
      b.words({"fell", "to"});
      b.fact(lt.win);
      b.words({"-"});
      b.fact(lt.loss);
      b.words({"."});
    } else {
      b.words({"The"});
      b.mention({wt.name});
      b.words({"("});
      b.fact(wt.win);
      b.words({"-"});
      b.fact(wt.loss);
      b.words({")"});
      b.words({"kept", "rolling", "while", "the"});
      b.mention({lt.name});
      b.words({"("});
      b.fact(lt.win);
      b.words({"-"});
      b.fact(lt.loss);
      b.words({")"});
      b.words({"continued", "to", "slide", "."});
    }
  };

  // Which team stat gets verbalized is a function of the table, so content
  // selection is learnable rather than noise.
  const TeamSpec& ws = game.winner();
  const TeamSpec& ls = game.loser();
  auto team_stats = [&] {
    b.begin_sentence();
    if (ws.reb > ls.reb) {
      b.words({"The"});
      b.mention({wt.name});
      b.words({"out", "-", "rebounded", "the"});
      b.mention({lt.name});
      b.fact(wt.reb);
      b.words({"-"});
      b.fact(lt.reb);
      b.words({"."});
    } else if (ws.fg_pct > ls.fg_pct) {
      b.words({"The"});
      b.mention({wt.name});
      b.words({"shot"});
      b.fact(wt.fg_pct);
      b.words({"percent", "from", "the", "field", "while", "the"});
      b.mention({lt.name});
      b.words({"finished", "at"});
      b.fact(lt.fg_pct);
      b.words({"percent", "."});
    } else {
      b.words({"The"});
      b.mention({wt.name});
      b.words({"dished", "out"});
      b.fact(wt.ast);
      b.words({"assists", "while", "the"});
      b.mention({lt.name});
      b.words({"recorded"});
      b.fact(lt.ast);
      b.words({"."});
    }
  };

  if (stats_before_standings) {
    team_stats();
    standings();
  } else {
    standings();
    team_stats();
  }

  // Order players by scoring; only top scorers are verbalized.
  auto order = [](const std::vector<PlayerSpec>& ps) {
    std::vector<int> idx(ps.size());
    for (size_t i = 0; i < ps.size(); ++i) idx[i] = static_cast<int>(i);
    std::sort(idx.begin(), idx.end(), [&](int a, int b) {
      if (ps[static_cast<size_t>(a)].pts != ps[static_cast<size_t>(b)].pts)
        return ps[static_cast<size_t>(a)].pts > ps[static_cast<size_t>(b)].pts;
      return ps[static_cast<size_t>(a)].entity() < ps[static_cast<size_t>(b)].entity();
    });
    return idx;
  };
  std::vector<int> worder = order(wps), lorder = order(lps);

  auto winner_block = [&] {
    const PlayerRecords& w1 = wp[static_cast<size_t>(worder[0])];
    b.begin_sentence();
    b.mention({w1.first, w1.second});
    if (rng.next_double() < 0.5) {
      b.words({"led", "the"});
      b.mention({wt.name});
      b.words({"with"});
      b.fact(w1.pts);
      b.words({"points", "on"});
      b.fact(w1.fgm);
      b.words({"-", "of", "-"});
      b.fact(w1.fga);
      b.words({"shooting", "."});
    } else {
      b.words({"paced", "the"});
      b.mention({wt.name});
      b.words({"with"});
      b.fact(w1.pts);
      b.words({"points", ",", "hitting"});
      b.fact(w1.fgm);
      b.words({"of"});
      b.fact(w1.fga);
      b.words({"shots", "."});
    }

    const PlayerRecords& w2 = wp[static_cast<size_t>(worder[1])];
    b.begin_sentence();
    b.mention({w2.first, w2.second});
    if (rng.next_double() < 0.5) {
      b.words({"added"});
      b.fact(w2.pts);
      b.words({"points", "and"});
      b.fact(w2.reb);
      b.words({"rebounds", "."});
    } else {
      b.words({"chipped", "in"});
      b.fact(w2.pts);
      b.words({"points", "and"});
      b.fact(w2.reb);
      b.words({"rebounds", "for", "the"});
      b.mention({wt.name});
      b.words({"."});
    }

    // third scorer only when productive enough
    if (static_cast<int>(worder.size()) > 2 &&
        wps[static_cast<size_t>(worder[2])].pts >= cfg.winner_third_scorer_min_pts) {
      const PlayerRecords& w3 = wp[static_cast<size_t>(worder[2])];
      b.begin_sentence();
      b.mention({w3.first, w3.second});
      b.words({"pitched", "in", "with"});
      b.fact(w3.pts);
      b.words({"points", "and"});
      b.fact(w3.ast);
      b.words({"assists", "."});
    }
  };

  auto loser_block = [&] {
    // assists make the sentence only when there were enough of them
    const PlayerSpec& l1s = lps[static_cast<size_t>(lorder[0])];
    const PlayerRecords& l1 = lp[static_cast<size_t>(lorder[0])];
    b.begin_sentence();
    b.mention({l1.first, l1.second});
    if (l1s.ast >= 5) {
      b.words({"had"});
      b.fact(l1.pts);
      b.words({"points", "and"});
      b.fact(l1.ast);
      b.words({"assists", "for", "the"});
      b.mention({lt.name});
      b.words({"."});
    } else {
      b.words({"scored"});
      b.fact(l1.pts);
      b.words({"points", "for", "the"});
      b.mention({lt.name});
      b.words({"."});
    }

    if (lps[static_cast<size_t>(lorder[1])].pts >= cfg.loser_second_scorer_min_pts) {
      const PlayerSpec& l2s = lps[static_cast<size_t>(lorder[1])];
      const PlayerRecords& l2 = lp[static_cast<size_t>(lorder[1])];
      b.begin_sentence();
      b.mention({l2.first, l2.second});
      if (l2s.reb >= 8) {
        b.words({"finished", "with"});
        b.fact(l2.pts);
        b.words({"points", "and"});
        b.fact(l2.reb);
        b.words({"rebounds", "."});
      } else {
        b.words({"chipped", "in"});
        b.fact(l2.pts);
        b.words({"points", "."});
      }
    }
  };

  if (loser_block_first) {
    loser_block();
    winner_block();
  } else {
    winner_block();
    loser_block();
  }

  b.begin_sentence();
  if (rng.next_double() < 0.5) {
    b.words({"It", "was", "a", "hard", "-", "fought", "game", "from", "start", "to",
             "finish", "."});
  } else {
    b.words({"Both", "teams", "return", "to", "action", "later", "this", "week", "."});
  }

  GeneratedGame out;
  out.generator_log = b.log;
  Summary summary;
  summary.tokens = std::move(b.tokens);
  summary.sentence_starts = std::move(b.sentence_starts);

  // The stored gold plan is whatever the extractor finds, mirroring the
  // IE-derived plans the model trains on; the generator log stays available
  // as an independent oracle.
  ContentPlan plan = extract_content_plan(t.table, summary);
  summary = mark_copy_targets(summary, plan, t.table);
  summary.validate(plan.length());

  out.example.table = std::move(t.table);
  out.example.summary = std::move(summary);
  out.example.plan = std::move(plan);
  return out;
}

inline DatasetExample generate_game(uint64_t seed, const CorpusConfig& cfg = {}) {
  return generate_game_with_log(seed, cfg).example;
}

inline std::vector<DatasetExample> generate_corpus(int games, uint64_t seed,
                                                   const CorpusConfig& cfg = {}) {
  std::vector<DatasetExample> out;
  out.reserve(static_cast<size_t>(games));
  for (int i = 0; i < games; ++i)
    out.push_back(generate_game(Rng::mix(seed, static_cast<uint64_t>(i)), cfg));
  return out;
}

}  // namespace planwrite
