#pragma once

#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "planwrite/data.hpp"

namespace planwrite {

// Best-effort loader for box-score JSON in the RotoWire layout: an array of
// games, each with "box_score" (stat name -> {player index -> value}),
// "home_line"/"vis_line" (team stat name -> value), "home_name"/"vis_name",
// and a tokenized "summary". Produces tables plus summaries; plans and copy
// labels are filled in afterwards by the extractor.
//
// Field mapping (see README): player stats PTS/REB/AST/FGM/FGA plus
// FIRST_NAME/SECOND_NAME pass through; team line keys TEAM-PTS, TEAM-WINS,
// TEAM-LOSSES, TEAM-FG_PCT, TEAM-REB, TEAM-AST map onto this project's
// TEAM-* types; "N/A" values are skipped.
inline std::vector<DatasetExample> load_rotowire(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  check(in.good(), "load_rotowire: cannot open " + path);
  nlohmann::json games = nlohmann::json::parse(in);
  check(games.is_array(), "load_rotowire: top-level array expected");

  static const std::map<std::string, std::string> player_stats = {
      {"PTS", "PTS"}, {"REB", "REB"}, {"AST", "AST"}, {"FGM", "FGM"}, {"FGA", "FGA"}};
  static const std::map<std::string, std::string> team_stats = {
      {"TEAM-PTS", "TEAM-PTS"},       {"TEAM-WINS", "TEAM-WIN"},
      {"TEAM-LOSSES", "TEAM-LOSS"},   {"TEAM-FG_PCT", "TEAM-FG_PCT"},
      {"TEAM-REB", "TEAM-REB"},       {"TEAM-AST", "TEAM-AST"}};

  std::vector<DatasetExample> out;
  for (const auto& g : games) {
    std::vector<Record> recs;

    auto team = [&](const char* line_key, const char* name_key, const char* city_key,
                    Side side) {
      if (!g.contains(name_key)) return;
      const std::string name = g.at(name_key).get<std::string>();
      if (g.contains(city_key))
        recs.push_back({kTeamCity, name, g.at(city_key).get<std::string>(), side});
      recs.push_back({kTeamName, name, name, side});
      if (!g.contains(line_key)) return;
      for (const auto& [key, mapped] : team_stats) {
        if (!g.at(line_key).contains(key)) continue;
        const auto& v = g.at(line_key).at(key);
        std::string value = v.is_string() ? v.get<std::string>() : v.dump();
        if (value != "N/A") recs.push_back({mapped, name, value, side});
      }
    };
    team("home_line", "home_name", "home_city", Side::Home);
    team("vis_line", "vis_name", "vis_city", Side::Visiting);

    if (g.contains("box_score")) {
      const auto& box = g.at("box_score");
      check(box.contains("FIRST_NAME") && box.contains("SECOND_NAME"),
            "load_rotowire: box_score needs FIRST_NAME/SECOND_NAME");
      const std::string home_city =
          g.contains("home_city") ? g.at("home_city").get<std::string>() : "";
      // ordered map keeps player index order deterministic
      std::map<int, std::string> players;
      for (const auto& [idx, first] : box.at("FIRST_NAME").items())
        players[std::stoi(idx)] = first.get<std::string>() + "_" +
                                  box.at("SECOND_NAME").at(idx).get<std::string>();
      for (const auto& [idx, entity] : players) {
        const std::string key = std::to_string(idx);
        Side side = Side::Home;
        if (box.contains("TEAM_CITY"))
          side = box.at("TEAM_CITY").at(key).get<std::string>() == home_city
                     ? Side::Home
                     : Side::Visiting;
        recs.push_back({kFirstName, entity, box.at("FIRST_NAME").at(key).get<std::string>(),
                        side});
        recs.push_back({kSecondName, entity,
                        box.at("SECOND_NAME").at(key).get<std::string>(), side});
        for (const auto& [stat, mapped] : player_stats) {
          if (!box.contains(stat) || !box.at(stat).contains(key)) continue;
          const auto& v = box.at(stat).at(key);
          std::string value = v.is_string() ? v.get<std::string>() : v.dump();
          if (value != "N/A") recs.push_back({mapped, entity, value, side});
        }
      }
    }

    DatasetExample ex;
    ex.table = RecordTable(std::move(recs));
    if (g.contains("summary")) {
      ex.summary.tokens = g.at("summary").get<std::vector<std::string>>();
      ex.summary.sentence_starts.push_back(0);
      for (size_t i = 0; i + 1 < ex.summary.tokens.size(); ++i) {
        const std::string& t = ex.summary.tokens[i];
        if (t == "." || t == "!" || t == "?")
          ex.summary.sentence_starts.push_back(static_cast<int>(i) + 1);
      }
    }
    out.push_back(std::move(ex));
  }
  return out;
}

}  // namespace planwrite
