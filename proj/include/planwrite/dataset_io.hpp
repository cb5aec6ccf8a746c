#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "planwrite/data.hpp"

namespace planwrite {

// One JSON object per line:
//   {"table": [[type, entity, value, side], ...],
//    "summary": {"tokens": [...], "sentences": [start offsets]},
//    "plan": [record positions],
//    "copy_labels": [plan step or -1, one per token]}
inline nlohmann::json example_to_json(const DatasetExample& ex) {
  nlohmann::json j;
  j["table"] = nlohmann::json::array();
  for (const Record& r : ex.table.records())
    j["table"].push_back({r.type, r.entity, r.value, std::string(1, side_char(r.side))});
  j["summary"]["tokens"] = ex.summary.tokens;
  j["summary"]["sentences"] = ex.summary.sentence_starts;
  j["plan"] = ex.plan.steps();
  nlohmann::json labels = nlohmann::json::array();
  for (const CopyLabel& l : ex.summary.copy_labels) labels.push_back(l.step);
  j["copy_labels"] = std::move(labels);
  return j;
}

inline DatasetExample example_from_json(const nlohmann::json& j) {
  DatasetExample ex;
  std::vector<Record> recs;
  for (const auto& row : j.at("table")) {
    check(row.is_array() && row.size() == 4, "table record must have 4 fields");
    recs.push_back({row[0].get<std::string>(), row[1].get<std::string>(),
                    row[2].get<std::string>(), parse_side(row[3].get<std::string>())});
  }
  ex.table = RecordTable(std::move(recs));
  ex.summary.tokens = j.at("summary").at("tokens").get<std::vector<std::string>>();
  ex.summary.sentence_starts = j.at("summary").at("sentences").get<std::vector<int>>();
  ex.plan = ContentPlan(j.at("plan").get<std::vector<int>>(), ex.table.size());
  if (j.contains("copy_labels")) {
    for (int step : j.at("copy_labels").get<std::vector<int>>())
      ex.summary.copy_labels.push_back({step});
  }
  ex.summary.validate(ex.plan.length());
  return ex;
}

inline void save_dataset(const std::string& path, const std::vector<DatasetExample>& corpus) {
  std::ofstream out(path, std::ios::binary);
  check(out.good(), "save_dataset: cannot open " + path);
  for (const auto& ex : corpus) out << example_to_json(ex).dump() << "\n";
  check(out.good(), "save_dataset: write failed for " + path);
}

inline std::vector<DatasetExample> load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  check(in.good(), "load_dataset: cannot open " + path);
  std::vector<DatasetExample> corpus;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      corpus.push_back(example_from_json(nlohmann::json::parse(line)));
    } catch (const std::exception& e) {
      throw std::runtime_error(path + ": line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return corpus;
}

}  // namespace planwrite
