#pragma once

#include <algorithm>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "planwrite/tensor.hpp"

namespace planwrite {

using num::check;

// Reserved symbols.
inline constexpr const char* kUnk = "<unk>";
inline constexpr const char* kBos = "<s>";
inline constexpr const char* kEos = "</s>";
inline constexpr const char* kEop = "<eop>";

// Record types with name-introduction semantics: these carry the surface
// forms an entity is mentioned by.
inline constexpr const char* kFirstName = "FIRST_NAME";
inline constexpr const char* kSecondName = "SECOND_NAME";
inline constexpr const char* kTeamCity = "TEAM-CITY";
inline constexpr const char* kTeamName = "TEAM-NAME";

enum class Side { Home, Visiting };

inline char side_char(Side s) { return s == Side::Home ? 'H' : 'V'; }

inline Side parse_side(const std::string& s) {
  if (s == "H") return Side::Home;
  if (s == "V") return Side::Visiting;
  throw std::runtime_error("record: side must be H or V, got '" + s + "'");
}

// One database cell: (type, entity, value, home/visiting).
struct Record {
  std::string type;
  std::string entity;
  std::string value;
  Side side = Side::Home;

  bool operator==(const Record& o) const {
    return type == o.type && entity == o.entity && value == o.value && side == o.side;
  }
};

inline void validate_record(const Record& r) {
  check(!r.type.empty() && !r.entity.empty() && !r.value.empty(),
        "record: empty field");
}

// An unordered set of records with a positional entity index. Positions are
// stable so plans can point into the table.
class RecordTable {
 public:
  RecordTable() = default;

  explicit RecordTable(std::vector<Record> records) : records_(std::move(records)) {
    for (size_t i = 0; i < records_.size(); ++i) {
      validate_record(records_[i]);
      entity_index_[records_[i].entity].push_back(static_cast<int>(i));
    }
  }

  int size() const { return static_cast<int>(records_.size()); }
  const Record& rec(int i) const { return records_[static_cast<size_t>(i)]; }
  const std::vector<Record>& records() const { return records_; }

  const std::vector<int>* positions_of(const std::string& entity) const {
    auto it = entity_index_.find(entity);
    return it == entity_index_.end() ? nullptr : &it->second;
  }

  // All record positions with the given entity and value.
  std::vector<int> find(const std::string& entity, const std::string& value) const {
    std::vector<int> out;
    if (const auto* pos = positions_of(entity)) {
      for (int i : *pos)
        if (records_[static_cast<size_t>(i)].value == value) out.push_back(i);
    }
    return out;
  }

  // First position matching all three keys, -1 if absent.
  int find_typed(const std::string& entity, const std::string& value,
                 const std::string& type) const {
    if (const auto* pos = positions_of(entity)) {
      for (int i : *pos) {
        const Record& r = records_[static_cast<size_t>(i)];
        if (r.value == value && r.type == type) return i;
      }
    }
    return -1;
  }

  bool contains(const Record& r) const {
    int i = find_typed(r.entity, r.value, r.type);
    return i >= 0 && records_[static_cast<size_t>(i)].side == r.side;
  }

  // Entities in first-appearance order.
  std::vector<std::string> entities() const {
    std::vector<std::string> out;
    for (const auto& r : records_) {
      if (std::find(out.begin(), out.end(), r.entity) == out.end()) out.push_back(r.entity);
    }
    return out;
  }

  bool operator==(const RecordTable& o) const { return records_ == o.records_; }

 private:
  std::vector<Record> records_;
  std::map<std::string, std::vector<int>> entity_index_;
};

// Ordered sequence of pointers into a record table. The end-of-plan marker
// is implicit and never stored. Every constructor path validates in O(|z|).
class ContentPlan {
 public:
  ContentPlan() = default;

  ContentPlan(std::vector<int> steps, int table_size) : steps_(std::move(steps)) {
    for (int s : steps_)
      check(s >= 0 && s < table_size, "content plan: step out of table range");
  }

  const std::vector<int>& steps() const { return steps_; }
  int length() const { return static_cast<int>(steps_.size()); }
  bool empty() const { return steps_.empty(); }
  int step(int k) const { return steps_[static_cast<size_t>(k)]; }

  bool operator==(const ContentPlan& o) const { return steps_ == o.steps_; }

 private:
  std::vector<int> steps_;
};

// Per-token copy supervision: either not copied, or copied from plan step k.
struct CopyLabel {
  int step = -1;
  bool copied() const { return step >= 0; }
  bool operator==(const CopyLabel& o) const { return step == o.step; }
};

// Tokenized output document with sentence boundaries and copy labels.
struct Summary {
  std::vector<std::string> tokens;
  std::vector<int> sentence_starts;      // first element is 0
  std::vector<CopyLabel> copy_labels;    // empty, or one per token

  int token_count() const { return static_cast<int>(tokens.size()); }
  int sentence_count() const { return static_cast<int>(sentence_starts.size()); }

  // [start, end) token range for sentence s.
  std::pair<int, int> sentence_range(int s) const {
    int start = sentence_starts[static_cast<size_t>(s)];
    int end = s + 1 < sentence_count() ? sentence_starts[static_cast<size_t>(s) + 1]
                                       : token_count();
    return {start, end};
  }

  int sentence_of(int pos) const {
    int s = 0;
    while (s + 1 < sentence_count() && sentence_starts[static_cast<size_t>(s) + 1] <= pos) ++s;
    return s;
  }

  void validate(int plan_length) const {
    check(sentence_starts.empty() || sentence_starts.front() == 0,
          "summary: first sentence must start at 0");
    for (size_t i = 0; i < sentence_starts.size(); ++i) {
      check(sentence_starts[i] >= 0 && sentence_starts[i] < token_count(),
            "summary: sentence offset out of bounds");
      if (i > 0)
        check(sentence_starts[i] > sentence_starts[i - 1],
              "summary: sentence offsets not increasing");
    }
    if (!copy_labels.empty()) {
      check(copy_labels.size() == tokens.size(), "summary: copy label count mismatch");
      for (const auto& l : copy_labels)
        check(l.step < plan_length, "summary: copy label step out of plan range");
    }
  }

  bool operator==(const Summary& o) const {
    return tokens == o.tokens && sentence_starts == o.sentence_starts &&
           copy_labels == o.copy_labels;
  }
};

// One corpus entry: table, reference summary, gold plan.
struct DatasetExample {
  RecordTable table;
  Summary summary;
  ContentPlan plan;

  bool operator==(const DatasetExample& o) const {
    return table == o.table && summary == o.summary && plan == o.plan;
  }
};

}  // namespace planwrite
