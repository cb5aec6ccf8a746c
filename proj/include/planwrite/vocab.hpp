#pragma once

#include <algorithm>
#include <array>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "planwrite/data.hpp"

namespace planwrite {

// Dense string <-> id table. Id 0 is whatever was added first (UNK for every
// table built by build_vocabulary).
class SymbolTable {
 public:
  int add(const std::string& s) {
    auto it = index_.find(s);
    if (it != index_.end()) return it->second;
    int id = static_cast<int>(items_.size());
    items_.push_back(s);
    index_.emplace(s, id);
    return id;
  }

  int id_of(const std::string& s) const {
    auto it = index_.find(s);
    return it == index_.end() ? -1 : it->second;
  }

  int id_or_unk(const std::string& s) const {
    int id = id_of(s);
    return id >= 0 ? id : id_of(kUnk);
  }

  const std::string& symbol(int id) const { return items_[static_cast<size_t>(id)]; }
  int size() const { return static_cast<int>(items_.size()); }
  const std::vector<std::string>& items() const { return items_; }

  bool operator==(const SymbolTable& o) const { return items_ == o.items_; }

 private:
  std::vector<std::string> items_;
  std::unordered_map<std::string, int> index_;
};

// Four feature vocabularies plus the output-word vocabulary.
struct Vocabulary {
  SymbolTable type_vocab, entity_vocab, value_vocab, side_vocab, word_vocab;

  int unk_word() const { return word_vocab.id_of(kUnk); }
  int bos() const { return word_vocab.id_of(kBos); }
  int eos() const { return word_vocab.id_of(kEos); }

  int word_or_unk(const std::string& w) const { return word_vocab.id_or_unk(w); }

  bool operator==(const Vocabulary& o) const {
    return type_vocab == o.type_vocab && entity_vocab == o.entity_vocab &&
           value_vocab == o.value_vocab && side_vocab == o.side_vocab &&
           word_vocab == o.word_vocab;
  }
};

// Feature vocabularies cover every observed feature value; summary words
// below min_count fall back to UNK. Ordering is deterministic: reserved
// symbols first, then frequency-descending with a lexicographic tie-break.
inline Vocabulary build_vocabulary(const std::vector<DatasetExample>& corpus, int min_count) {
  check(!corpus.empty(), "build_vocabulary: empty corpus");
  Vocabulary v;
  v.type_vocab.add(kUnk);
  v.entity_vocab.add(kUnk);
  v.value_vocab.add(kUnk);
  v.side_vocab.add(kUnk);
  v.word_vocab.add(kUnk);
  v.word_vocab.add(kBos);
  v.word_vocab.add(kEos);

  std::map<std::string, long> types, entities, values, words;
  for (const auto& ex : corpus) {
    for (const auto& r : ex.table.records()) {
      ++types[r.type];
      ++entities[r.entity];
      ++values[r.value];
    }
    for (const auto& t : ex.summary.tokens) ++words[t];
  }

  auto add_sorted = [](SymbolTable& table, const std::map<std::string, long>& counts,
                       long cutoff) {
    std::vector<std::pair<std::string, long>> items(counts.begin(), counts.end());
    std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    });
    for (const auto& [sym, cnt] : items)
      if (cnt >= cutoff) table.add(sym);
  };

  add_sorted(v.type_vocab, types, 1);
  add_sorted(v.entity_vocab, entities, 1);
  add_sorted(v.value_vocab, values, 1);
  v.side_vocab.add("H");
  v.side_vocab.add("V");
  add_sorted(v.word_vocab, words, std::max(1, min_count));
  return v;
}

// (type, entity, value, side) feature ids; unseen values map to UNK.
inline std::array<int, 4> featurize_record(const Record& r, const Vocabulary& v) {
  return {v.type_vocab.id_or_unk(r.type), v.entity_vocab.id_or_unk(r.entity),
          v.value_vocab.id_or_unk(r.value),
          v.side_vocab.id_or_unk(std::string(1, side_char(r.side)))};
}

}  // namespace planwrite
