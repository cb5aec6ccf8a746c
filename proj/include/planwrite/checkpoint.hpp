#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "planwrite/model.hpp"
#include "planwrite/vocab.hpp"

namespace planwrite {

// Binary checkpoint: magic + version header (width, copy mode, ablation
// flags, vocabulary sizes, scalar kind), the vocabulary itself guarded by
// an FNV-1a hash, corpus length statistics used to bound beam search, then
// the named parameter tensors in canonical order. Little-endian throughout.
namespace ckpt_detail {

constexpr char kMagic[4] = {'P', 'W', 'C', 'K'};
constexpr uint32_t kVersion = 1;

inline uint64_t fnv1a(const std::string& bytes) {
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  check(in.good(), "checkpoint: truncated file");
  return v;
}

inline void put_string(std::ostream& out, const std::string& s) {
  put<uint32_t>(out, static_cast<uint32_t>(s.size()));
  out.write(s.data(), static_cast<long>(s.size()));
}

inline std::string get_string(std::istream& in) {
  uint32_t len = get<uint32_t>(in);
  std::string s(len, '\0');
  in.read(s.data(), static_cast<long>(len));
  check(in.good(), "checkpoint: truncated string");
  return s;
}

inline std::string serialize_vocab(const Vocabulary& v) {
  std::ostringstream os;
  for (const SymbolTable* t :
       {&v.type_vocab, &v.entity_vocab, &v.value_vocab, &v.side_vocab, &v.word_vocab}) {
    put<uint32_t>(os, static_cast<uint32_t>(t->size()));
    for (const auto& s : t->items()) put_string(os, s);
  }
  return os.str();
}

inline Vocabulary deserialize_vocab(const std::string& bytes) {
  std::istringstream is(bytes);
  Vocabulary v;
  for (SymbolTable* t :
       {&v.type_vocab, &v.entity_vocab, &v.value_vocab, &v.side_vocab, &v.word_vocab}) {
    uint32_t n = get<uint32_t>(is);
    for (uint32_t i = 0; i < n; ++i) t->add(get_string(is));
  }
  return v;
}

}  // namespace ckpt_detail

template <typename T>
struct Checkpoint {
  ModelParams<T> params;
  Vocabulary vocab;
  double avg_plan_len = 0;
  double avg_summary_len = 0;
};

template <typename T>
void save_checkpoint(const std::string& path, const Checkpoint<T>& ck) {
  namespace d = ckpt_detail;
  std::ofstream out(path, std::ios::binary);
  check(out.good(), "checkpoint: cannot open " + path + " for writing");
  out.write(d::kMagic, 4);
  d::put<uint32_t>(out, d::kVersion);
  d::put<uint8_t>(out, static_cast<uint8_t>(sizeof(T)));
  const ModelConfig& c = ck.params.cfg;
  d::put<int32_t>(out, c.hidden);
  d::put<uint8_t>(out, c.copy == CopyMode::Joint ? 1 : 0);
  d::put<uint8_t>(out, c.use_gate ? 1 : 0);
  d::put<uint8_t>(out, c.use_planner ? 1 : 0);
  for (int v : {c.type_count, c.entity_count, c.value_count, c.side_count, c.word_count})
    d::put<int32_t>(out, v);
  d::put<double>(out, ck.avg_plan_len);
  d::put<double>(out, ck.avg_summary_len);

  const std::string vb = d::serialize_vocab(ck.vocab);
  d::put<uint64_t>(out, d::fnv1a(vb));
  d::put_string(out, vb);

  uint32_t count = 0;
  ck.params.visit([&](const char*, const Tensor<T>&) { ++count; });
  d::put<uint32_t>(out, count);
  ck.params.visit([&](const char* name, const Tensor<T>& t) {
    d::put_string(out, name);
    d::put<uint8_t>(out, static_cast<uint8_t>(t.ndim()));
    for (int e : t.shape) d::put<int32_t>(out, e);
    out.write(reinterpret_cast<const char*>(t.data.data()),
              static_cast<long>(t.data.size() * sizeof(T)));
  });
  check(out.good(), "checkpoint: write failed for " + path);
}

template <typename T>
Checkpoint<T> load_checkpoint(const std::string& path) {
  namespace d = ckpt_detail;
  std::ifstream in(path, std::ios::binary);
  check(in.good(), "checkpoint: cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  check(in.good() && std::memcmp(magic, d::kMagic, 4) == 0, "checkpoint: bad magic");
  check(d::get<uint32_t>(in) == d::kVersion, "checkpoint: unsupported version");
  check(d::get<uint8_t>(in) == sizeof(T), "checkpoint: scalar width mismatch");

  Checkpoint<T> ck;
  ModelConfig c;
  c.hidden = d::get<int32_t>(in);
  c.copy = d::get<uint8_t>(in) == 1 ? CopyMode::Joint : CopyMode::Conditional;
  c.use_gate = d::get<uint8_t>(in) == 1;
  c.use_planner = d::get<uint8_t>(in) == 1;
  c.type_count = d::get<int32_t>(in);
  c.entity_count = d::get<int32_t>(in);
  c.value_count = d::get<int32_t>(in);
  c.side_count = d::get<int32_t>(in);
  c.word_count = d::get<int32_t>(in);
  ck.avg_plan_len = d::get<double>(in);
  ck.avg_summary_len = d::get<double>(in);

  const uint64_t want_hash = d::get<uint64_t>(in);
  const std::string vb = d::get_string(in);
  check(d::fnv1a(vb) == want_hash, "checkpoint: vocab hash mismatch");
  ck.vocab = d::deserialize_vocab(vb);
  check(ck.vocab.type_vocab.size() == c.type_count &&
            ck.vocab.entity_vocab.size() == c.entity_count &&
            ck.vocab.value_vocab.size() == c.value_count &&
            ck.vocab.side_vocab.size() == c.side_count &&
            ck.vocab.word_vocab.size() == c.word_count,
        "checkpoint: vocab sizes disagree with header");

  ck.params = ModelParams<T>::init(c, 0);
  uint32_t count = d::get<uint32_t>(in);
  uint32_t seen = 0;
  ck.params.visit([&](const char* name, Tensor<T>& t) {
    check(seen < count, "checkpoint: missing parameter tensors");
    ++seen;
    const std::string stored = d::get_string(in);
    check(stored == name, "checkpoint: parameter order mismatch at " + stored);
    const int nd = d::get<uint8_t>(in);
    std::vector<int> shape;
    for (int i = 0; i < nd; ++i) shape.push_back(d::get<int32_t>(in));
    check(shape == t.shape, std::string("checkpoint: shape mismatch for ") + name);
    in.read(reinterpret_cast<char*>(t.data.data()),
            static_cast<long>(t.data.size() * sizeof(T)));
    check(in.good(), std::string("checkpoint: truncated tensor ") + name);
  });
  check(seen == count, "checkpoint: extra parameter tensors");
  return ck;
}

}  // namespace planwrite
