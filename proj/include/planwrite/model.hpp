#pragma once

#include <map>
#include <string>
#include <vector>

#include "planwrite/data.hpp"
#include "planwrite/graph.hpp"
#include "planwrite/lstm.hpp"
#include "planwrite/rng.hpp"
#include "planwrite/vocab.hpp"

namespace planwrite {

using num::BiLstmNodes;
using num::Graph;
using num::LstmNodes;
using num::LstmWeightIds;
using num::Tensor;

enum class CopyMode { Joint, Conditional };

inline const char* copy_mode_name(CopyMode m) {
  return m == CopyMode::Joint ? "joint" : "conditional";
}

inline CopyMode parse_copy_mode(const std::string& s) {
  if (s == "joint") return CopyMode::Joint;
  if (s == "conditional") return CopyMode::Conditional;
  throw std::runtime_error("copy mode must be joint or conditional, got '" + s + "'");
}

struct ModelConfig {
  int hidden = 600;        // shared width across both stages
  int planner_layers = 1;  // single-layer pointer decoder
  int decoder_layers = 2;  // two-layer text decoder
  CopyMode copy = CopyMode::Conditional;
  bool use_gate = true;
  bool use_planner = true;
  int type_count = 0, entity_count = 0, value_count = 0, side_count = 0, word_count = 0;

  void validate() const {
    check(hidden > 0, "model config: hidden width must be positive");
    check(planner_layers == 1, "model config: planner is single-layer");
    check(decoder_layers == 2, "model config: text decoder is two-layer");
    check(type_count > 0 && entity_count > 0 && value_count > 0 && side_count > 0 &&
              word_count > 0,
          "model config: vocabulary sizes unset");
  }
};

// Field list shared by the parameter struct, the graph binding, and every
// iteration (init, optimizer state, serialization, gradient checks). Order
// here is the canonical parameter order.
#define PLANWRITE_PARAM_LIST(X)                                             \
  X(type_emb)      /* [types x n] */                                        \
  X(entity_emb)    /* [entities x n] */                                     \
  X(value_emb)     /* [values x n] */                                       \
  X(side_emb)      /* [sides x n] */                                        \
  X(record_w)      /* [n x 4n] record MLP */                                \
  X(record_b)      /* [n] */                                                \
  X(table_attn_w)  /* [n x n] table self-attention */                       \
  X(gate_w)        /* [n x 2n] selection gate */                            \
  X(planner_wx)    /* [4n x n] */                                           \
  X(planner_wh)    /* [4n x n] */                                           \
  X(planner_b)     /* [4n] */                                               \
  X(planner_score_w) /* [n x n] pointer scores */                           \
  X(plan_end_vec)  /* [n] scored like a record to end the plan */           \
  X(plan_start_vec) /* [n] first planner input */                           \
  X(planenc_fw_wx) /* [4n x n] plan encoder, forward */                     \
  X(planenc_fw_wh)                                                          \
  X(planenc_fw_b)                                                           \
  X(planenc_bw_wx) /* [4n x n] plan encoder, backward */                    \
  X(planenc_bw_wh)                                                          \
  X(planenc_bw_b)                                                           \
  X(planenc_proj)  /* [n x 2n] project bi-states to n */                    \
  X(dec_init_h0)   /* [n x 2n] decoder init from final encoder state */     \
  X(dec_init_c0)                                                            \
  X(dec_init_h1)                                                            \
  X(dec_init_c1)                                                            \
  X(dec0_wx)       /* [4n x 2n] input-fed first decoder layer */            \
  X(dec0_wh)                                                                \
  X(dec0_b)                                                                 \
  X(dec1_wx)       /* [4n x n] second decoder layer */                      \
  X(dec1_wh)                                                                \
  X(dec1_b)                                                                 \
  X(text_attn_w)   /* [n x n] plan attention, shared with copy scores */    \
  X(ctx_proj_w)    /* [n x 2n] attentional output */                        \
  X(out_w)         /* [words x n] */                                        \
  X(out_b)         /* [words] */                                            \
  X(copy_gate_w)   /* [n] copy switch */                                    \
  X(copy_gate_b)   /* [1] */                                                \
  X(word_emb)      /* [words x n] */

template <typename T>
struct ModelParams {
  ModelConfig cfg;

#define PW_DECL(f) Tensor<T> f;
  PLANWRITE_PARAM_LIST(PW_DECL)
#undef PW_DECL

  template <typename F>
  void visit(F&& fn) {
#define PW_VISIT(f) fn(#f, f);
    PLANWRITE_PARAM_LIST(PW_VISIT)
#undef PW_VISIT
  }

  template <typename F>
  void visit(F&& fn) const {
#define PW_VISIT(f) fn(#f, f);
    PLANWRITE_PARAM_LIST(PW_VISIT)
#undef PW_VISIT
  }

  long parameter_count() const {
    long n = 0;
    visit([&](const char*, const Tensor<T>& t) { n += t.size(); });
    return n;
  }

  // All weights uniform in (-0.1, 0.1).
  static ModelParams init(const ModelConfig& cfg, uint64_t seed) {
    cfg.validate();
    const int n = cfg.hidden;
    ModelParams p;
    p.cfg = cfg;
    p.type_emb = Tensor<T>({cfg.type_count, n});
    p.entity_emb = Tensor<T>({cfg.entity_count, n});
    p.value_emb = Tensor<T>({cfg.value_count, n});
    p.side_emb = Tensor<T>({cfg.side_count, n});
    p.record_w = Tensor<T>({n, 4 * n});
    p.record_b = Tensor<T>({n});
    p.table_attn_w = Tensor<T>({n, n});
    p.gate_w = Tensor<T>({n, 2 * n});
    p.planner_wx = Tensor<T>({4 * n, n});
    p.planner_wh = Tensor<T>({4 * n, n});
    p.planner_b = Tensor<T>({4 * n});
    p.planner_score_w = Tensor<T>({n, n});
    p.plan_end_vec = Tensor<T>({n});
    p.plan_start_vec = Tensor<T>({n});
    p.planenc_fw_wx = Tensor<T>({4 * n, n});
    p.planenc_fw_wh = Tensor<T>({4 * n, n});
    p.planenc_fw_b = Tensor<T>({4 * n});
    p.planenc_bw_wx = Tensor<T>({4 * n, n});
    p.planenc_bw_wh = Tensor<T>({4 * n, n});
    p.planenc_bw_b = Tensor<T>({4 * n});
    p.planenc_proj = Tensor<T>({n, 2 * n});
    p.dec_init_h0 = Tensor<T>({n, 2 * n});
    p.dec_init_c0 = Tensor<T>({n, 2 * n});
    p.dec_init_h1 = Tensor<T>({n, 2 * n});
    p.dec_init_c1 = Tensor<T>({n, 2 * n});
    p.dec0_wx = Tensor<T>({4 * n, 2 * n});
    p.dec0_wh = Tensor<T>({4 * n, n});
    p.dec0_b = Tensor<T>({4 * n});
    p.dec1_wx = Tensor<T>({4 * n, n});
    p.dec1_wh = Tensor<T>({4 * n, n});
    p.dec1_b = Tensor<T>({4 * n});
    p.text_attn_w = Tensor<T>({n, n});
    p.ctx_proj_w = Tensor<T>({n, 2 * n});
    p.out_w = Tensor<T>({cfg.word_count, n});
    p.out_b = Tensor<T>({cfg.word_count});
    p.copy_gate_w = Tensor<T>({n});
    p.copy_gate_b = Tensor<T>({1});
    p.word_emb = Tensor<T>({cfg.word_count, n});

    Rng rng(Rng::mix(seed, 0x7a3a));
    p.visit([&](const char*, Tensor<T>& t) {
      for (auto& v : t.data) v = static_cast<T>(rng.uniform_real(-0.1, 0.1));
    });
    return p;
  }
};

// Graph bindings for one forward pass; parameters are held by view, so the
// ModelParams must outlive the graph.
template <typename T>
struct BoundParams {
  using Id = typename Graph<T>::Id;
#define PW_DECL_ID(f) Id f = -1;
  PLANWRITE_PARAM_LIST(PW_DECL_ID)
#undef PW_DECL_ID
  std::vector<Id> ordered;  // canonical parameter order

  static BoundParams bind(Graph<T>& g, const ModelParams<T>& p) {
    BoundParams b;
#define PW_BIND(f)       \
  b.f = g.param(p.f);    \
  b.ordered.push_back(b.f);
    PLANWRITE_PARAM_LIST(PW_BIND)
#undef PW_BIND
    return b;
  }

  LstmWeightIds<T> planner_lstm() const { return {planner_wx, planner_wh, planner_b}; }
  LstmWeightIds<T> planenc_fw() const { return {planenc_fw_wx, planenc_fw_wh, planenc_fw_b}; }
  LstmWeightIds<T> planenc_bw() const { return {planenc_bw_wx, planenc_bw_wh, planenc_bw_b}; }
  LstmWeightIds<T> dec0() const { return {dec0_wx, dec0_wh, dec0_b}; }
  LstmWeightIds<T> dec1() const { return {dec1_wx, dec1_wh, dec1_b}; }
};

// Record feature ids for a whole table, in table order.
inline std::array<std::vector<int>, 4> table_feature_ids(const RecordTable& table,
                                                         const Vocabulary& vocab) {
  std::array<std::vector<int>, 4> ids;
  for (const Record& r : table.records()) {
    auto f = featurize_record(r, vocab);
    for (int k = 0; k < 4; ++k) ids[static_cast<size_t>(k)].push_back(f[static_cast<size_t>(k)]);
  }
  return ids;
}

template <typename T>
struct TableNodes {
  typename Graph<T>::Id raw = -1;    // [R x n]
  typename Graph<T>::Id rcs = -1;    // [R x n] gated record vectors
  typename Graph<T>::Id alpha = -1;  // [R x R], rows normalized over k != j
  typename Graph<T>::Id gates = -1;  // [R x n]
  int rows = 0;
};

// relu(W_r [four embeddings] + b_r), one row per record.
template <typename T>
typename Graph<T>::Id encode_records(Graph<T>& g, const BoundParams<T>& b,
                                     const std::array<std::vector<int>, 4>& ids) {
  auto cat = g.concat_cols({g.embed_rows(b.type_emb, ids[0]),
                            g.embed_rows(b.entity_emb, ids[1]),
                            g.embed_rows(b.value_emb, ids[2]),
                            g.embed_rows(b.side_emb, ids[3])});
  return g.relu(g.add(g.matmul(cat, g.transpose(b.record_w)), b.record_b));
}

// Table self-attention (normalized over the other records), then the
// sigmoid gate: rcs = g ⊙ r. With the gate ablated, rcs aliases raw
// bit-exactly.
template <typename T>
TableNodes<T> encode_table(Graph<T>& g, const BoundParams<T>& b, const ModelConfig& cfg,
                           const std::array<std::vector<int>, 4>& ids) {
  TableNodes<T> t;
  t.rows = static_cast<int>(ids[0].size());
  t.raw = encode_records(g, b, ids);
  if (!cfg.use_gate) {
    t.rcs = t.raw;
    return t;
  }
  check(t.rows >= 2, "attention needs a context");
  auto scores = g.matmul(g.matmul(t.raw, b.table_attn_w), g.transpose(t.raw));
  std::vector<uint8_t> mask(static_cast<size_t>(t.rows) * t.rows, 1);
  for (int j = 0; j < t.rows; ++j) mask[static_cast<size_t>(j) * t.rows + j] = 0;
  t.alpha = g.softmax_rows(scores, std::move(mask));
  auto ctx = g.matmul(t.alpha, t.raw);
  auto att = g.matmul(g.concat_cols({t.raw, ctx}), g.transpose(b.gate_w));
  t.gates = g.sigmoid(att);
  t.rcs = g.mul(t.gates, t.raw);
  return t;
}

// Planner initial state: hidden is the mean of the gated record vectors,
// cell starts at zero.
template <typename T>
LstmNodes<T> plan_init(Graph<T>& g, const TableNodes<T>& table) {
  const int n = g.value(table.rcs).cols();
  return {g.mean_rows(table.rcs), g.input(Tensor<T>({n}))};
}

// Pointer distribution over the table's records plus the end-of-plan slot
// (index R). Scores are h' W_c r_cs, with the end vector scored like a
// record.
template <typename T>
typename Graph<T>::Id plan_step_distribution(Graph<T>& g, const BoundParams<T>& b,
                                             const TableNodes<T>& table,
                                             typename Graph<T>::Id hidden) {
  auto u = g.matmul(g.transpose(b.planner_score_w), hidden);  // [n]
  auto rec_scores = g.matmul(table.rcs, u);                   // [R]
  auto end_score = g.dot(b.plan_end_vec, u);                  // [1]
  return g.softmax(g.concat({rec_scores, end_score}));
}

template <typename T>
struct PlannerRollout {
  std::vector<typename Graph<T>::Id> step_probs;  // teacher-forced, [R+1] each
  typename Graph<T>::Id nll = -1;                 // scalar
};

// Teacher-forced planner pass over the gold plan including the end step.
// Optional per-step dropout masks apply to the LSTM inputs.
template <typename T>
PlannerRollout<T> planner_teacher_forced(Graph<T>& g, const BoundParams<T>& b,
                                         const TableNodes<T>& table, const ContentPlan& plan,
                                         const std::vector<Tensor<T>>* input_masks = nullptr) {
  PlannerRollout<T> out;
  LstmNodes<T> state = plan_init(g, table);
  typename Graph<T>::Id input = b.plan_start_vec;
  std::vector<typename Graph<T>::Id> log_terms;
  for (int k = 0; k <= plan.length(); ++k) {
    auto x = input;
    if (input_masks != nullptr)
      x = num::apply_dropout(g, x, &(*input_masks)[static_cast<size_t>(k)]);
    state = num::lstm_step(g, b.planner_lstm(), x, state);
    auto probs = plan_step_distribution(g, b, table, state.hidden);
    out.step_probs.push_back(probs);
    const int target = k < plan.length() ? plan.step(k) : table.rows;  // R = end slot
    log_terms.push_back(g.log_(g.gather(probs, {target})));
    if (k < plan.length()) input = g.row(table.rcs, plan.step(k));
  }
  out.nll = g.scale(g.sum(g.concat(log_terms)), T(-1));
  return out;
}

template <typename T>
struct PlanEncoding {
  typename Graph<T>::Id vectors = -1;  // [K x n] projected plan vectors e_k
  LstmNodes<T> dec_init0, dec_init1;   // decoder layer states
};

// Encode the plan by running the bidirectional LSTM over the selected
// record vectors, project positions to width n, and derive the decoder's
// initial states from the final encoder states.
template <typename T>
PlanEncoding<T> encode_plan(Graph<T>& g, const BoundParams<T>& b, const TableNodes<T>& table,
                            const ContentPlan& plan) {
  check(!plan.empty(), "encode_plan: empty plan");
  std::vector<typename Graph<T>::Id> seq;
  seq.reserve(static_cast<size_t>(plan.length()));
  for (int k = 0; k < plan.length(); ++k) seq.push_back(g.row(table.rcs, plan.step(k)));
  BiLstmNodes<T> enc = num::bilstm_encode(g, seq, b.planenc_fw(), b.planenc_bw());

  PlanEncoding<T> out;
  std::vector<typename Graph<T>::Id> projected;
  projected.reserve(enc.outputs.size());
  for (auto o : enc.outputs) projected.push_back(g.matmul(b.planenc_proj, o));
  out.vectors = g.stack_rows(projected);
  out.dec_init0 = {g.matmul(b.dec_init_h0, enc.final_hidden),
                   g.matmul(b.dec_init_c0, enc.final_cell)};
  out.dec_init1 = {g.matmul(b.dec_init_h1, enc.final_hidden),
                   g.matmul(b.dec_init_c1, enc.final_cell)};
  return out;
}

template <typename T>
struct DecoderNodes {
  LstmNodes<T> layer0, layer1;
  typename Graph<T>::Id attentional = -1;  // d_att, fed back as input
};

template <typename T>
struct DecodeStepOut {
  DecoderNodes<T> next;
  typename Graph<T>::Id beta_scores = -1;  // [K] pre-softmax, shared with copy
  typename Graph<T>::Id beta = -1;         // [K]
  typename Graph<T>::Id gen_logits = -1;   // [V]
  typename Graph<T>::Id d_top = -1;        // [n] top LSTM hidden
};

template <typename T>
struct DecodeDropout {
  const Tensor<T>* input = nullptr;     // on the input-fed x_t
  const Tensor<T>* between = nullptr;   // between decoder layers
  const Tensor<T>* output = nullptr;    // on d_att before the vocab logits
};

// One text-decoder step with input feeding: x = [embed(prev word); prev
// d_att], two LSTM layers, attention over plan vectors, attentional output,
// vocabulary logits.
template <typename T>
DecodeStepOut<T> decode_step(Graph<T>& g, const BoundParams<T>& b,
                             typename Graph<T>::Id plan_vectors, const DecoderNodes<T>& prev,
                             int prev_word_id, const DecodeDropout<T>& drop = {}) {
  auto emb = g.row(g.embed_rows(b.word_emb, {prev_word_id}), 0);
  auto x = g.concat({emb, prev.attentional});
  x = num::apply_dropout(g, x, drop.input);

  DecodeStepOut<T> out;
  out.next.layer0 = num::lstm_step(g, b.dec0(), x, prev.layer0);
  auto mid = num::apply_dropout(g, out.next.layer0.hidden, drop.between);
  out.next.layer1 = num::lstm_step(g, b.dec1(), mid, prev.layer1);
  out.d_top = out.next.layer1.hidden;

  out.beta_scores = g.matmul(plan_vectors, g.matmul(g.transpose(b.text_attn_w), out.d_top));
  out.beta = g.softmax(out.beta_scores);
  auto ctx = g.matmul(g.transpose(plan_vectors), out.beta);
  out.next.attentional = g.tanh_(g.matmul(b.ctx_proj_w, g.concat({out.d_top, ctx})));
  auto logits_in = num::apply_dropout(g, out.next.attentional, drop.output);
  out.gen_logits = g.add(g.matmul(b.out_w, logits_in), b.out_b);
  return out;
}

// Joint copy: one softmax over [vocabulary logits ; copy scores]. Slot V+k
// is the event "copy plan step k". With no copy slots this is exactly
// p_gen.
template <typename T>
typename Graph<T>::Id joint_union_probs(Graph<T>& g, typename Graph<T>::Id gen_logits,
                                        typename Graph<T>::Id copy_scores /* -1 if none */) {
  if (copy_scores < 0) return g.softmax(gen_logits);
  return g.softmax(g.concat({gen_logits, copy_scores}));
}

// Conditional copy switch p(u=1) = sigmoid(w_u . d_t + b_u).
template <typename T>
typename Graph<T>::Id copy_switch(Graph<T>& g, const BoundParams<T>& b,
                                  typename Graph<T>::Id d_top) {
  return g.sigmoid(g.add(g.dot(b.copy_gate_w, d_top), b.copy_gate_b));
}

// Plan steps whose record value equals the given token; the copy source set
// for both training and inference.
inline std::vector<int> copy_source_steps(const ContentPlan& plan, const RecordTable& table,
                                          const std::string& token) {
  std::vector<int> steps;
  for (int k = 0; k < plan.length(); ++k)
    if (table.rec(plan.step(k)).value == token) steps.push_back(k);
  return steps;
}

}  // namespace planwrite
