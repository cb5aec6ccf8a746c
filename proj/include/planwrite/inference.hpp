#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "planwrite/beam.hpp"
#include "planwrite/model.hpp"

namespace planwrite {

struct GenerationConfig {
  int beam_width = 5;
  int max_plan_len = 40;
  int max_summary_len = 160;
};

// Output token space for copy-aware decoding: vocabulary words plus plan
// values not in the vocabulary. Each token knows which plan steps can copy
// it.
struct ExtendedVocab {
  const Vocabulary* vocab = nullptr;
  std::vector<std::string> oov;                 // plan-only value strings
  std::vector<std::vector<int>> sources;        // extended id -> plan steps

  int size() const { return vocab->word_vocab.size() + static_cast<int>(oov.size()); }

  std::string render(int id) const {
    const int v = vocab->word_vocab.size();
    return id < v ? vocab->word_vocab.symbol(id) : oov[static_cast<size_t>(id - v)];
  }

  static ExtendedVocab build(const Vocabulary& vocab, const ContentPlan& plan,
                             const RecordTable& table) {
    ExtendedVocab ev;
    ev.vocab = &vocab;
    ev.sources.assign(static_cast<size_t>(vocab.word_vocab.size()), {});
    std::map<std::string, int> oov_ids;
    for (int k = 0; k < plan.length(); ++k) {
      const std::string& value = table.rec(plan.step(k)).value;
      int wid = vocab.word_vocab.id_of(value);
      if (wid >= 0) {
        ev.sources[static_cast<size_t>(wid)].push_back(k);
      } else {
        auto it = oov_ids.find(value);
        if (it == oov_ids.end()) {
          it = oov_ids.emplace(value, vocab.word_vocab.size() +
                                          static_cast<int>(ev.oov.size())).first;
          ev.oov.push_back(value);
          ev.sources.push_back({});
        }
        ev.sources[static_cast<size_t>(it->second)].push_back(k);
      }
    }
    return ev;
  }
};

// Marginal token distribution p(y) = sum_u p(y, u) over the extended
// vocabulary, computed from forward values.
template <typename T>
std::vector<double> marginal_token_probs(CopyMode mode, const ExtendedVocab& ev,
                                         const Tensor<T>& gen_probs_or_union,
                                         const Tensor<T>& beta, double copy_gate) {
  const int v = ev.vocab->word_vocab.size();
  std::vector<double> out(static_cast<size_t>(ev.size()), 0.0);
  if (mode == CopyMode::Conditional) {
    for (int w = 0; w < v; ++w)
      out[static_cast<size_t>(w)] =
          (1.0 - copy_gate) * static_cast<double>(gen_probs_or_union.at(w));
    for (int w = 0; w < ev.size(); ++w) {
      double mass = 0;
      for (int k : ev.sources[static_cast<size_t>(w)]) mass += static_cast<double>(beta.at(k));
      out[static_cast<size_t>(w)] += copy_gate * mass;
    }
  } else {
    for (int w = 0; w < v; ++w)
      out[static_cast<size_t>(w)] = static_cast<double>(gen_probs_or_union.at(w));
    for (int w = 0; w < ev.size(); ++w)
      for (int k : ev.sources[static_cast<size_t>(w)])
        out[static_cast<size_t>(w)] += static_cast<double>(gen_probs_or_union.at(v + k));
  }
  return out;
}

namespace infer_detail {

// Per-table values reused across beam steps.
template <typename T>
struct TableContext {
  Tensor<T> rcs;  // [R x n]
  int rows = 0;
};

template <typename T>
TableContext<T> make_table_context(const ModelParams<T>& params, const Vocabulary& vocab,
                                   const RecordTable& table) {
  Graph<T> g;
  auto bound = BoundParams<T>::bind(g, params);
  TableNodes<T> tn = encode_table(g, bound, params.cfg, table_feature_ids(table, vocab));
  return {g.value(tn.rcs), tn.rows};
}

template <typename T>
struct PlanBeamState {
  num::LstmState<T> lstm;
  bool started = false;
};

template <typename T>
struct TextBeamState {
  num::LstmState<T> l0, l1;
  Tensor<T> attentional;
};

}  // namespace infer_detail

// Beam search over record pointers; the end-of-plan symbol is index R. The
// plan is forced non-empty (the end slot is masked on the first step) and
// truncated at max_plan_len.
template <typename T>
BeamHypothesis<infer_detail::PlanBeamState<T>> search_plan(
    const ModelParams<T>& params, const infer_detail::TableContext<T>& ctx,
    const GenerationConfig& gen) {
  using State = infer_detail::PlanBeamState<T>;
  const int n = params.cfg.hidden;
  const int rows = ctx.rows;

  auto step = [&](const State& s, int prev) -> BeamStepResult<State> {
    Graph<T> g;
    auto bound = BoundParams<T>::bind(g, params);
    TableNodes<T> tn;
    tn.rcs = g.input(ctx.rcs);
    tn.rows = rows;
    num::LstmNodes<T> state_nodes;
    typename Graph<T>::Id input;
    if (!s.started) {
      state_nodes = plan_init(g, tn);
      input = bound.plan_start_vec;
    } else {
      state_nodes = {g.input(s.lstm.hidden), g.input(s.lstm.cell)};
      input = g.row(tn.rcs, prev);
    }
    auto next = num::lstm_step(g, bound.planner_lstm(), input, state_nodes);
    auto probs = plan_step_distribution(g, bound, tn, next.hidden);
    const Tensor<T>& p = g.value(probs);

    BeamStepResult<State> out;
    out.state.started = true;
    out.state.lstm = {g.value(next.hidden), g.value(next.cell)};
    out.log_probs.resize(static_cast<size_t>(rows) + 1);
    for (int i = 0; i <= rows; ++i) {
      double pv = static_cast<double>(p.at(i));
      // A plan must select at least one record before ending.
      if (i == rows && !s.started)
        out.log_probs[static_cast<size_t>(i)] = -std::numeric_limits<double>::infinity();
      else
        out.log_probs[static_cast<size_t>(i)] = pv > 0 ? std::log(pv) : -1e9;
    }
    return out;
  };

  State start;
  start.lstm = num::LstmState<T>::zeros(n);
  return beam_search(step, start, gen.beam_width, gen.max_plan_len, rows);
}

// Beam search over the extended vocabulary given an encoded plan.
template <typename T>
BeamHypothesis<infer_detail::TextBeamState<T>> search_text(
    const ModelParams<T>& params, const Vocabulary& vocab,
    const infer_detail::TableContext<T>& ctx, const ContentPlan& plan,
    const ExtendedVocab& ev, const GenerationConfig& gen) {
  using State = infer_detail::TextBeamState<T>;
  const int n = params.cfg.hidden;

  // Encode the plan once; decoder init states and plan vectors are fixed
  // for the whole search.
  Tensor<T> plan_vectors;
  State init;
  {
    Graph<T> g;
    auto bound = BoundParams<T>::bind(g, params);
    TableNodes<T> tn;
    tn.rcs = g.input(ctx.rcs);
    tn.rows = ctx.rows;
    PlanEncoding<T> enc = encode_plan(g, bound, tn, plan);
    plan_vectors = g.value(enc.vectors);
    init.l0 = {g.value(enc.dec_init0.hidden), g.value(enc.dec_init0.cell)};
    init.l1 = {g.value(enc.dec_init1.hidden), g.value(enc.dec_init1.cell)};
    init.attentional = Tensor<T>({n});
  }

  const int vocab_words = vocab.word_vocab.size();
  auto step = [&](const State& s, int prev) -> BeamStepResult<State> {
    // A generated extended token enters the next step as its vocabulary id,
    // UNK when it was a plan-only copy.
    int prev_word = vocab.bos();
    if (prev >= 0) prev_word = prev < vocab_words ? prev : vocab.unk_word();

    Graph<T> g;
    auto bound = BoundParams<T>::bind(g, params);
    auto vectors = g.input(plan_vectors);
    DecoderNodes<T> nodes = {{g.input(s.l0.hidden), g.input(s.l0.cell)},
                             {g.input(s.l1.hidden), g.input(s.l1.cell)},
                             g.input(s.attentional)};
    auto out = decode_step(g, bound, vectors, nodes, prev_word);

    std::vector<double> marg;
    if (params.cfg.copy == CopyMode::Conditional) {
      auto p_gen = g.softmax(out.gen_logits);
      auto gate = copy_switch(g, bound, out.d_top);
      marg = marginal_token_probs(CopyMode::Conditional, ev, g.value(p_gen), g.value(out.beta),
                                  static_cast<double>(g.value(gate).at(0)));
    } else {
      auto uni = joint_union_probs(g, out.gen_logits, out.beta_scores);
      marg = marginal_token_probs(CopyMode::Joint, ev, g.value(uni), g.value(out.beta), 0.0);
    }

    BeamStepResult<State> res;
    res.state.l0 = {g.value(out.next.layer0.hidden), g.value(out.next.layer0.cell)};
    res.state.l1 = {g.value(out.next.layer1.hidden), g.value(out.next.layer1.cell)};
    res.state.attentional = g.value(out.next.attentional);
    res.log_probs.resize(marg.size());
    for (size_t i = 0; i < marg.size(); ++i)
      res.log_probs[i] = marg[i] > 0 ? std::log(marg[i]) : -1e9;
    return res;
  };

  return beam_search(step, init, gen.beam_width, gen.max_summary_len, vocab.eos());
}

struct GenerationOutput {
  ContentPlan plan;
  std::vector<std::string> tokens;
  double plan_logprob = 0;
  double text_logprob = 0;
};

// Two-stage generation: beam over record pointers, then beam over the
// extended vocabulary conditioned on the predicted plan. Passing
// oracle_plan skips the first stage.
template <typename T>
GenerationOutput generate(const ModelParams<T>& params, const Vocabulary& vocab,
                          const RecordTable& table, const GenerationConfig& gen,
                          const ContentPlan* oracle_plan = nullptr) {
  check(table.size() > 0, "generate: empty table");
  auto ctx = infer_detail::make_table_context(params, vocab, table);

  GenerationOutput out;
  if (oracle_plan != nullptr) {
    out.plan = *oracle_plan;
  } else if (!params.cfg.use_planner) {
    std::vector<int> steps(static_cast<size_t>(table.size()));
    for (int i = 0; i < table.size(); ++i) steps[static_cast<size_t>(i)] = i;
    out.plan = ContentPlan(std::move(steps), table.size());
  } else {
    auto hyp = search_plan(params, ctx, gen);
    out.plan = ContentPlan(hyp.tokens, table.size());
    out.plan_logprob = hyp.score;
  }
  check(!out.plan.empty(), "generate: empty plan");

  ExtendedVocab ev = ExtendedVocab::build(vocab, out.plan, table);
  auto hyp = search_text(params, vocab, ctx, out.plan, ev, gen);
  out.text_logprob = hyp.score;
  out.tokens.reserve(hyp.tokens.size());
  for (int id : hyp.tokens) out.tokens.push_back(ev.render(id));
  return out;
}

// Fraction of gold tokens (EOS included) predicted exactly under teacher
// forcing, comparing rendered token strings over the extended vocabulary.
template <typename T>
double teacher_forced_token_accuracy(const ModelParams<T>& params, const Vocabulary& vocab,
                                     const DatasetExample& ex) {
  check(!ex.plan.empty(), "token accuracy: empty plan");
  Graph<T> g;
  auto bound = BoundParams<T>::bind(g, params);
  TableNodes<T> tn = encode_table(g, bound, params.cfg, table_feature_ids(ex.table, vocab));
  PlanEncoding<T> enc = encode_plan(g, bound, tn, ex.plan);
  ExtendedVocab ev = ExtendedVocab::build(vocab, ex.plan, ex.table);

  DecoderNodes<T> state = {enc.dec_init0, enc.dec_init1,
                           g.input(Tensor<T>({params.cfg.hidden}))};
  std::vector<int> targets;
  for (const auto& tok : ex.summary.tokens) targets.push_back(vocab.word_or_unk(tok));
  targets.push_back(vocab.eos());

  int hits = 0;
  for (size_t t = 0; t < targets.size(); ++t) {
    const int prev = t == 0 ? vocab.bos() : targets[t - 1];
    auto step = decode_step(g, bound, enc.vectors, state, prev);
    state = step.next;
    std::vector<double> marg;
    if (params.cfg.copy == CopyMode::Conditional) {
      auto p_gen = g.softmax(step.gen_logits);
      auto gate = copy_switch(g, bound, step.d_top);
      marg = marginal_token_probs(CopyMode::Conditional, ev, g.value(p_gen),
                                  g.value(step.beta),
                                  static_cast<double>(g.value(gate).at(0)));
    } else {
      auto uni = joint_union_probs(g, step.gen_logits, step.beta_scores);
      marg = marginal_token_probs(CopyMode::Joint, ev, g.value(uni), g.value(step.beta), 0.0);
    }
    int argmax = 0;
    for (size_t i = 1; i < marg.size(); ++i)
      if (marg[i] > marg[static_cast<size_t>(argmax)]) argmax = static_cast<int>(i);
    const std::string predicted = ev.render(argmax);
    const std::string gold = t < ex.summary.tokens.size()
                                 ? ex.summary.tokens[t]
                                 : std::string(kEos);
    if (predicted == gold) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(targets.size());
}

}  // namespace planwrite
