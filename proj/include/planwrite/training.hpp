#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "planwrite/data.hpp"
#include "planwrite/extract.hpp"
#include "planwrite/log.hpp"
#include "planwrite/model.hpp"
#include "planwrite/rng.hpp"
#include "planwrite/vocab.hpp"

namespace planwrite {

struct TrainConfig {
  int epochs = 25;
  double lr = 0.15;
  double lr_decay = 0.97;      // applied when validation loss stops improving
  int batch_size = 5;
  double dropout = 0.3;
  int bptt_truncation = 100;
  uint64_t seed = 1;
  CopyMode copy = CopyMode::Conditional;
  bool no_gate = false;
  bool no_planner = false;
  double clip_norm = 5.0;      // 0 disables clipping
  double adagrad_accum_init = 0.1;
  int min_count = 1;
  double val_fraction = 0.1;   // used by the CLI when no val file is given
  int hidden = 600;

  void validate() const {
    check(lr > 0, "train config: lr must be positive");
    check(dropout >= 0 && dropout < 1, "train config: dropout must be in [0,1)");
    check(bptt_truncation >= 1, "train config: truncation must be >= 1");
    check(epochs >= 1 && batch_size >= 1, "train config: epochs/batch must be >= 1");
  }

  ModelConfig model_config(const Vocabulary& v) const {
    ModelConfig m;
    m.hidden = hidden;
    m.copy = copy;
    m.use_gate = !no_gate;
    m.use_planner = !no_planner;
    m.type_count = v.type_vocab.size();
    m.entity_count = v.entity_vocab.size();
    m.value_count = v.value_vocab.size();
    m.side_count = v.side_vocab.size();
    m.word_count = v.word_vocab.size();
    return m;
  }
};

// Consecutive [offset, length) spans of at most `truncation` tokens. Hidden
// state is carried across spans; gradient flow is cut at the boundaries.
inline std::vector<std::pair<int, int>> bptt_segments(int tokens, int truncation) {
  check(truncation >= 1, "bptt_segments: truncation must be >= 1");
  std::vector<std::pair<int, int>> out;
  for (int off = 0; off < tokens; off += truncation)
    out.emplace_back(off, std::min(truncation, tokens - off));
  if (tokens == 0) out.emplace_back(0, 0);
  return out;
}

template <typename T>
struct AdagradState {
  std::vector<Tensor<T>> acc;
  static constexpr double kEps = 1e-10;

  // accum_init > 0 bounds the first updates to lr * g / sqrt(accum_init),
  // which the 0.15 learning rate relies on.
  static AdagradState init(const ModelParams<T>& p, double accum_init = 0.0) {
    AdagradState s;
    p.visit([&](const char*, const Tensor<T>& t) {
      s.acc.push_back(Tensor<T>::filled(t.shape, static_cast<T>(accum_init)));
    });
    return s;
  }
};

// acc += g^2 ; p -= lr * g / (sqrt(acc) + eps)
template <typename T>
void adagrad_step(ModelParams<T>& params, const std::vector<Tensor<T>>& grads,
                  AdagradState<T>& state, double lr) {
  size_t i = 0;
  params.visit([&](const char* name, Tensor<T>& p) {
    const Tensor<T>& g = grads[i];
    Tensor<T>& a = state.acc[i];
    check(g.same_shape(p), std::string("adagrad: gradient shape mismatch for ") + name);
    for (int k = 0; k < p.size(); ++k) {
      const double gv = static_cast<double>(g.at(k));
      check(std::isfinite(gv), std::string("adagrad: non-finite gradient in ") + name);
      const double av = static_cast<double>(a.at(k)) + gv * gv;
      a.at(k) = static_cast<T>(av);
      p.at(k) = static_cast<T>(static_cast<double>(p.at(k)) -
                               lr * gv / (std::sqrt(av) + AdagradState<T>::kEps));
    }
    ++i;
  });
}

struct LossStats {
  double total = 0, plan_nll = 0, text_nll = 0;
  long clamped = 0;  // gold events whose log-probability had to be clamped
};

template <typename T>
struct GradSink {
  std::vector<Tensor<T>> grads;

  void reset(const ModelParams<T>& p) {
    grads.clear();
    p.visit([&](const char*, const Tensor<T>& t) { grads.emplace_back(t.shape); });
  }

  void accumulate(const Graph<T>& g, const BoundParams<T>& bound) {
    for (size_t i = 0; i < bound.ordered.size(); ++i) {
      Tensor<T> d = g.grad(bound.ordered[i]);
      for (int k = 0; k < d.size(); ++k) grads[i].at(k) += d.at(k);
    }
  }

  void scale(double s) {
    for (auto& t : grads)
      for (auto& v : t.data) v = static_cast<T>(static_cast<double>(v) * s);
  }

  double global_norm() const {
    double sq = 0;
    for (const auto& t : grads)
      for (const auto& v : t.data) sq += static_cast<double>(v) * static_cast<double>(v);
    return std::sqrt(sq);
  }
};

// Pre-drawn dropout masks for one example; identity when rate is zero.
template <typename T>
struct DropoutPlan {
  std::vector<Tensor<T>> planner_input;            // per plan step (incl. end)
  std::vector<Tensor<T>> dec_input, dec_between, dec_output;  // per token
  bool active = false;

  static DropoutPlan draw(double rate, int plan_steps, int tokens, int hidden, Rng& rng) {
    DropoutPlan d;
    if (rate <= 0) return d;
    d.active = true;
    for (int k = 0; k <= plan_steps; ++k)
      d.planner_input.push_back(num::draw_dropout_mask<T>({hidden}, rate, rng));
    for (int t = 0; t < tokens; ++t) {
      d.dec_input.push_back(num::draw_dropout_mask<T>({2 * hidden}, rate, rng));
      d.dec_between.push_back(num::draw_dropout_mask<T>({hidden}, rate, rng));
      d.dec_output.push_back(num::draw_dropout_mask<T>({hidden}, rate, rng));
    }
    return d;
  }
};

namespace train_detail {

// Value-level decoder state carried across truncation boundaries.
template <typename T>
struct CarriedState {
  num::LstmState<T> l0, l1;
  Tensor<T> attentional;
};

template <typename T>
DecoderNodes<T> to_nodes(Graph<T>& g, const CarriedState<T>& s) {
  return {{g.input(s.l0.hidden), g.input(s.l0.cell)},
          {g.input(s.l1.hidden), g.input(s.l1.cell)},
          g.input(s.attentional)};
}

template <typename T>
CarriedState<T> from_nodes(const Graph<T>& g, const DecoderNodes<T>& n) {
  return {{g.value(n.layer0.hidden), g.value(n.layer0.cell)},
          {g.value(n.layer1.hidden), g.value(n.layer1.cell)},
          g.value(n.attentional)};
}

}  // namespace train_detail

// Joint objective for one example under teacher forcing:
//   -log p(z|r) - log p(y|r,z)
// Text tokens with a copy label contribute p(y_t, u=1); all others
// contribute p(y_t, u=0), per the training supervision for the copy switch.
// When `sink` is non-null, gradients for the whole objective are
// accumulated into it (BPTT-truncated at `cfg.bptt_truncation` tokens).
template <typename T>
LossStats example_loss(const ModelParams<T>& params, const Vocabulary& vocab,
                       const DatasetExample& ex, const TrainConfig& cfg,
                       const DropoutPlan<T>& drop, GradSink<T>* sink) {
  check(!ex.plan.empty(), "example_loss: example has no plan");
  check(ex.summary.copy_labels.size() == ex.summary.tokens.size(),
        "example_loss: example has no copy labels");
  const auto feature_ids = table_feature_ids(ex.table, vocab);
  const int n_tokens = ex.summary.token_count();
  const int vocab_words = vocab.word_vocab.size();

  // Gold word ids, with EOS as the final prediction target.
  std::vector<int> targets;
  targets.reserve(static_cast<size_t>(n_tokens) + 1);
  for (const auto& tok : ex.summary.tokens) targets.push_back(vocab.word_or_unk(tok));
  targets.push_back(vocab.eos());

  // Copy source steps per gold token (empty when not copy-labeled).
  std::vector<std::vector<int>> sources(targets.size());
  for (int t = 0; t < n_tokens; ++t) {
    if (ex.summary.copy_labels[static_cast<size_t>(t)].copied())
      sources[static_cast<size_t>(t)] =
          copy_source_steps(ex.plan, ex.table, ex.summary.tokens[static_cast<size_t>(t)]);
  }

  LossStats stats;
  const auto segments = bptt_segments(static_cast<int>(targets.size()), cfg.bptt_truncation);
  train_detail::CarriedState<T> carried;
  bool have_carried = false;

  for (const auto& [seg_off, seg_len] : segments) {
    Graph<T> g;
    BoundParams<T> bound = BoundParams<T>::bind(g, params);
    TableNodes<T> table = encode_table(g, bound, params.cfg, feature_ids);

    std::vector<typename Graph<T>::Id> terms;

    if (seg_off == 0 && params.cfg.use_planner) {
      auto rollout = planner_teacher_forced(
          g, bound, table, ex.plan, drop.active ? &drop.planner_input : nullptr);
      terms.push_back(rollout.nll);
      stats.plan_nll = static_cast<double>(g.value(rollout.nll).at(0));
    }

    PlanEncoding<T> enc = encode_plan(g, bound, table, ex.plan);
    DecoderNodes<T> state;
    if (!have_carried) {
      state.layer0 = enc.dec_init0;
      state.layer1 = enc.dec_init1;
      state.attentional = g.input(Tensor<T>({params.cfg.hidden}));
    } else {
      state = train_detail::to_nodes(g, carried);
    }

    std::vector<typename Graph<T>::Id> text_logs;
    for (int t = seg_off; t < seg_off + seg_len; ++t) {
      const int prev_word = t == 0 ? vocab.bos() : targets[static_cast<size_t>(t) - 1];
      DecodeDropout<T> dd;
      if (drop.active && t < static_cast<int>(drop.dec_input.size())) {
        dd.input = &drop.dec_input[static_cast<size_t>(t)];
        dd.between = &drop.dec_between[static_cast<size_t>(t)];
        dd.output = &drop.dec_output[static_cast<size_t>(t)];
      }
      auto step = decode_step(g, bound, enc.vectors, state, prev_word, dd);
      state = step.next;

      const bool copied = !sources[static_cast<size_t>(t)].empty();
      typename Graph<T>::Id p;
      if (params.cfg.copy == CopyMode::Conditional) {
        auto gate = copy_switch(g, bound, step.d_top);
        if (copied) {
          auto mass = g.sum(g.gather(step.beta, sources[static_cast<size_t>(t)]));
          p = g.mul(gate, mass);
        } else {
          auto keep = g.add_const(g.scale(gate, T(-1)), T(1));
          auto p_gen = g.softmax(step.gen_logits);
          p = g.mul(keep, g.gather(p_gen, {targets[static_cast<size_t>(t)]}));
        }
      } else {
        auto uni = joint_union_probs(g, step.gen_logits, step.beta_scores);
        if (copied) {
          std::vector<int> slots;
          for (int k : sources[static_cast<size_t>(t)]) slots.push_back(vocab_words + k);
          p = g.sum(g.gather(uni, slots));
        } else {
          p = g.gather(uni, {targets[static_cast<size_t>(t)]});
        }
      }
      text_logs.push_back(g.log_(p));
    }

    if (!text_logs.empty()) {
      auto seg_text_nll = g.scale(g.sum(g.concat(text_logs)), T(-1));
      stats.text_nll += static_cast<double>(g.value(seg_text_nll).at(0));
      terms.push_back(seg_text_nll);
    }

    if (!terms.empty()) {
      typename Graph<T>::Id loss = terms[0];
      for (size_t i = 1; i < terms.size(); ++i) loss = g.sum(g.concat({loss, terms[i]}));
      if (sink != nullptr) {
        g.backward(loss);
        sink->accumulate(g, bound);
      }
    }

    carried = train_detail::from_nodes(g, state);
    have_carried = true;
    stats.clamped += g.clamped_logs();
  }

  stats.total = stats.plan_nll + stats.text_nll;
  return stats;
}

// Teacher-forced planner step accuracy (including the end-of-plan step).
template <typename T>
double plan_step_accuracy(const ModelParams<T>& params, const Vocabulary& vocab,
                          const DatasetExample& ex) {
  if (!params.cfg.use_planner || ex.plan.empty()) return 0.0;
  Graph<T> g;
  BoundParams<T> bound = BoundParams<T>::bind(g, params);
  TableNodes<T> table = encode_table(g, bound, params.cfg, table_feature_ids(ex.table, vocab));
  auto rollout = planner_teacher_forced(g, bound, table, ex.plan);
  int hits = 0;
  for (int k = 0; k <= ex.plan.length(); ++k) {
    const Tensor<T>& probs = g.value(rollout.step_probs[static_cast<size_t>(k)]);
    int argmax = 0;
    for (int i = 1; i < probs.size(); ++i)
      if (probs.at(i) > probs.at(argmax)) argmax = i;
    const int target = k < ex.plan.length() ? ex.plan.step(k) : table.rows;
    if (argmax == target) ++hits;
  }
  return static_cast<double>(hits) / (ex.plan.length() + 1);
}

struct EpochStats {
  int epoch = 0;
  double train_loss = 0, val_loss = 0, lr = 0, plan_acc = 0;
  int clip_events = 0;
};

template <typename T>
struct TrainResult {
  ModelParams<T> params;
  Vocabulary vocab;
  std::vector<EpochStats> log;
  double avg_plan_len = 0, avg_summary_len = 0;
  int best_epoch = 0;
};

// Replace gold plans by the identity sequence over all records and re-label
// copy targets accordingly; the decoder then attends over the whole table.
inline DatasetExample ablate_planner(const DatasetExample& ex) {
  DatasetExample out = ex;
  std::vector<int> steps(static_cast<size_t>(ex.table.size()));
  std::iota(steps.begin(), steps.end(), 0);
  out.plan = ContentPlan(std::move(steps), ex.table.size());
  out.summary = mark_copy_targets(ex.summary, out.plan, ex.table);
  return out;
}

// Per-epoch view handed to the epoch callback (checkpoint writing, early
// stopping). Returning true stops training after the current epoch.
template <typename T>
struct TrainSnapshot {
  int epoch = 0;
  const ModelParams<T>* params = nullptr;
  const Vocabulary* vocab = nullptr;
  const EpochStats* stats = nullptr;
  double avg_plan_len = 0, avg_summary_len = 0;
  bool improved = false;
};

template <typename T>
using EpochCallback = std::function<bool(const TrainSnapshot<T>&)>;

template <typename T>
TrainResult<T> train(const std::vector<DatasetExample>& train_set,
                     const std::vector<DatasetExample>& val_set, const TrainConfig& cfg,
                     const EpochCallback<T>& callback = {}) {
  cfg.validate();
  check(!train_set.empty(), "train: empty corpus");

  TrainResult<T> result;
  result.vocab = build_vocabulary(train_set, cfg.min_count);
  const ModelConfig mc = cfg.model_config(result.vocab);
  result.params = ModelParams<T>::init(mc, cfg.seed);

  std::vector<DatasetExample> examples;
  examples.reserve(train_set.size());
  long skipped = 0;
  for (const auto& ex : train_set) {
    DatasetExample prepared = cfg.no_planner ? ablate_planner(ex) : ex;
    if (prepared.plan.empty() || prepared.summary.tokens.empty()) {
      ++skipped;
      continue;
    }
    examples.push_back(std::move(prepared));
  }
  if (skipped > 0)
    log_info("train: skipped " + std::to_string(skipped) + " examples without plan or text");
  check(!examples.empty(), "train: no usable examples");
  std::vector<DatasetExample> val;
  val.reserve(val_set.size());
  for (const auto& ex : val_set) {
    DatasetExample prepared = cfg.no_planner ? ablate_planner(ex) : ex;
    if (!prepared.plan.empty() && !prepared.summary.tokens.empty())
      val.push_back(std::move(prepared));
  }
  const std::vector<DatasetExample>& monitor = val.empty() ? examples : val;

  for (const auto& ex : examples) {
    result.avg_plan_len += ex.plan.length();
    result.avg_summary_len += ex.summary.token_count();
  }
  result.avg_plan_len /= static_cast<double>(examples.size());
  result.avg_summary_len /= static_cast<double>(examples.size());

  // Batches group examples of similar summary length; batch order is
  // reshuffled every epoch.
  std::vector<int> by_length(examples.size());
  std::iota(by_length.begin(), by_length.end(), 0);
  std::sort(by_length.begin(), by_length.end(), [&](int a, int b) {
    int la = examples[static_cast<size_t>(a)].summary.token_count();
    int lb = examples[static_cast<size_t>(b)].summary.token_count();
    return la != lb ? la < lb : a < b;
  });
  std::vector<std::vector<int>> batches;
  for (size_t i = 0; i < by_length.size(); i += static_cast<size_t>(cfg.batch_size)) {
    std::vector<int> batch;
    for (size_t j = i; j < std::min(by_length.size(), i + static_cast<size_t>(cfg.batch_size));
         ++j)
      batch.push_back(by_length[j]);
    batches.push_back(std::move(batch));
  }

  AdagradState<T> opt = AdagradState<T>::init(result.params, cfg.adagrad_accum_init);
  double lr = cfg.lr;
  double best_val = std::numeric_limits<double>::infinity();
  GradSink<T> sink_grads;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    Rng epoch_rng(Rng::mix(cfg.seed, static_cast<uint64_t>(epoch)));
    std::vector<std::vector<int>> order = batches;
    epoch_rng.shuffle(order);

    double train_loss = 0;
    long train_examples = 0;
    int clip_events = 0;
    for (const auto& batch : order) {
      sink_grads.reset(result.params);
      for (int idx : batch) {
        const DatasetExample& ex = examples[static_cast<size_t>(idx)];
        Rng drop_rng(Rng::mix(Rng::mix(cfg.seed, static_cast<uint64_t>(epoch)),
                              static_cast<uint64_t>(idx) + 0x1000));
        auto drop = DropoutPlan<T>::draw(cfg.dropout, ex.plan.length(),
                                         ex.summary.token_count() + 1, cfg.hidden, drop_rng);
        LossStats ls;
        try {
          ls = example_loss(result.params, result.vocab, ex, cfg, drop, &sink_grads);
        } catch (const std::exception& e) {
          throw std::runtime_error("train: epoch " + std::to_string(epoch) + " example " +
                                   std::to_string(idx) + ": " + e.what());
        }
        train_loss += ls.total;
        ++train_examples;
      }
      sink_grads.scale(1.0 / static_cast<double>(batch.size()));
      if (cfg.clip_norm > 0) {
        const double norm = sink_grads.global_norm();
        if (norm > cfg.clip_norm) {
          sink_grads.scale(cfg.clip_norm / norm);
          ++clip_events;
        }
      }
      adagrad_step(result.params, sink_grads.grads, opt, lr);
    }

    double val_loss = 0;
    double plan_acc = 0;
    DropoutPlan<T> no_drop;
    for (const auto& ex : monitor) {
      val_loss += example_loss<T>(result.params, result.vocab, ex, cfg, no_drop, nullptr).total;
      if (mc.use_planner) plan_acc += plan_step_accuracy(result.params, result.vocab, ex);
    }
    val_loss /= static_cast<double>(monitor.size());
    plan_acc /= static_cast<double>(monitor.size());

    EpochStats es;
    es.epoch = epoch;
    es.train_loss = train_loss / static_cast<double>(train_examples);
    es.val_loss = val_loss;
    es.lr = lr;
    es.plan_acc = plan_acc;
    es.clip_events = clip_events;
    result.log.push_back(es);
    log_debug("epoch " + std::to_string(epoch) + " train " + std::to_string(es.train_loss) +
              " val " + std::to_string(val_loss));

    const bool improved = val_loss < best_val;
    if (improved) {
      best_val = val_loss;
      result.best_epoch = epoch;
    } else {
      lr *= cfg.lr_decay;
    }
    if (callback) {
      TrainSnapshot<T> snap;
      snap.epoch = epoch;
      snap.params = &result.params;
      snap.vocab = &result.vocab;
      snap.stats = &result.log.back();
      snap.avg_plan_len = result.avg_plan_len;
      snap.avg_summary_len = result.avg_summary_len;
      snap.improved = improved;
      if (callback(snap)) break;
    }
  }
  return result;
}

}  // namespace planwrite
