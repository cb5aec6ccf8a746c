#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "planwrite/checkpoint.hpp"
#include "planwrite/inference.hpp"
#include "planwrite/model.hpp"
#include "planwrite/training.hpp"
#include "support.hpp"

using namespace planwrite;
using pwtest::tiny_fixture;
using pwtest::tiny_params;
using DGraph = Graph<double>;

namespace {

template <typename T>
void zero(Tensor<T>& t) {
  for (auto& v : t.data) v = T(0);
}

}  // namespace

TEST_CASE("paper-default configuration") {
  ModelConfig mc;
  CHECK(mc.hidden == 600);
  CHECK(mc.planner_layers == 1);
  CHECK(mc.decoder_layers == 2);
  CHECK(mc.copy == CopyMode::Conditional);
}

TEST_CASE("encode_records with zero weights gives zero vectors") {
  auto f = tiny_fixture();
  auto p = tiny_params<double>(f, 1, CopyMode::Conditional);
  zero(p.record_w);
  zero(p.record_b);
  DGraph g;
  auto b = BoundParams<double>::bind(g, p);
  auto raw = encode_records(g, b, table_feature_ids(f.example.table, f.vocab));
  for (double v : g.value(raw).data) CHECK(v == 0.0);
}

TEST_CASE("relu clips a negative bias coordinate") {
  auto f = tiny_fixture();
  auto p = tiny_params<double>(f, 1, CopyMode::Conditional);
  zero(p.record_w);
  zero(p.record_b);
  p.record_b.at(3) = -0.7;
  p.record_b.at(5) = 0.4;
  DGraph g;
  auto b = BoundParams<double>::bind(g, p);
  auto raw = encode_records(g, b, table_feature_ids(f.example.table, f.vocab));
  for (int j = 0; j < g.value(raw).rows(); ++j) {
    CHECK(g.value(raw).at(j, 3) == 0.0);
    CHECK(g.value(raw).at(j, 5) == doctest::Approx(0.4));
  }
}

TEST_CASE("encode_records matches hand matrix arithmetic") {
  // n = 3, two records, weights set by hand.
  auto f = tiny_fixture();
  planwrite::TrainConfig tc;
  tc.hidden = 3;
  ModelConfig mc = tc.model_config(f.vocab);
  auto p = ModelParams<double>::init(mc, 2);
  p.visit([](const char*, Tensor<double>& t) { zero(t); });
  // embeddings: every feature embeds to its id value in coordinate 0
  for (Tensor<double>* emb : {&p.type_emb, &p.entity_emb, &p.value_emb, &p.side_emb})
    for (int i = 0; i < emb->rows(); ++i) emb->at(i, 0) = i;
  // record_w picks coordinate 0 of each of the four embeddings
  p.record_w.at(0, 0) = 1.0;   // type
  p.record_w.at(1, 3) = 2.0;   // entity
  p.record_w.at(2, 6) = -1.0;  // value (relu clips)
  p.record_b.at(2) = 0.25;

  DGraph g;
  auto b = BoundParams<double>::bind(g, p);
  auto ids = table_feature_ids(f.example.table, f.vocab);
  auto raw = encode_records(g, b, ids);
  for (int j = 0; j < 2; ++j) {
    CHECK(g.value(raw).at(j, 0) == doctest::Approx(ids[0][static_cast<size_t>(j)]));
    CHECK(g.value(raw).at(j, 1) == doctest::Approx(2.0 * ids[1][static_cast<size_t>(j)]));
    const double pre = -1.0 * ids[2][static_cast<size_t>(j)] + 0.25;
    CHECK(g.value(raw).at(j, 2) == doctest::Approx(std::max(0.0, pre)));
  }
}

TEST_CASE("content selection attention is uniform when scores are zero") {
  auto f = tiny_fixture();
  auto p = tiny_params<double>(f, 3, CopyMode::Conditional);
  zero(p.table_attn_w);
  DGraph g;
  auto b = BoundParams<double>::bind(g, p);
  auto t = encode_table(g, b, p.cfg, table_feature_ids(f.example.table, f.vocab));
  const auto& alpha = g.value(t.alpha);
  for (int j = 0; j < t.rows; ++j)
    for (int k = 0; k < t.rows; ++k)
      CHECK(alpha.at(j, k) == doctest::Approx(j == k ? 0.0 : 0.5));
}

TEST_CASE("zero gate weights halve the record vectors") {
  auto f = tiny_fixture();
  auto p = tiny_params<double>(f, 4, CopyMode::Conditional);
  zero(p.gate_w);
  DGraph g;
  auto b = BoundParams<double>::bind(g, p);
  auto t = encode_table(g, b, p.cfg, table_feature_ids(f.example.table, f.vocab));
  const auto& raw = g.value(t.raw);
  const auto& rcs = g.value(t.rcs);
  const auto& gates = g.value(t.gates);
  for (int i = 0; i < raw.size(); ++i) {
    CHECK(gates.at(i) == doctest::Approx(0.5));
    CHECK(rcs.at(i) == doctest::Approx(raw.at(i) / 2));
  }
}

TEST_CASE("attention rows normalize over the other records on random inputs") {
  Rng rng(5);
  auto f = tiny_fixture();
  for (int trial = 0; trial < 100; ++trial) {
    auto p = tiny_params<double>(f, rng.next_u64(), CopyMode::Conditional);
    DGraph g;
    auto b = BoundParams<double>::bind(g, p);
    auto t = encode_table(g, b, p.cfg, table_feature_ids(f.example.table, f.vocab));
    const auto& alpha = g.value(t.alpha);
    for (int j = 0; j < t.rows; ++j) {
      double sum = 0;
      for (int k = 0; k < t.rows; ++k) sum += alpha.at(j, k);
      CHECK(alpha.at(j, j) == 0.0);
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
    }
    const auto& gates = g.value(t.gates);
    for (double v : gates.data) {
      CHECK(v > 0.0);
      CHECK(v < 1.0);
    }
  }
}

TEST_CASE("a single-record table cannot feed the gate") {
  RecordTable one({{"PTS", "Alpha_Beta", "7", Side::Home}});
  DatasetExample ex;
  ex.table = one;
  ex.summary = pwtest::make_summary({"x"}, {0});
  Vocabulary v = build_vocabulary({ex}, 1);
  planwrite::TrainConfig tc;
  tc.hidden = 4;
  auto p = ModelParams<double>::init(tc.model_config(v), 1);
  DGraph g;
  auto b = BoundParams<double>::bind(g, p);
  CHECK_THROWS_WITH_AS(encode_table(g, b, p.cfg, table_feature_ids(one, v)),
                       "attention needs a context", std::runtime_error);
}

TEST_CASE("disabling the gate reproduces raw vectors bit-exactly") {
  auto f = tiny_fixture();
  auto gated = tiny_params<double>(f, 6, CopyMode::Conditional, true);
  auto ungated = tiny_params<double>(f, 6, CopyMode::Conditional, false);
  DGraph g1, g2;
  auto b1 = BoundParams<double>::bind(g1, gated);
  auto b2 = BoundParams<double>::bind(g2, ungated);
  auto ids = table_feature_ids(f.example.table, f.vocab);
  auto t1 = encode_table(g1, b1, gated.cfg, ids);
  auto t2 = encode_table(g2, b2, ungated.cfg, ids);
  CHECK(g2.value(t2.rcs) == g2.value(t2.raw));
  CHECK(g2.value(t2.raw) == g1.value(t1.raw));
  CHECK_FALSE(g1.value(t1.rcs) == g1.value(t1.raw));
}

TEST_CASE("plan_init averages the selected record vectors") {
  auto f = tiny_fixture();
  auto p = tiny_params<double>(f, 7, CopyMode::Conditional);
  DGraph g;
  auto b = BoundParams<double>::bind(g, p);
  auto t = encode_table(g, b, p.cfg, table_feature_ids(f.example.table, f.vocab));
  auto init = plan_init(g, t);
  const auto& rcs = g.value(t.rcs);
  for (int c = 0; c < rcs.cols(); ++c) {
    double mean = 0;
    for (int r = 0; r < rcs.rows(); ++r) mean += rcs.at(r, c);
    mean /= rcs.rows();
    CHECK(g.value(init.hidden).at(c) == doctest::Approx(mean));
    CHECK(g.value(init.cell).at(c) == 0.0);
  }

  // identical rows: mean equals the row; opposite rows: zero
  DGraph g2;
  Tensor<double> same({2, 3}, {1, -2, 3, 1, -2, 3});
  TableNodes<double> tn;
  tn.rcs = g2.input(same);
  tn.rows = 2;
  auto i2 = plan_init(g2, tn);
  CHECK(g2.value(i2.hidden) == Tensor<double>({3}, {1, -2, 3}));

  DGraph g3;
  Tensor<double> opp({2, 3}, {1, -2, 3, -1, 2, -3});
  TableNodes<double> tn3;
  tn3.rcs = g3.input(opp);
  tn3.rows = 2;
  auto i3 = plan_init(g3, tn3);
  for (double v : g3.value(i3.hidden).data) CHECK(v == 0.0);
}

TEST_CASE("plan step distribution is uniform with zero scores and sums to one") {
  auto f = tiny_fixture();
  auto p = tiny_params<double>(f, 8, CopyMode::Conditional);
  zero(p.planner_score_w);
  DGraph g;
  auto b = BoundParams<double>::bind(g, p);
  auto t = encode_table(g, b, p.cfg, table_feature_ids(f.example.table, f.vocab));
  auto init = plan_init(g, t);
  auto state = num::lstm_step(g, b.planner_lstm(), b.plan_start_vec, init);
  auto probs = plan_step_distribution(g, b, t, state.hidden);
  REQUIRE(g.value(probs).size() == t.rows + 1);
  for (int i = 0; i <= t.rows; ++i)
    CHECK(g.value(probs).at(i) == doctest::Approx(1.0 / (t.rows + 1)));

  Rng rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    auto p2 = tiny_params<double>(f, rng.next_u64(), CopyMode::Conditional);
    DGraph g2;
    auto b2 = BoundParams<double>::bind(g2, p2);
    auto t2 = encode_table(g2, b2, p2.cfg, table_feature_ids(f.example.table, f.vocab));
    auto init2 = plan_init(g2, t2);
    auto s2 = num::lstm_step(g2, b2.planner_lstm(), b2.plan_start_vec, init2);
    auto probs2 = plan_step_distribution(g2, b2, t2, s2.hidden);
    double sum = 0;
    for (double v : g2.value(probs2).data) sum += v;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("encode_plan handles single steps and is order sensitive") {
  auto f = tiny_fixture();
  auto p = tiny_params<double>(f, 9, CopyMode::Conditional);
  DGraph g;
  auto b = BoundParams<double>::bind(g, p);
  auto t = encode_table(g, b, p.cfg, table_feature_ids(f.example.table, f.vocab));

  auto single = encode_plan(g, b, t, ContentPlan({1}, 3));
  CHECK(g.value(single.vectors).rows() == 1);
  CHECK(g.value(single.vectors).cols() == 8);

  auto fwd = encode_plan(g, b, t, ContentPlan({0, 1, 2}, 3));
  auto rev = encode_plan(g, b, t, ContentPlan({2, 1, 0}, 3));
  CHECK_FALSE(g.value(fwd.vectors) == g.value(rev.vectors));

  CHECK_THROWS_AS(encode_plan(g, b, t, ContentPlan()), std::runtime_error);
}

TEST_CASE("decoder attention and vocabulary distributions go uniform with zero weights") {
  auto f = tiny_fixture();
  auto p = tiny_params<double>(f, 10, CopyMode::Conditional);
  zero(p.text_attn_w);
  zero(p.out_w);
  zero(p.out_b);
  DGraph g;
  auto b = BoundParams<double>::bind(g, p);
  auto t = encode_table(g, b, p.cfg, table_feature_ids(f.example.table, f.vocab));
  auto enc = encode_plan(g, b, t, f.example.plan);
  DecoderNodes<double> state = {enc.dec_init0, enc.dec_init1, g.input(Tensor<double>({8}))};
  auto step = decode_step(g, b, enc.vectors, state, f.vocab.bos());
  const int k = f.example.plan.length();
  for (int i = 0; i < k; ++i) CHECK(g.value(step.beta).at(i) == doctest::Approx(1.0 / k));
  auto p_gen = g.softmax(step.gen_logits);
  const int vw = f.vocab.word_vocab.size();
  for (int i = 0; i < vw; ++i) CHECK(g.value(p_gen).at(i) == doctest::Approx(1.0 / vw));
}

TEST_CASE("joint copy reduces to p_gen with no copy slots and normalizes the union") {
  auto f = tiny_fixture();
  auto p = tiny_params<double>(f, 11, CopyMode::Joint);
  DGraph g;
  auto b = BoundParams<double>::bind(g, p);
  auto t = encode_table(g, b, p.cfg, table_feature_ids(f.example.table, f.vocab));
  auto enc = encode_plan(g, b, t, f.example.plan);
  DecoderNodes<double> state = {enc.dec_init0, enc.dec_init1, g.input(Tensor<double>({8}))};
  auto step = decode_step(g, b, enc.vectors, state, f.vocab.bos());

  auto none = joint_union_probs(g, step.gen_logits, -1);
  auto p_gen = g.softmax(step.gen_logits);
  CHECK(g.value(none) == g.value(p_gen));

  auto uni = joint_union_probs(g, step.gen_logits, step.beta_scores);
  REQUIRE(g.value(uni).size() == f.vocab.word_vocab.size() + f.example.plan.length());
  double sum = 0;
  for (double v : g.value(uni).data) sum += v;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));

  // token "7" is sourceable from plan steps 0 and 2; its copy mass is the
  // two-term sum
  auto steps = copy_source_steps(f.example.plan, f.example.table, "7");
  CHECK(steps == std::vector<int>{0, 2});
  const int vw = f.vocab.word_vocab.size();
  const double mass = g.value(uni).at(vw + 0) + g.value(uni).at(vw + 2);
  auto picked = g.sum(g.gather(uni, {vw + 0, vw + 2}));
  CHECK(g.value(picked).at(0) == doctest::Approx(mass));
}

TEST_CASE("conditional copy gate is half at zero and the marginal sums to one") {
  auto f = tiny_fixture();
  auto p = tiny_params<double>(f, 12, CopyMode::Conditional);
  zero(p.copy_gate_w);
  zero(p.copy_gate_b);
  DGraph g;
  auto b = BoundParams<double>::bind(g, p);
  auto t = encode_table(g, b, p.cfg, table_feature_ids(f.example.table, f.vocab));
  auto enc = encode_plan(g, b, t, f.example.plan);
  DecoderNodes<double> state = {enc.dec_init0, enc.dec_init1, g.input(Tensor<double>({8}))};
  auto step = decode_step(g, b, enc.vectors, state, f.vocab.bos());
  auto gate = copy_switch(g, b, step.d_top);
  CHECK(g.value(gate).at(0) == doctest::Approx(0.5));

  Rng rng(23);
  for (int trial = 0; trial < 100; ++trial) {
    auto p2 = tiny_params<double>(f, rng.next_u64(), CopyMode::Conditional);
    DGraph g2;
    auto b2 = BoundParams<double>::bind(g2, p2);
    auto t2 = encode_table(g2, b2, p2.cfg, table_feature_ids(f.example.table, f.vocab));
    auto enc2 = encode_plan(g2, b2, t2, f.example.plan);
    DecoderNodes<double> st2 = {enc2.dec_init0, enc2.dec_init1,
                                g2.input(Tensor<double>({8}))};
    auto step2 = decode_step(g2, b2, enc2.vectors, st2, f.vocab.bos());
    auto gate2 = g2.value(copy_switch(g2, b2, step2.d_top)).at(0);
    auto beta2 = g2.value(step2.beta);
    auto pg2 = g2.value(g2.softmax(step2.gen_logits));

    // marginal over the extended token space
    ExtendedVocab ev = ExtendedVocab::build(f.vocab, f.example.plan, f.example.table);
    auto marg = marginal_token_probs(CopyMode::Conditional, ev, pg2, beta2, gate2);
    double sum = 0;
    for (double v : marg) sum += v;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("end-to-end joint loss gradients match central differences") {
  auto f = tiny_fixture();
  planwrite::TrainConfig tc;
  tc.hidden = 8;
  tc.dropout = 0;

  for (CopyMode mode : {CopyMode::Conditional, CopyMode::Joint}) {
    CAPTURE(copy_mode_name(mode));
    tc.copy = mode;
    auto params = ModelParams<double>::init(tc.model_config(f.vocab), 31);

    GradSink<double> sink;
    sink.reset(params);
    DropoutPlan<double> no_drop;
    example_loss<double>(params, f.vocab, f.example, tc, no_drop, &sink);

    const double h = 1e-5;
    double worst = 0;
    size_t pi = 0;
    params.visit([&](const char* name, Tensor<double>& t) {
      for (int i = 0; i < t.size(); ++i) {
        const double keep = t.at(i);
        t.at(i) = keep + h;
        const double up =
            example_loss<double>(params, f.vocab, f.example, tc, no_drop, nullptr).total;
        t.at(i) = keep - h;
        const double down =
            example_loss<double>(params, f.vocab, f.example, tc, no_drop, nullptr).total;
        t.at(i) = keep;
        const double numeric = (up - down) / (2 * h);
        const double rel = pwtest::relative_gradient_error(numeric, sink.grads[pi].at(i));
        if (rel > worst) worst = rel;
        if (rel >= 1e-4) {
          CAPTURE(name);
          CAPTURE(i);
          CHECK(rel < 1e-4);
        }
      }
      ++pi;
    });
    CHECK(worst < 1e-4);
  }
}

TEST_CASE("checkpoints round-trip and reject vocab corruption") {
  auto f = tiny_fixture();
  auto p = tiny_params<float>(f, 77, CopyMode::Joint, false, true, 6);
  Checkpoint<float> ck{p, f.vocab, 3.5, 12.25};
  const std::string path = "/tmp/pw_test_ckpt.bin";
  save_checkpoint(path, ck);
  auto loaded = load_checkpoint<float>(path);
  CHECK(loaded.avg_plan_len == 3.5);
  CHECK(loaded.avg_summary_len == 12.25);
  CHECK(loaded.params.cfg.copy == CopyMode::Joint);
  CHECK_FALSE(loaded.params.cfg.use_gate);
  CHECK(loaded.vocab == f.vocab);
  bool same = true;
  size_t i = 0;
  std::vector<const Tensor<float>*> orig;
  p.visit([&](const char*, const Tensor<float>& t) { orig.push_back(&t); });
  loaded.params.visit([&](const char*, const Tensor<float>& t) {
    if (!(t == *orig[i])) same = false;
    ++i;
  });
  CHECK(same);

  // flip one byte inside the vocabulary block
  std::fstream fix(path, std::ios::in | std::ios::out | std::ios::binary);
  fix.seekp(60);
  char c;
  fix.seekg(60);
  fix.get(c);
  fix.seekp(60);
  fix.put(static_cast<char>(c ^ 0x01));
  fix.close();
  CHECK_THROWS_AS(load_checkpoint<float>(path), std::runtime_error);
  std::remove(path.c_str());
}
