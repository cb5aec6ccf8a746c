#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "planwrite/data.hpp"
#include "planwrite/model.hpp"
#include "planwrite/rng.hpp"
#include "planwrite/tensor.hpp"
#include "planwrite/training.hpp"
#include "planwrite/vocab.hpp"

namespace pwtest {

using planwrite::num::Tensor;

inline Tensor<double> random_tensor(std::vector<int> shape, planwrite::Rng& rng,
                                    double lo = -0.5, double hi = 0.5) {
  Tensor<double> t(std::move(shape));
  for (auto& v : t.data) v = rng.uniform_real(lo, hi);
  return t;
}

// Central differences with step 1e-5 against an analytic gradient; returns
// the worst relative error over all entries. The denominator floor sits
// above the roundoff limit of central differences (|f|·eps/h, about 1e-9
// for unit-scale losses): below it the oracle cannot resolve a gradient at
// all, so agreement is measured absolutely there.
inline constexpr double kGradFloor = 1e-5;

inline double relative_gradient_error(double numeric, double exact) {
  const double denom = std::max({std::abs(numeric), std::abs(exact), kGradFloor});
  return std::abs(numeric - exact) / denom;
}

inline double gradient_check(std::function<double(const std::vector<Tensor<double>>&)> f,
                             std::vector<Tensor<double>> inputs,
                             const std::vector<Tensor<double>>& analytic, double h = 1e-5) {
  double worst = 0;
  for (size_t p = 0; p < inputs.size(); ++p) {
    for (int i = 0; i < inputs[p].size(); ++i) {
      const double keep = inputs[p].at(i);
      inputs[p].at(i) = keep + h;
      const double up = f(inputs);
      inputs[p].at(i) = keep - h;
      const double down = f(inputs);
      inputs[p].at(i) = keep;
      const double numeric = (up - down) / (2 * h);
      worst = std::max(worst, relative_gradient_error(numeric, analytic[p].at(i)));
    }
  }
  return worst;
}

// Minimal hand-built table: one player with PTS and AST records, matching
// the name pre-processing convention (FIRST_NAME/SECOND_NAME rows).
inline planwrite::RecordTable isaiah_table() {
  using planwrite::Record;
  using planwrite::Side;
  std::vector<Record> recs = {
      {"FIRST_NAME", "Isaiah_Thomas", "Isaiah", Side::Visiting},
      {"SECOND_NAME", "Isaiah_Thomas", "Thomas", Side::Visiting},
      {"PTS", "Isaiah_Thomas", "23", Side::Visiting},
      {"AST", "Isaiah_Thomas", "5", Side::Visiting},
      {"FGM", "Isaiah_Thomas", "4", Side::Visiting},
      {"FGA", "Isaiah_Thomas", "13", Side::Visiting},
  };
  return planwrite::RecordTable(std::move(recs));
}

inline planwrite::Summary make_summary(std::vector<std::string> tokens,
                                       std::vector<int> starts) {
  planwrite::Summary s;
  s.tokens = std::move(tokens);
  s.sentence_starts = std::move(starts);
  return s;
}

// Three records, a four-step plan with a repeated record, six tokens, and
// copy labels touching a value that two plan steps can source. The smallest
// instance that exercises every loss path.
struct TinyFixture {
  planwrite::DatasetExample example;
  planwrite::Vocabulary vocab;
};

inline TinyFixture tiny_fixture() {
  using planwrite::Record;
  using planwrite::Side;
  TinyFixture f;
  f.example.table = planwrite::RecordTable({
      {"PTS", "Alpha_Beta", "7", Side::Home},
      {"REB", "Alpha_Beta", "3", Side::Home},
      {"PTS", "Gamma_Delta", "7", Side::Visiting},
  });
  f.example.summary =
      make_summary({"Alpha", "scored", "7", "then", "3", "boards"}, {0});
  f.example.plan = planwrite::ContentPlan({0, 1, 2, 1}, 3);
  f.example.summary.copy_labels.assign(6, planwrite::CopyLabel{});
  f.example.summary.copy_labels[2].step = 0;  // "7", sourceable from steps 0 and 2
  f.example.summary.copy_labels[4].step = 1;  // "3"
  f.vocab = planwrite::build_vocabulary({f.example}, 1);
  return f;
}

template <typename T>
planwrite::ModelParams<T> tiny_params(const TinyFixture& f, uint64_t seed,
                                      planwrite::CopyMode copy, bool use_gate = true,
                                      bool use_planner = true, int hidden = 8) {
  planwrite::TrainConfig tc;
  tc.hidden = hidden;
  tc.copy = copy;
  tc.no_gate = !use_gate;
  tc.no_planner = !use_planner;
  planwrite::ModelConfig mc = tc.model_config(f.vocab);
  return planwrite::ModelParams<T>::init(mc, seed);
}

}  // namespace pwtest
