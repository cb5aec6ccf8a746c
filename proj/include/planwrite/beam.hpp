#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "planwrite/tensor.hpp"

namespace planwrite {

template <typename State>
struct BeamHypothesis {
  std::vector<int> tokens;
  double score = 0;  // cumulative log-probability
  State state;
  bool finished = false;
};

// Ties break by earlier end, then lexicographically lower token sequence.
template <typename State>
bool beam_better(const BeamHypothesis<State>& a, const BeamHypothesis<State>& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.finished != b.finished) return a.finished;
  if (a.tokens.size() != b.tokens.size()) return a.tokens.size() < b.tokens.size();
  return a.tokens < b.tokens;
}

template <typename State>
struct BeamStepResult {
  std::vector<double> log_probs;
  State state;  // state after consuming the previous token
};

// Standard beam search. `step(state, prev_token)` consumes the hypothesis'
// last token (-1 on the first call) and returns the advanced state plus
// log-probabilities over the next token. Returns the best completed
// hypothesis, or the best live one at max_len (end symbol not included in
// tokens).
template <typename State, typename StepFn>
BeamHypothesis<State> beam_search(StepFn&& step, State start, int width, int max_len,
                                  int end_symbol) {
  num::check(width >= 1, "beam_search: width must be >= 1");
  num::check(max_len >= 1, "beam_search: max_len must be >= 1");

  std::vector<BeamHypothesis<State>> live;
  live.push_back({{}, 0.0, std::move(start), false});
  std::vector<BeamHypothesis<State>> completed;

  for (int t = 0; t < max_len && !live.empty(); ++t) {
    std::vector<BeamHypothesis<State>> candidates;
    for (auto& hyp : live) {
      const int prev = hyp.tokens.empty() ? -1 : hyp.tokens.back();
      BeamStepResult<State> res = step(hyp.state, prev);
      for (int sym = 0; sym < static_cast<int>(res.log_probs.size()); ++sym) {
        const double lp = res.log_probs[static_cast<size_t>(sym)];
        if (!std::isfinite(lp)) continue;
        BeamHypothesis<State> next;
        next.score = hyp.score + lp;
        next.state = res.state;
        next.tokens = hyp.tokens;
        if (sym == end_symbol) {
          next.finished = true;
        } else {
          next.tokens.push_back(sym);
        }
        candidates.push_back(std::move(next));
      }
    }
    std::sort(candidates.begin(), candidates.end(), beam_better<State>);
    live.clear();
    for (auto& c : candidates) {
      if (c.finished) {
        completed.push_back(std::move(c));
      } else if (static_cast<int>(live.size()) < width) {
        live.push_back(std::move(c));
      }
      if (static_cast<int>(live.size()) >= width) break;
    }
    // Scores only decrease with length, so once the best completed
    // hypothesis beats every live one the search is settled.
    if (!completed.empty()) {
      std::sort(completed.begin(), completed.end(), beam_better<State>);
      completed.resize(std::min(completed.size(), static_cast<size_t>(width)));
      if (live.empty() || !beam_better(live.front(), completed.front())) break;
    }
  }

  if (!completed.empty()) {
    std::sort(completed.begin(), completed.end(), beam_better<State>);
    if (live.empty() || !beam_better(live.front(), completed.front()))
      return completed.front();
  }
  num::check(!live.empty(), "beam_search: no viable hypothesis");
  std::sort(live.begin(), live.end(), beam_better<State>);
  return live.front();
}

}  // namespace planwrite
