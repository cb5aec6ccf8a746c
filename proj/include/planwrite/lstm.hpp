#pragma once

#include <vector>

#include "planwrite/graph.hpp"
#include "planwrite/rng.hpp"
#include "planwrite/tensor.hpp"

namespace planwrite::num {

// One LSTM layer's weights, stacked gate order (input, forget, candidate,
// output) along the first dimension.
template <typename T>
struct LstmWeights {
  Tensor<T> w_x;  // [4h x d_in]
  Tensor<T> w_h;  // [4h x h]
  Tensor<T> b;    // [4h]
};

template <typename T>
struct LstmWeightIds {
  typename Graph<T>::Id w_x, w_h, b;
};

// Value-level recurrent state, carried across truncation boundaries.
template <typename T>
struct LstmState {
  Tensor<T> hidden;
  Tensor<T> cell;

  static LstmState zeros(int width) {
    return {Tensor<T>({width}), Tensor<T>({width})};
  }
};

// Graph-level recurrent state used while building a forward pass.
template <typename T>
struct LstmNodes {
  typename Graph<T>::Id hidden, cell;
};

template <typename T>
LstmWeightIds<T> bind_lstm(Graph<T>& g, const LstmWeights<T>& w) {
  return {g.param(w.w_x), g.param(w.w_h), g.param(w.b)};
}

template <typename T>
LstmNodes<T> lstm_state_nodes(Graph<T>& g, const LstmState<T>& s) {
  return {g.input(s.hidden), g.input(s.cell)};
}

// Standard LSTM cell. The input state is left untouched; a fresh state is
// returned.
template <typename T>
LstmNodes<T> lstm_step(Graph<T>& g, const LstmWeightIds<T>& w, typename Graph<T>::Id x,
                       const LstmNodes<T>& state) {
  const int h4 = g.value(w.b).size();
  check(h4 % 4 == 0, "lstm_step: bias width not divisible by 4");
  const int h = h4 / 4;
  check(g.value(state.hidden).size() == h && g.value(state.cell).size() == h,
        "lstm_step: state width mismatch");
  auto pre = g.add(g.add(g.matmul(w.w_x, x), g.matmul(w.w_h, state.hidden)), w.b);
  auto i_gate = g.sigmoid(g.slice(pre, 0, h));
  auto f_gate = g.sigmoid(g.slice(pre, h, h));
  auto cand = g.tanh_(g.slice(pre, 2 * h, h));
  auto o_gate = g.sigmoid(g.slice(pre, 3 * h, h));
  auto cell = g.add(g.mul(f_gate, state.cell), g.mul(i_gate, cand));
  auto hidden = g.mul(o_gate, g.tanh_(cell));
  return {hidden, cell};
}

template <typename T>
struct BiLstmNodes {
  std::vector<typename Graph<T>::Id> outputs;  // per position, [2h]
  typename Graph<T>::Id final_hidden;          // [2h]: last forward ; last backward
  typename Graph<T>::Id final_cell;            // [2h]
};

// Bidirectional encoder over a sequence of rank-1 inputs. Position k's
// output concatenates the forward state at k with the backward state at k.
template <typename T>
BiLstmNodes<T> bilstm_encode(Graph<T>& g, const std::vector<typename Graph<T>::Id>& seq,
                             const LstmWeightIds<T>& fw, const LstmWeightIds<T>& bw) {
  check(!seq.empty(), "bilstm_encode: empty sequence");
  const int n = static_cast<int>(seq.size());
  const int h = g.value(fw.b).size() / 4;

  std::vector<typename Graph<T>::Id> fwd(n), bwd(n);
  LstmNodes<T> st = lstm_state_nodes(g, LstmState<T>::zeros(h));
  for (int k = 0; k < n; ++k) {
    st = lstm_step(g, fw, seq[static_cast<size_t>(k)], st);
    fwd[static_cast<size_t>(k)] = st.hidden;
  }
  LstmNodes<T> fw_final = st;

  st = lstm_state_nodes(g, LstmState<T>::zeros(h));
  for (int k = n - 1; k >= 0; --k) {
    st = lstm_step(g, bw, seq[static_cast<size_t>(k)], st);
    bwd[static_cast<size_t>(k)] = st.hidden;
  }
  LstmNodes<T> bw_final = st;

  BiLstmNodes<T> out;
  out.outputs.resize(static_cast<size_t>(n));
  for (int k = 0; k < n; ++k)
    out.outputs[static_cast<size_t>(k)] =
        g.concat({fwd[static_cast<size_t>(k)], bwd[static_cast<size_t>(k)]});
  out.final_hidden = g.concat({fw_final.hidden, bw_final.hidden});
  out.final_cell = g.concat({fw_final.cell, bw_final.cell});
  return out;
}

// Pre-drawn Bernoulli mask scaled by 1/(1-p). Multiplying by this constant
// is the training-time dropout; evaluation skips the multiply entirely.
template <typename T>
Tensor<T> draw_dropout_mask(std::vector<int> shape, double p, Rng& rng) {
  Tensor<T> m(std::move(shape));
  if (p <= 0.0) {
    for (auto& v : m.data) v = T(1);
    return m;
  }
  const T keep_scale = static_cast<T>(1.0 / (1.0 - p));
  for (auto& v : m.data) v = rng.next_double() < p ? T(0) : keep_scale;
  return m;
}

template <typename T>
typename Graph<T>::Id apply_dropout(Graph<T>& g, typename Graph<T>::Id x,
                                    const Tensor<T>* mask) {
  if (mask == nullptr) return x;
  return g.mul(x, g.input(*mask));
}

}  // namespace planwrite::num
