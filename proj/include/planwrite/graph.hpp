#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "planwrite/tensor.hpp"

namespace planwrite::num {

// Reverse-mode tape. Nodes are appended eagerly (forward values computed at
// build time) and a single backward() pass fills gradients for every
// parameter leaf reachable from the loss. Inputs always precede outputs, so
// the tape is acyclic by construction.
//
// Op set: the closed set needed by the model equations, plus structural
// variants (slice/row/stack/transpose/mean) of the gather/concat/matmul
// family.
template <typename T>
class Graph {
 public:
  using Id = int;

  enum class Op {
    Param,
    Input,
    Add,
    Scale,
    AddConst,
    Mul,
    MatMul,
    Transpose,
    Concat,
    ConcatCols,
    Slice,
    Row,
    StackRows,
    MeanRows,
    Relu,
    Sigmoid,
    Tanh,
    Softmax,
    SoftmaxRows,
    Log,
    EmbedRows,
    Gather,
    Sum,
    Dot,
  };

  // Parameter leaf: holds a view, caller keeps the tensor alive for the
  // graph's lifetime. Receives a gradient.
  Id param(const Tensor<T>& t) {
    Node n;
    n.op = Op::Param;
    n.view = &t;
    n.needs_grad = true;
    return push(std::move(n));
  }

  // Constant leaf: owned copy, no gradient.
  Id input(Tensor<T> t) {
    Node n;
    n.op = Op::Input;
    n.val = std::move(t);
    return push(std::move(n));
  }

  Id constant(T v) { return input(Tensor<T>::scalar(v)); }

  // a + b with equal shapes, or [m x n] + [n] broadcast over rows.
  Id add(Id a, Id b) {
    const Tensor<T>& va = value(a);
    const Tensor<T>& vb = value(b);
    Node n;
    n.op = Op::Add;
    n.in = {a, b};
    if (va.same_shape(vb)) {
      n.val = va;
      for (int i = 0; i < vb.size(); ++i) n.val.at(i) += vb.at(i);
    } else {
      check(va.ndim() == 2 && vb.ndim() == 1 && va.cols() == vb.rows(),
            "add: shape mismatch");
      n.val = va;
      for (int i = 0; i < va.rows(); ++i)
        for (int j = 0; j < va.cols(); ++j) n.val.at(i, j) += vb.at(j);
    }
    return push(std::move(n));
  }

  Id scale(Id a, T s) {
    Node n;
    n.op = Op::Scale;
    n.in = {a};
    n.scalar = s;
    n.val = value(a);
    for (auto& v : n.val.data) v *= s;
    return push(std::move(n));
  }

  Id add_const(Id a, T s) {
    Node n;
    n.op = Op::AddConst;
    n.in = {a};
    n.scalar = s;
    n.val = value(a);
    for (auto& v : n.val.data) v += s;
    return push(std::move(n));
  }

  Id mul(Id a, Id b) {
    const Tensor<T>& va = value(a);
    const Tensor<T>& vb = value(b);
    check(va.same_shape(vb), "mul: shape mismatch");
    Node n;
    n.op = Op::Mul;
    n.in = {a, b};
    n.val = va;
    for (int i = 0; i < vb.size(); ++i) n.val.at(i) *= vb.at(i);
    return push(std::move(n));
  }

  // [m x k] * [k x p] -> [m x p], or [m x k] * [k] -> [m]
  Id matmul(Id a, Id b) {
    const Tensor<T>& va = value(a);
    const Tensor<T>& vb = value(b);
    check(va.ndim() == 2, "matmul: left operand must be a matrix");
    Node n;
    n.op = Op::MatMul;
    n.in = {a, b};
    const int m = va.rows(), k = va.cols();
    if (vb.ndim() == 2) {
      check(vb.rows() == k, "matmul: shape mismatch");
      const int p = vb.cols();
      n.val = Tensor<T>({m, p});
      for (int i = 0; i < m; ++i) {
        T* out = &n.val.at(i, 0);
        for (int kk = 0; kk < k; ++kk) {
          const T aik = va.at(i, kk);
          const T* brow = &vb.at(kk, 0);
          for (int j = 0; j < p; ++j) out[j] += aik * brow[j];
        }
      }
    } else {
      check(vb.ndim() == 1 && vb.rows() == k, "matmul: shape mismatch");
      n.val = Tensor<T>({m});
      for (int i = 0; i < m; ++i) {
        T acc = T(0);
        const T* arow = &va.at(i, 0);
        for (int kk = 0; kk < k; ++kk) acc += arow[kk] * vb.at(kk);
        n.val.at(i) = acc;
      }
    }
    return push(std::move(n));
  }

  Id transpose(Id a) {
    const Tensor<T>& va = value(a);
    check(va.ndim() == 2, "transpose: matrix required");
    Node n;
    n.op = Op::Transpose;
    n.in = {a};
    n.val = Tensor<T>({va.cols(), va.rows()});
    for (int i = 0; i < va.rows(); ++i)
      for (int j = 0; j < va.cols(); ++j) n.val.at(j, i) = va.at(i, j);
    return push(std::move(n));
  }

  // Concatenate rank-1 tensors (scalars count as [1]).
  Id concat(const std::vector<Id>& parts) {
    check(!parts.empty(), "concat: no parts");
    int total = 0;
    for (Id p : parts) {
      check(value(p).ndim() == 1, "concat: rank-1 parts required");
      total += value(p).size();
    }
    Node n;
    n.op = Op::Concat;
    n.in = parts;
    n.val = Tensor<T>({total});
    int off = 0;
    for (Id p : parts) {
      const Tensor<T>& v = value(p);
      for (int i = 0; i < v.size(); ++i) n.val.at(off + i) = v.at(i);
      off += v.size();
    }
    return push(std::move(n));
  }

  // Concatenate matrices along columns.
  Id concat_cols(const std::vector<Id>& parts) {
    check(!parts.empty(), "concat_cols: no parts");
    const int m = value(parts[0]).rows();
    int total = 0;
    for (Id p : parts) {
      check(value(p).ndim() == 2 && value(p).rows() == m, "concat_cols: row mismatch");
      total += value(p).cols();
    }
    Node n;
    n.op = Op::ConcatCols;
    n.in = parts;
    n.val = Tensor<T>({m, total});
    int off = 0;
    for (Id p : parts) {
      const Tensor<T>& v = value(p);
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < v.cols(); ++j) n.val.at(i, off + j) = v.at(i, j);
      off += v.cols();
    }
    return push(std::move(n));
  }

  Id slice(Id a, int start, int len) {
    const Tensor<T>& va = value(a);
    check(va.ndim() == 1, "slice: rank-1 required");
    check(start >= 0 && len > 0 && start + len <= va.size(), "slice: out of range");
    Node n;
    n.op = Op::Slice;
    n.in = {a};
    n.idx = {start, len};
    n.val = Tensor<T>({len});
    for (int i = 0; i < len; ++i) n.val.at(i) = va.at(start + i);
    return push(std::move(n));
  }

  Id row(Id a, int r) {
    const Tensor<T>& va = value(a);
    check(va.ndim() == 2, "row: matrix required");
    check(r >= 0 && r < va.rows(), "row: out of range");
    Node n;
    n.op = Op::Row;
    n.in = {a};
    n.idx = {r};
    n.val = Tensor<T>({va.cols()});
    for (int j = 0; j < va.cols(); ++j) n.val.at(j) = va.at(r, j);
    return push(std::move(n));
  }

  Id stack_rows(const std::vector<Id>& rows_in) {
    check(!rows_in.empty(), "stack_rows: no rows");
    const int cols = value(rows_in[0]).size();
    Node n;
    n.op = Op::StackRows;
    n.in = rows_in;
    n.val = Tensor<T>({static_cast<int>(rows_in.size()), cols});
    for (size_t i = 0; i < rows_in.size(); ++i) {
      const Tensor<T>& v = value(rows_in[i]);
      check(v.ndim() == 1 && v.size() == cols, "stack_rows: width mismatch");
      for (int j = 0; j < cols; ++j) n.val.at(static_cast<int>(i), j) = v.at(j);
    }
    return push(std::move(n));
  }

  Id mean_rows(Id a) {
    const Tensor<T>& va = value(a);
    check(va.ndim() == 2, "mean_rows: matrix required");
    Node n;
    n.op = Op::MeanRows;
    n.in = {a};
    n.val = Tensor<T>({va.cols()});
    for (int i = 0; i < va.rows(); ++i)
      for (int j = 0; j < va.cols(); ++j) n.val.at(j) += va.at(i, j);
    for (int j = 0; j < va.cols(); ++j) n.val.at(j) /= static_cast<T>(va.rows());
    return push(std::move(n));
  }

  Id relu(Id a) {
    Node n;
    n.op = Op::Relu;
    n.in = {a};
    n.val = value(a);
    for (auto& v : n.val.data) v = v > T(0) ? v : T(0);
    return push(std::move(n));
  }

  Id sigmoid(Id a) {
    Node n;
    n.op = Op::Sigmoid;
    n.in = {a};
    n.val = value(a);
    for (auto& v : n.val.data) v = stable_sigmoid(v);
    return push(std::move(n));
  }

  Id tanh_(Id a) {
    Node n;
    n.op = Op::Tanh;
    n.in = {a};
    n.val = value(a);
    for (auto& v : n.val.data) v = std::tanh(v);
    return push(std::move(n));
  }

  // Max-subtraction stabilized softmax over a rank-1 tensor. Masked entries
  // (mask value 0) come out exactly zero and receive no gradient.
  Id softmax(Id a, std::vector<uint8_t> mask = {}) {
    const Tensor<T>& va = value(a);
    check(va.ndim() == 1, "softmax: rank-1 required");
    check(mask.empty() || static_cast<int>(mask.size()) == va.size(),
          "softmax: mask size mismatch");
    Node n;
    n.op = Op::Softmax;
    n.in = {a};
    n.mask = mask;
    n.val = Tensor<T>({va.size()});
    softmax_fill(&va.at(0), mask.empty() ? nullptr : mask.data(), va.size(), &n.val.at(0));
    return push(std::move(n));
  }

  // Row-wise softmax over a matrix; mask (if given) is a full 0/1 matrix.
  Id softmax_rows(Id a, std::vector<uint8_t> mask = {}) {
    const Tensor<T>& va = value(a);
    check(va.ndim() == 2, "softmax_rows: matrix required");
    check(mask.empty() || static_cast<long>(mask.size()) == static_cast<long>(va.size()),
          "softmax_rows: mask size mismatch");
    Node n;
    n.op = Op::SoftmaxRows;
    n.in = {a};
    n.mask = mask;
    n.val = Tensor<T>({va.rows(), va.cols()});
    for (int i = 0; i < va.rows(); ++i) {
      const uint8_t* m = mask.empty() ? nullptr : mask.data() + static_cast<size_t>(i) * va.cols();
      softmax_fill(&va.at(i, 0), m, va.cols(), &n.val.at(i, 0));
    }
    return push(std::move(n));
  }

  // Natural log clamped at -1e9 so that log(0) stays finite; clamped entries
  // get zero gradient and are counted for diagnostics.
  Id log_(Id a) {
    const Tensor<T>& va = value(a);
    Node n;
    n.op = Op::Log;
    n.in = {a};
    n.val = va;
    for (auto& v : n.val.data) {
      check(v >= T(0), "log: negative input");
      if (v == T(0)) {
        v = T(-1e9);
        ++clamped_logs_;
      } else {
        v = std::log(v);
      }
    }
    return push(std::move(n));
  }

  // table[ids, :] -> [len(ids) x n]; gradient scatters back into the table.
  Id embed_rows(Id table, std::vector<int> ids) {
    const Tensor<T>& vt = value(table);
    check(vt.ndim() == 2, "embed_rows: matrix table required");
    check(!ids.empty(), "embed_rows: no ids");
    Node n;
    n.op = Op::EmbedRows;
    n.in = {table};
    n.val = Tensor<T>({static_cast<int>(ids.size()), vt.cols()});
    for (size_t i = 0; i < ids.size(); ++i) {
      check(ids[i] >= 0 && ids[i] < vt.rows(), "embed_rows: id out of range");
      for (int j = 0; j < vt.cols(); ++j)
        n.val.at(static_cast<int>(i), j) = vt.at(ids[i], j);
    }
    n.idx = std::move(ids);
    return push(std::move(n));
  }

  Id gather(Id a, std::vector<int> ids) {
    const Tensor<T>& va = value(a);
    check(va.ndim() == 1, "gather: rank-1 required");
    check(!ids.empty(), "gather: no indices");
    Node n;
    n.op = Op::Gather;
    n.in = {a};
    n.val = Tensor<T>({static_cast<int>(ids.size())});
    for (size_t i = 0; i < ids.size(); ++i) {
      check(ids[i] >= 0 && ids[i] < va.size(), "gather: index out of range");
      n.val.at(static_cast<int>(i)) = va.at(ids[i]);
    }
    n.idx = std::move(ids);
    return push(std::move(n));
  }

  Id sum(Id a) {
    const Tensor<T>& va = value(a);
    Node n;
    n.op = Op::Sum;
    n.in = {a};
    T acc = T(0);
    for (T v : va.data) acc += v;
    n.val = Tensor<T>::scalar(acc);
    return push(std::move(n));
  }

  Id dot(Id a, Id b) {
    const Tensor<T>& va = value(a);
    const Tensor<T>& vb = value(b);
    check(va.ndim() == 1 && vb.ndim() == 1 && va.size() == vb.size(), "dot: shape mismatch");
    Node n;
    n.op = Op::Dot;
    n.in = {a, b};
    T acc = T(0);
    for (int i = 0; i < va.size(); ++i) acc += va.at(i) * vb.at(i);
    n.val = Tensor<T>::scalar(acc);
    return push(std::move(n));
  }

  const Tensor<T>& value(Id id) const {
    const Node& n = nodes_[static_cast<size_t>(id)];
    return n.view != nullptr ? *n.view : n.val;
  }

  // Fill gradients for everything reachable from a scalar loss. Unreachable
  // parameters report zeros via grad().
  void backward(Id loss) {
    check(value(loss).is_scalar(), "backward: loss must be scalar");
    check(std::isfinite(static_cast<double>(value(loss).at(0))), "backward: non-finite loss");
    for (auto& n : nodes_) n.grad = Tensor<T>();
    touch_grad(loss).at(0) = T(1);
    for (Id id = loss; id >= 0; --id) {
      Node& n = nodes_[static_cast<size_t>(id)];
      if (n.grad.size() == 0) continue;
      backstep(id, n);
    }
  }

  // Gradient of the last backward() w.r.t. a leaf; zeros if unreachable.
  Tensor<T> grad(Id id) const {
    const Node& n = nodes_[static_cast<size_t>(id)];
    if (n.grad.size() == 0) return Tensor<T>(value(id).shape);
    return n.grad;
  }

  long clamped_logs() const { return clamped_logs_; }
  size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    Op op = Op::Input;
    std::vector<Id> in;
    Tensor<T> val;
    const Tensor<T>* view = nullptr;
    Tensor<T> grad;
    bool needs_grad = false;
    std::vector<int> idx;
    std::vector<uint8_t> mask;
    T scalar = T(0);
  };

  std::vector<Node> nodes_;
  long clamped_logs_ = 0;

  Id push(Node n) {
    // Finiteness invariant: every forward op must produce finite values.
    if (n.view == nullptr) {
      check(n.val.all_finite(), std::string("non-finite value after op ") + op_name(n.op));
    }
    nodes_.push_back(std::move(n));
    return static_cast<Id>(nodes_.size() - 1);
  }

  static const char* op_name(Op op) {
    switch (op) {
      case Op::Param: return "param";
      case Op::Input: return "input";
      case Op::Add: return "add";
      case Op::Scale: return "scale";
      case Op::AddConst: return "add_const";
      case Op::Mul: return "mul";
      case Op::MatMul: return "matmul";
      case Op::Transpose: return "transpose";
      case Op::Concat: return "concat";
      case Op::ConcatCols: return "concat_cols";
      case Op::Slice: return "slice";
      case Op::Row: return "row";
      case Op::StackRows: return "stack_rows";
      case Op::MeanRows: return "mean_rows";
      case Op::Relu: return "relu";
      case Op::Sigmoid: return "sigmoid";
      case Op::Tanh: return "tanh";
      case Op::Softmax: return "softmax";
      case Op::SoftmaxRows: return "softmax_rows";
      case Op::Log: return "log";
      case Op::EmbedRows: return "embed_rows";
      case Op::Gather: return "gather";
      case Op::Sum: return "sum";
      case Op::Dot: return "dot";
    }
    return "?";
  }

  static T stable_sigmoid(T x) {
    if (x >= T(0)) {
      T e = std::exp(-x);
      return T(1) / (T(1) + e);
    }
    T e = std::exp(x);
    return e / (T(1) + e);
  }

  static void softmax_fill(const T* in, const uint8_t* mask, int n, T* out) {
    T mx = T(0);
    bool any = false;
    for (int i = 0; i < n; ++i) {
      if (mask != nullptr && mask[i] == 0) continue;
      if (!any || in[i] > mx) mx = in[i];
      any = true;
    }
    check(any, "softmax: empty support");
    T denom = T(0);
    for (int i = 0; i < n; ++i) {
      if (mask != nullptr && mask[i] == 0) {
        out[i] = T(0);
      } else {
        out[i] = std::exp(in[i] - mx);
        denom += out[i];
      }
    }
    for (int i = 0; i < n; ++i) out[i] /= denom;
  }

  Tensor<T>& touch_grad(Id id) {
    Node& n = nodes_[static_cast<size_t>(id)];
    if (n.grad.size() == 0) n.grad = Tensor<T>(value(id).shape);
    return n.grad;
  }

  void backstep(Id id, Node& n) {
    const Tensor<T>& g = n.grad;
    switch (n.op) {
      case Op::Param:
      case Op::Input:
        break;
      case Op::Add: {
        Tensor<T>& da = touch_grad(n.in[0]);
        Tensor<T>& db = touch_grad(n.in[1]);
        for (int i = 0; i < g.size(); ++i) da.at(i) += g.at(i);
        if (da.same_shape(db)) {
          for (int i = 0; i < g.size(); ++i) db.at(i) += g.at(i);
        } else {
          const int m = g.rows(), c = g.cols();
          for (int i = 0; i < m; ++i)
            for (int j = 0; j < c; ++j) db.at(j) += g.at(i, j);
        }
        break;
      }
      case Op::Scale: {
        Tensor<T>& da = touch_grad(n.in[0]);
        for (int i = 0; i < g.size(); ++i) da.at(i) += n.scalar * g.at(i);
        break;
      }
      case Op::AddConst: {
        Tensor<T>& da = touch_grad(n.in[0]);
        for (int i = 0; i < g.size(); ++i) da.at(i) += g.at(i);
        break;
      }
      case Op::Mul: {
        const Tensor<T>& va = value(n.in[0]);
        const Tensor<T>& vb = value(n.in[1]);
        Tensor<T>& da = touch_grad(n.in[0]);
        Tensor<T>& db = touch_grad(n.in[1]);
        for (int i = 0; i < g.size(); ++i) {
          da.at(i) += g.at(i) * vb.at(i);
          db.at(i) += g.at(i) * va.at(i);
        }
        break;
      }
      case Op::MatMul: {
        const Tensor<T>& va = value(n.in[0]);
        const Tensor<T>& vb = value(n.in[1]);
        Tensor<T>& da = touch_grad(n.in[0]);
        Tensor<T>& db = touch_grad(n.in[1]);
        const int m = va.rows(), k = va.cols();
        if (vb.ndim() == 2) {
          const int p = vb.cols();
          for (int i = 0; i < m; ++i)
            for (int kk = 0; kk < k; ++kk) {
              T acc = T(0);
              const T* grow = &g.at(i, 0);
              const T* brow = &vb.at(kk, 0);
              for (int j = 0; j < p; ++j) acc += grow[j] * brow[j];
              da.at(i, kk) += acc;
            }
          for (int kk = 0; kk < k; ++kk)
            for (int i = 0; i < m; ++i) {
              const T aik = va.at(i, kk);
              const T* grow = &g.at(i, 0);
              T* brow = &db.at(kk, 0);
              for (int j = 0; j < p; ++j) brow[j] += aik * grow[j];
            }
        } else {
          for (int i = 0; i < m; ++i) {
            const T gi = g.at(i);
            const T* arow = &va.at(i, 0);
            T* darow = &da.at(i, 0);
            for (int kk = 0; kk < k; ++kk) {
              darow[kk] += gi * vb.at(kk);
              db.at(kk) += gi * arow[kk];
            }
          }
        }
        break;
      }
      case Op::Transpose: {
        Tensor<T>& da = touch_grad(n.in[0]);
        for (int i = 0; i < g.rows(); ++i)
          for (int j = 0; j < g.cols(); ++j) da.at(j, i) += g.at(i, j);
        break;
      }
      case Op::Concat: {
        int off = 0;
        for (Id p : n.in) {
          Tensor<T>& dp = touch_grad(p);
          for (int i = 0; i < dp.size(); ++i) dp.at(i) += g.at(off + i);
          off += dp.size();
        }
        break;
      }
      case Op::ConcatCols: {
        int off = 0;
        for (Id p : n.in) {
          Tensor<T>& dp = touch_grad(p);
          for (int i = 0; i < dp.rows(); ++i)
            for (int j = 0; j < dp.cols(); ++j) dp.at(i, j) += g.at(i, off + j);
          off += dp.cols();
        }
        break;
      }
      case Op::Slice: {
        Tensor<T>& da = touch_grad(n.in[0]);
        for (int i = 0; i < n.idx[1]; ++i) da.at(n.idx[0] + i) += g.at(i);
        break;
      }
      case Op::Row: {
        Tensor<T>& da = touch_grad(n.in[0]);
        for (int j = 0; j < g.size(); ++j) da.at(n.idx[0], j) += g.at(j);
        break;
      }
      case Op::StackRows: {
        for (size_t i = 0; i < n.in.size(); ++i) {
          Tensor<T>& dp = touch_grad(n.in[i]);
          for (int j = 0; j < dp.size(); ++j) dp.at(j) += g.at(static_cast<int>(i), j);
        }
        break;
      }
      case Op::MeanRows: {
        const Tensor<T>& va = value(n.in[0]);
        Tensor<T>& da = touch_grad(n.in[0]);
        const T inv = T(1) / static_cast<T>(va.rows());
        for (int i = 0; i < va.rows(); ++i)
          for (int j = 0; j < va.cols(); ++j) da.at(i, j) += g.at(j) * inv;
        break;
      }
      case Op::Relu: {
        const Tensor<T>& va = value(n.in[0]);
        Tensor<T>& da = touch_grad(n.in[0]);
        for (int i = 0; i < g.size(); ++i)
          if (va.at(i) > T(0)) da.at(i) += g.at(i);
        break;
      }
      case Op::Sigmoid: {
        Tensor<T>& da = touch_grad(n.in[0]);
        for (int i = 0; i < g.size(); ++i) {
          const T y = n.val.at(i);
          da.at(i) += g.at(i) * y * (T(1) - y);
        }
        break;
      }
      case Op::Tanh: {
        Tensor<T>& da = touch_grad(n.in[0]);
        for (int i = 0; i < g.size(); ++i) {
          const T y = n.val.at(i);
          da.at(i) += g.at(i) * (T(1) - y * y);
        }
        break;
      }
      case Op::Softmax: {
        Tensor<T>& da = touch_grad(n.in[0]);
        softmax_back(&n.val.at(0), &g.at(0), n.mask.empty() ? nullptr : n.mask.data(),
                     n.val.size(), &da.at(0));
        break;
      }
      case Op::SoftmaxRows: {
        Tensor<T>& da = touch_grad(n.in[0]);
        const int c = n.val.cols();
        for (int i = 0; i < n.val.rows(); ++i) {
          const uint8_t* m =
              n.mask.empty() ? nullptr : n.mask.data() + static_cast<size_t>(i) * c;
          softmax_back(&n.val.at(i, 0), &g.at(i, 0), m, c, &da.at(i, 0));
        }
        break;
      }
      case Op::Log: {
        const Tensor<T>& va = value(n.in[0]);
        Tensor<T>& da = touch_grad(n.in[0]);
        for (int i = 0; i < g.size(); ++i)
          if (va.at(i) > T(0)) da.at(i) += g.at(i) / va.at(i);
        break;
      }
      case Op::EmbedRows: {
        Tensor<T>& da = touch_grad(n.in[0]);
        const int c = da.cols();
        for (size_t i = 0; i < n.idx.size(); ++i)
          for (int j = 0; j < c; ++j) da.at(n.idx[i], j) += g.at(static_cast<int>(i), j);
        break;
      }
      case Op::Gather: {
        Tensor<T>& da = touch_grad(n.in[0]);
        for (size_t i = 0; i < n.idx.size(); ++i) da.at(n.idx[i]) += g.at(static_cast<int>(i));
        break;
      }
      case Op::Sum: {
        Tensor<T>& da = touch_grad(n.in[0]);
        for (int i = 0; i < da.size(); ++i) da.at(i) += g.at(0);
        break;
      }
      case Op::Dot: {
        const Tensor<T>& va = value(n.in[0]);
        const Tensor<T>& vb = value(n.in[1]);
        Tensor<T>& da = touch_grad(n.in[0]);
        Tensor<T>& db = touch_grad(n.in[1]);
        for (int i = 0; i < va.size(); ++i) {
          da.at(i) += g.at(0) * vb.at(i);
          db.at(i) += g.at(0) * va.at(i);
        }
        break;
      }
    }
  }

  static void softmax_back(const T* y, const T* gy, const uint8_t* mask, int n, T* gx) {
    T dotv = T(0);
    for (int i = 0; i < n; ++i) dotv += gy[i] * y[i];
    for (int i = 0; i < n; ++i) {
      if (mask != nullptr && mask[i] == 0) continue;
      gx[i] += y[i] * (gy[i] - dotv);
    }
  }
};

}  // namespace planwrite::num
