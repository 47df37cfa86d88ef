#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <unordered_map>
#include <vector>

#include "udabench/core/error.hpp"
#include "udabench/core/log.hpp"
#include "udabench/core/rng.hpp"
#include "udabench/diffcore/param.hpp"
#include "udabench/diffcore/svd.hpp"
#include "udabench/diffcore/tensor.hpp"

namespace udabench {

enum class OpKind : std::uint8_t {
  input,
  matmul,
  add,
  sub,
  mul,
  div,
  scale,
  add_scalar,
  relu,
  exp,
  log,
  neg,
  square,
  abs,
  softplus,
  sum,
  mean,
  row_sum,
  col_sum,
  row_softmax,
  row_log_softmax,
  dropout_mask,
  concat_rows,
  concat_cols,
  svd_singular_values,
  nuclear_norm,
  grad_reverse,
  l2_row_norm,
  transpose,
  slice_rows,
  detach,
  sort_cols,
};

inline const char* op_name(OpKind k) {
  switch (k) {
    case OpKind::input: return "input";
    case OpKind::matmul: return "matmul";
    case OpKind::add: return "add";
    case OpKind::sub: return "sub";
    case OpKind::mul: return "mul";
    case OpKind::div: return "div";
    case OpKind::scale: return "scale";
    case OpKind::add_scalar: return "add-scalar";
    case OpKind::relu: return "relu";
    case OpKind::exp: return "exp";
    case OpKind::log: return "log";
    case OpKind::neg: return "neg";
    case OpKind::square: return "square";
    case OpKind::abs: return "abs";
    case OpKind::softplus: return "softplus";
    case OpKind::sum: return "sum";
    case OpKind::mean: return "mean";
    case OpKind::row_sum: return "row-sum";
    case OpKind::col_sum: return "col-sum";
    case OpKind::row_softmax: return "row-softmax";
    case OpKind::row_log_softmax: return "row-log-softmax";
    case OpKind::dropout_mask: return "dropout-mask";
    case OpKind::concat_rows: return "concat-rows";
    case OpKind::concat_cols: return "concat-cols";
    case OpKind::svd_singular_values: return "svd-singular-values";
    case OpKind::nuclear_norm: return "nuclear-norm";
    case OpKind::grad_reverse: return "grad-reverse";
    case OpKind::l2_row_norm: return "l2-row-norm";
    case OpKind::transpose: return "transpose";
    case OpKind::slice_rows: return "slice-rows";
    case OpKind::detach: return "detach";
    case OpKind::sort_cols: return "sort-cols";
  }
  return "?";
}

class Graph;

/// Handle to a node inside a Graph. Cheap to copy; valid while the graph lives.
struct Var {
  Graph* graph = nullptr;
  int id = -1;

  const Tensor& value() const;
  const Tensor& grad() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  double item() const { return value().item(); }
};

/// Dynamic reverse-mode tape. Nodes are evaluated eagerly when created, so
/// parents always precede children; evaluate() re-runs the forward pass after
/// input values change (used by finite-difference checks).
class Graph {
 public:
  struct Node {
    OpKind op = OpKind::input;
    int a = -1;
    int b = -1;
    double attr = 0.0;
    std::size_t lo = 0;
    std::size_t hi = 0;
    bool requires_grad = false;
    bool grad_ready = false;
    Parameter* param = nullptr;
    Tensor value;
    Tensor grad;
    Tensor aux;   // dropout mask, softmax output, svd U
    Tensor aux2;  // svd V
    std::vector<std::size_t> perm;
  };

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  /// Constant or differentiable leaf.
  Var input(Tensor value, bool requires_grad = false) {
    Node n;
    n.op = OpKind::input;
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    return push_leaf(std::move(n));
  }

  /// Binds a trainable parameter. Binding the same parameter twice returns the same node.
  Var param(Parameter& p) {
    if (auto it = bound_.find(&p); it != bound_.end()) return Var{this, it->second};
    Node n;
    n.op = OpKind::input;
    n.value = p.value;
    n.requires_grad = true;
    n.param = &p;
    Var v = push_leaf(std::move(n));
    bound_.emplace(&p, v.id);
    return v;
  }

  Var add_node(OpKind op, int a, int b = -1, double attr = 0.0, std::size_t lo = 0,
               std::size_t hi = 0) {
    Node n;
    n.op = op;
    n.a = a;
    n.b = b;
    n.attr = attr;
    n.lo = lo;
    n.hi = hi;
    n.requires_grad = op != OpKind::detach &&
                      ((a >= 0 && nodes_[a].requires_grad) || (b >= 0 && nodes_[b].requires_grad));
    nodes_.push_back(std::move(n));
    const int id = static_cast<int>(nodes_.size()) - 1;
    forward(id, false);
    return Var{this, id};
  }

  /// Dropout node with a freshly sampled keep-mask scaled by 1/(1-p).
  Var dropout(Var x, double p, Rng& rng) {
    Node n;
    n.op = OpKind::dropout_mask;
    n.a = x.id;
    n.attr = p;
    n.requires_grad = nodes_[x.id].requires_grad;
    const Tensor& xv = nodes_[x.id].value;
    n.aux = Tensor(xv.rows(), xv.cols());
    const double keep = 1.0 - p;
    for (std::size_t i = 0; i < n.aux.size(); ++i) n.aux[i] = rng.bernoulli(keep) ? 1.0 / keep : 0.0;
    nodes_.push_back(std::move(n));
    const int id = static_cast<int>(nodes_.size()) - 1;
    forward(id, false);
    return Var{this, id};
  }

  const Node& node(int id) const { return nodes_.at(static_cast<std::size_t>(id)); }
  Node& node(int id) { return nodes_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const { return nodes_.size(); }

  /// Recomputes every non-leaf node. With freeze_detached, detach nodes keep
  /// their current value, which matches what the analytic gradient assumes.
  void evaluate(bool freeze_detached = false) {
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      if (nodes_[i].op == OpKind::input) continue;
      forward(static_cast<int>(i), freeze_detached);
    }
  }

  /// Overwrites a leaf value (shape must match). Call evaluate() afterwards.
  void set_value(Var leaf, Tensor value) {
    Node& n = node(leaf.id);
    if (n.op != OpKind::input) throw StructuralError(label(leaf.id) + ": set_value on non-leaf");
    if (!n.value.same_shape(value)) {
      throw StructuralError(label(leaf.id) + ": set_value shape " + value.shape() +
                            " does not match " + n.value.shape());
    }
    n.value = std::move(value);
  }

  /// Reverse sweep from a scalar loss. Writes gradients into every bound
  /// Parameter reached by the loss (has_grad = true) and clears has_grad on the rest.
  void backward(Var loss) {
    Node& root = node(loss.id);
    if (!root.value.is_scalar()) {
      throw StructuralError(label(loss.id) + ": backward requires a scalar loss, got " +
                            root.value.shape());
    }
    for (auto& n : nodes_) {
      n.grad_ready = false;
      n.grad = Tensor();
    }
    if (root.requires_grad) {
      root.grad = Tensor::scalar(1.0);
      root.grad_ready = true;
      for (int id = loss.id; id >= 0; --id) {
        Node& n = nodes_[static_cast<std::size_t>(id)];
        if (!n.grad_ready || n.op == OpKind::input) continue;
        backprop(id);
      }
    }
    for (auto& [p, id] : bound_) {
      const Node& n = nodes_[static_cast<std::size_t>(id)];
      p->has_grad = n.grad_ready;
      p->grad = n.grad_ready ? n.grad : Tensor();
    }
  }

  std::string label(int id) const {
    return "node " + std::to_string(id) + " (" + op_name(nodes_[static_cast<std::size_t>(id)].op) + ")";
  }

 private:
  Var push_leaf(Node n) {
    nodes_.push_back(std::move(n));
    const int id = static_cast<int>(nodes_.size()) - 1;
    if (!nodes_.back().value.all_finite()) {
      throw NumericError(label(id) + ": non-finite input value");
    }
    return Var{this, id};
  }

  static std::size_t bdim(std::size_t a, std::size_t b, bool& ok) {
    if (a == b) return a;
    if (a == 1) return b;
    if (b == 1) return a;
    ok = false;
    return 0;
  }

  template <class F>
  Tensor broadcast(int id, const Tensor& x, const Tensor& y, F f) {
    bool ok = true;
    const std::size_t r = bdim(x.rows(), y.rows(), ok);
    const std::size_t c = bdim(x.cols(), y.cols(), ok);
    if (!ok) {
      throw StructuralError(label(id) + ": cannot broadcast " + x.shape() + " with " + y.shape());
    }
    Tensor out(r, c);
    const bool xr = x.rows() == 1, xc = x.cols() == 1, yr = y.rows() == 1, yc = y.cols() == 1;
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j)
        out(i, j) = f(x(xr ? 0 : i, xc ? 0 : j), y(yr ? 0 : i, yc ? 0 : j));
    return out;
  }

  // Sums a full-shape gradient down to the operand's (possibly broadcast) shape.
  static void accumulate_reduced(Tensor& target, const Tensor& full) {
    const bool tr = target.rows() == 1 && full.rows() != 1;
    const bool tc = target.cols() == 1 && full.cols() != 1;
    for (std::size_t i = 0; i < full.rows(); ++i)
      for (std::size_t j = 0; j < full.cols(); ++j) target(tr ? 0 : i, tc ? 0 : j) += full(i, j);
  }

  Tensor& grad_slot(int id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (!n.grad_ready) {
      n.grad = Tensor(n.value.rows(), n.value.cols());
      n.grad_ready = true;
    }
    return n.grad;
  }

  bool wants_grad(int id) const { return id >= 0 && nodes_[static_cast<std::size_t>(id)].requires_grad; }

  void forward(int id, bool freeze_detached) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    const Tensor& x = nodes_[static_cast<std::size_t>(n.a)].value;
    const Tensor* y = n.b >= 0 ? &nodes_[static_cast<std::size_t>(n.b)].value : nullptr;
    Tensor out;
    switch (n.op) {
      case OpKind::input:
        return;
      case OpKind::matmul:
        if (x.cols() != y->rows()) {
          throw StructuralError(label(id) + ": shape mismatch " + x.shape() + " * " + y->shape());
        }
        out = udabench::matmul(x, *y);
        break;
      case OpKind::add:
        out = broadcast(id, x, *y, [](double p, double q) { return p + q; });
        break;
      case OpKind::sub:
        out = broadcast(id, x, *y, [](double p, double q) { return p - q; });
        break;
      case OpKind::mul:
        out = broadcast(id, x, *y, [](double p, double q) { return p * q; });
        break;
      case OpKind::div:
        out = broadcast(id, x, *y, [](double p, double q) { return p / q; });
        break;
      case OpKind::scale:
        out = map(x, [s = n.attr](double v) { return s * v; });
        break;
      case OpKind::add_scalar:
        out = map(x, [s = n.attr](double v) { return v + s; });
        break;
      case OpKind::relu:
        out = map(x, [](double v) { return v > 0.0 ? v : 0.0; });
        break;
      case OpKind::exp:
        out = map(x, [](double v) { return std::exp(v); });
        break;
      case OpKind::log:
        out = map(x, [e = n.attr](double v) { return std::log(v + e); });
        break;
      case OpKind::neg:
        out = map(x, [](double v) { return -v; });
        break;
      case OpKind::square:
        out = map(x, [](double v) { return v * v; });
        break;
      case OpKind::abs:
        out = map(x, [](double v) { return std::abs(v); });
        break;
      case OpKind::softplus:
        out = map(x, [](double v) { return std::max(v, 0.0) + std::log1p(std::exp(-std::abs(v))); });
        break;
      case OpKind::sum:
        out = Tensor::scalar(x.sum());
        break;
      case OpKind::mean:
        if (x.empty()) throw StructuralError(label(id) + ": mean of empty tensor");
        out = Tensor::scalar(x.sum() / static_cast<double>(x.size()));
        break;
      case OpKind::row_sum:
        out = Tensor(x.rows(), 1);
        for (std::size_t i = 0; i < x.rows(); ++i) {
          double s = 0.0;
          for (double v : x.row_span(i)) s += v;
          out(i, 0) = s;
        }
        break;
      case OpKind::col_sum:
        out = Tensor(1, x.cols());
        for (std::size_t i = 0; i < x.rows(); ++i)
          for (std::size_t j = 0; j < x.cols(); ++j) out(0, j) += x(i, j);
        break;
      case OpKind::row_softmax:
        out = Tensor(x.rows(), x.cols());
        for (std::size_t i = 0; i < x.rows(); ++i) {
          const auto row = x.row_span(i);
          const double mx = *std::max_element(row.begin(), row.end());
          double z = 0.0;
          for (std::size_t j = 0; j < x.cols(); ++j) z += (out(i, j) = std::exp(row[j] - mx));
          for (std::size_t j = 0; j < x.cols(); ++j) out(i, j) /= z;
        }
        break;
      case OpKind::row_log_softmax:
        out = Tensor(x.rows(), x.cols());
        for (std::size_t i = 0; i < x.rows(); ++i) {
          const auto row = x.row_span(i);
          const double mx = *std::max_element(row.begin(), row.end());
          double z = 0.0;
          for (double v : row) z += std::exp(v - mx);
          const double lse = mx + std::log(z);
          for (std::size_t j = 0; j < x.cols(); ++j) out(i, j) = row[j] - lse;
        }
        break;
      case OpKind::dropout_mask:
        out = broadcast(id, x, n.aux, [](double p, double q) { return p * q; });
        break;
      case OpKind::concat_rows: {
        if (x.cols() != y->cols()) {
          throw StructuralError(label(id) + ": column mismatch " + x.shape() + " vs " + y->shape());
        }
        std::vector<double> d = x.data();
        d.insert(d.end(), y->data().begin(), y->data().end());
        out = Tensor(x.rows() + y->rows(), x.cols(), std::move(d));
        break;
      }
      case OpKind::concat_cols:
        if (x.rows() != y->rows()) {
          throw StructuralError(label(id) + ": row mismatch " + x.shape() + " vs " + y->shape());
        }
        out = Tensor(x.rows(), x.cols() + y->cols());
        for (std::size_t i = 0; i < x.rows(); ++i) {
          for (std::size_t j = 0; j < x.cols(); ++j) out(i, j) = x(i, j);
          for (std::size_t j = 0; j < y->cols(); ++j) out(i, x.cols() + j) = (*y)(i, j);
        }
        break;
      case OpKind::svd_singular_values:
      case OpKind::nuclear_norm: {
        SvdResult r = svd(x);
        warn_degenerate(r.s);
        n.aux = std::move(r.u);
        n.aux2 = std::move(r.v);
        if (n.op == OpKind::nuclear_norm) {
          out = Tensor::scalar(std::accumulate(r.s.begin(), r.s.end(), 0.0));
        } else {
          out = Tensor::column(r.s);
        }
        break;
      }
      case OpKind::grad_reverse:
        out = x;
        break;
      case OpKind::l2_row_norm:
        out = Tensor(x.rows(), 1);
        for (std::size_t i = 0; i < x.rows(); ++i) {
          double s = 0.0;
          for (double v : x.row_span(i)) s += v * v;
          out(i, 0) = std::sqrt(s);
        }
        break;
      case OpKind::transpose:
        out = x.transposed();
        break;
      case OpKind::slice_rows:
        if (n.lo > n.hi || n.hi > x.rows()) {
          throw StructuralError(label(id) + ": row slice [" + std::to_string(n.lo) + ", " +
                                std::to_string(n.hi) + ") out of range for " + x.shape());
        }
        out = x.slice_rows(n.lo, n.hi);
        break;
      case OpKind::detach:
        if (freeze_detached && !n.value.empty()) return;
        out = x;
        break;
      case OpKind::sort_cols: {
        out = Tensor(x.rows(), x.cols());
        n.perm.assign(x.rows() * x.cols(), 0);
        std::vector<std::size_t> order(x.rows());
        for (std::size_t j = 0; j < x.cols(); ++j) {
          std::iota(order.begin(), order.end(), 0);
          std::stable_sort(order.begin(), order.end(),
                           [&](std::size_t p, std::size_t q) { return x(p, j) < x(q, j); });
          for (std::size_t k = 0; k < x.rows(); ++k) {
            out(k, j) = x(order[k], j);
            n.perm[j * x.rows() + k] = order[k];
          }
        }
        break;
      }
    }
    if (!out.all_finite()) throw NumericError(label(id) + ": non-finite value");
    n.value = std::move(out);
  }

  void backprop(int id) {
    // Copy what we need: grad_slot() may grow other nodes but never reallocates nodes_.
    Node& n = nodes_[static_cast<std::size_t>(id)];
    const Tensor& g = n.grad;
    const int a = n.a;
    const int b = n.b;
    const Tensor& x = nodes_[static_cast<std::size_t>(a)].value;
    switch (n.op) {
      case OpKind::input:
      case OpKind::detach:
        return;
      case OpKind::matmul: {
        const Tensor& y = nodes_[static_cast<std::size_t>(b)].value;
        if (wants_grad(a)) {
          Tensor ga = matmul_nt(g, y);
          add_into(grad_slot(a), ga);
        }
        if (wants_grad(b)) {
          Tensor gb = matmul_tn(x, g);
          add_into(grad_slot(b), gb);
        }
        return;
      }
      case OpKind::add:
      case OpKind::sub: {
        if (wants_grad(a)) accumulate_reduced(grad_slot(a), g);
        if (wants_grad(b)) {
          if (n.op == OpKind::sub) {
            accumulate_reduced(grad_slot(b), map(g, [](double v) { return -v; }));
          } else {
            accumulate_reduced(grad_slot(b), g);
          }
        }
        return;
      }
      case OpKind::mul:
      case OpKind::div: {
        const Tensor& y = nodes_[static_cast<std::size_t>(b)].value;
        const bool is_div = n.op == OpKind::div;
        if (wants_grad(a)) {
          Tensor full = broadcast(id, g, y, [is_div](double gv, double yv) {
            return is_div ? gv / yv : gv * yv;
          });
          accumulate_reduced(grad_slot(a), full);
        }
        if (wants_grad(b)) {
          // d(x*y)/dy = x ; d(x/y)/dy = -x/y²
          Tensor xy = broadcast(id, x, y, [is_div](double xv, double yv) {
            return is_div ? -xv / (yv * yv) : xv;
          });
          Tensor full = broadcast(id, g, xy, [](double p, double q) { return p * q; });
          accumulate_reduced(grad_slot(b), full);
        }
        return;
      }
      case OpKind::dropout_mask: {
        Tensor full = broadcast(id, g, n.aux, [](double p, double q) { return p * q; });
        accumulate_reduced(grad_slot(a), full);
        return;
      }
      default:
        break;
    }
    if (!wants_grad(a)) return;
    Tensor& ga = grad_slot(a);
    const Tensor& out = n.value;
    switch (n.op) {
      case OpKind::scale:
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += n.attr * g[i];
        break;
      case OpKind::add_scalar:
        add_into(ga, g);
        break;
      case OpKind::relu:
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += x[i] > 0.0 ? g[i] : 0.0;
        break;
      case OpKind::exp:
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * out[i];
        break;
      case OpKind::log:
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] / (x[i] + n.attr);
        break;
      case OpKind::neg:
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] -= g[i];
        break;
      case OpKind::square:
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += 2.0 * x[i] * g[i];
        break;
      case OpKind::abs:
        for (std::size_t i = 0; i < g.size(); ++i)
          ga[i] += x[i] > 0.0 ? g[i] : (x[i] < 0.0 ? -g[i] : 0.0);
        break;
      case OpKind::softplus:
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] / (1.0 + std::exp(-x[i]));
        break;
      case OpKind::sum:
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[0];
        break;
      case OpKind::mean: {
        const double s = g[0] / static_cast<double>(x.size());
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += s;
        break;
      }
      case OpKind::row_sum:
        for (std::size_t i = 0; i < x.rows(); ++i)
          for (std::size_t j = 0; j < x.cols(); ++j) ga(i, j) += g(i, 0);
        break;
      case OpKind::col_sum:
        for (std::size_t i = 0; i < x.rows(); ++i)
          for (std::size_t j = 0; j < x.cols(); ++j) ga(i, j) += g(0, j);
        break;
      case OpKind::row_softmax:
        for (std::size_t i = 0; i < x.rows(); ++i) {
          double dot = 0.0;
          for (std::size_t j = 0; j < x.cols(); ++j) dot += g(i, j) * out(i, j);
          for (std::size_t j = 0; j < x.cols(); ++j) ga(i, j) += out(i, j) * (g(i, j) - dot);
        }
        break;
      case OpKind::row_log_softmax:
        for (std::size_t i = 0; i < x.rows(); ++i) {
          double gs = 0.0;
          for (std::size_t j = 0; j < x.cols(); ++j) gs += g(i, j);
          for (std::size_t j = 0; j < x.cols(); ++j) ga(i, j) += g(i, j) - std::exp(out(i, j)) * gs;
        }
        break;
      case OpKind::concat_rows:
      case OpKind::concat_cols: {
        const Tensor& y = nodes_[static_cast<std::size_t>(b)].value;
        const bool by_rows = n.op == OpKind::concat_rows;
        for (std::size_t i = 0; i < x.rows(); ++i)
          for (std::size_t j = 0; j < x.cols(); ++j) ga(i, j) += g(i, j);
        if (wants_grad(b)) {
          Tensor& gb = grad_slot(b);
          for (std::size_t i = 0; i < y.rows(); ++i)
            for (std::size_t j = 0; j < y.cols(); ++j)
              gb(i, j) += by_rows ? g(x.rows() + i, j) : g(i, x.cols() + j);
        }
        break;
      }
      case OpKind::svd_singular_values:
      case OpKind::nuclear_norm: {
        const Tensor& u = n.aux;
        const Tensor& v = n.aux2;
        const std::size_t r = u.cols();
        for (std::size_t k = 0; k < r; ++k) {
          const double w = n.op == OpKind::nuclear_norm ? g[0] : g(k, 0);
          if (w == 0.0) continue;
          for (std::size_t i = 0; i < u.rows(); ++i) {
            const double ui = w * u(i, k);
            if (ui == 0.0) continue;
            for (std::size_t j = 0; j < v.rows(); ++j) ga(i, j) += ui * v(j, k);
          }
        }
        break;
      }
      case OpKind::grad_reverse:
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] -= n.attr * g[i];
        break;
      case OpKind::l2_row_norm:
        for (std::size_t i = 0; i < x.rows(); ++i) {
          const double norm = out(i, 0);
          if (norm == 0.0) continue;
          for (std::size_t j = 0; j < x.cols(); ++j) ga(i, j) += g(i, 0) * x(i, j) / norm;
        }
        break;
      case OpKind::transpose:
        for (std::size_t i = 0; i < x.rows(); ++i)
          for (std::size_t j = 0; j < x.cols(); ++j) ga(i, j) += g(j, i);
        break;
      case OpKind::slice_rows:
        for (std::size_t i = 0; i < g.rows(); ++i)
          for (std::size_t j = 0; j < g.cols(); ++j) ga(n.lo + i, j) += g(i, j);
        break;
      case OpKind::sort_cols:
        for (std::size_t j = 0; j < x.cols(); ++j)
          for (std::size_t k = 0; k < x.rows(); ++k) ga(n.perm[j * x.rows() + k], j) += g(k, j);
        break;
      default:
        throw StructuralError(label(id) + ": no backward rule");
    }
  }

  template <class F>
  static Tensor map(const Tensor& x, F f) {
    Tensor out(x.rows(), x.cols());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = f(x[i]);
    return out;
  }

  static void add_into(Tensor& target, const Tensor& src) {
    for (std::size_t i = 0; i < src.size(); ++i) target[i] += src[i];
  }

  static void warn_degenerate(const std::vector<double>& s) {
    static logging::RateLimitedWarning warning(5);
    for (std::size_t k = 0; k + 1 < s.size(); ++k) {
      if (s[k] > 1e-9 && s[k] - s[k + 1] < 1e-9) {
        warning("svd: near-degenerate singular values (" + std::to_string(s[k]) + ", " +
                std::to_string(s[k + 1]) + "); using subgradient u_i v_i^T");
        return;
      }
    }
  }

  std::vector<Node> nodes_;
  std::unordered_map<Parameter*, int> bound_;
};

inline const Tensor& Var::value() const { return graph->node(id).value; }
inline const Tensor& Var::grad() const { return graph->node(id).grad; }

// ---------------------------------------------------------------------------
// Operator vocabulary.

namespace detail {
inline Graph& same_graph(Var a, Var b) {
  if (a.graph == nullptr || a.graph != b.graph) throw StructuralError("operands belong to different graphs");
  return *a.graph;
}
}  // namespace detail

inline Var matmul(Var a, Var b) { return detail::same_graph(a, b).add_node(OpKind::matmul, a.id, b.id); }
inline Var add(Var a, Var b) { return detail::same_graph(a, b).add_node(OpKind::add, a.id, b.id); }
inline Var sub(Var a, Var b) { return detail::same_graph(a, b).add_node(OpKind::sub, a.id, b.id); }
inline Var mul(Var a, Var b) { return detail::same_graph(a, b).add_node(OpKind::mul, a.id, b.id); }
inline Var div(Var a, Var b) { return detail::same_graph(a, b).add_node(OpKind::div, a.id, b.id); }
inline Var scale(Var a, double s) { return a.graph->add_node(OpKind::scale, a.id, -1, s); }
inline Var add_scalar(Var a, double s) { return a.graph->add_node(OpKind::add_scalar, a.id, -1, s); }
inline Var relu(Var a) { return a.graph->add_node(OpKind::relu, a.id); }
inline Var exp(Var a) { return a.graph->add_node(OpKind::exp, a.id); }
/// log(a + eps); probabilities are logged with eps = 1e-12 throughout the library.
inline Var log(Var a, double eps = 0.0) { return a.graph->add_node(OpKind::log, a.id, -1, eps); }
inline Var neg(Var a) { return a.graph->add_node(OpKind::neg, a.id); }
inline Var square(Var a) { return a.graph->add_node(OpKind::square, a.id); }
inline Var abs(Var a) { return a.graph->add_node(OpKind::abs, a.id); }
inline Var softplus(Var a) { return a.graph->add_node(OpKind::softplus, a.id); }
inline Var sum(Var a) { return a.graph->add_node(OpKind::sum, a.id); }
inline Var mean(Var a) { return a.graph->add_node(OpKind::mean, a.id); }
inline Var row_sum(Var a) { return a.graph->add_node(OpKind::row_sum, a.id); }
inline Var col_sum(Var a) { return a.graph->add_node(OpKind::col_sum, a.id); }
inline Var col_mean(Var a) { return scale(col_sum(a), 1.0 / static_cast<double>(a.rows())); }
inline Var row_softmax(Var a) { return a.graph->add_node(OpKind::row_softmax, a.id); }
inline Var row_log_softmax(Var a) { return a.graph->add_node(OpKind::row_log_softmax, a.id); }
inline Var concat_rows(Var a, Var b) { return detail::same_graph(a, b).add_node(OpKind::concat_rows, a.id, b.id); }
inline Var concat_cols(Var a, Var b) { return detail::same_graph(a, b).add_node(OpKind::concat_cols, a.id, b.id); }
/// Singular values as a column vector, descending.
inline Var svd_values(Var a) { return a.graph->add_node(OpKind::svd_singular_values, a.id); }
inline Var nuclear_norm(Var a) { return a.graph->add_node(OpKind::nuclear_norm, a.id); }
/// Identity forward; multiplies the incoming gradient by -lambda.
inline Var grad_reverse(Var a, double lambda) {
  if (!(lambda > 0.0)) throw ConfigError("grad_reverse: lambda must be positive");
  return a.graph->add_node(OpKind::grad_reverse, a.id, -1, lambda);
}
inline Var l2_row_norm(Var a) { return a.graph->add_node(OpKind::l2_row_norm, a.id); }
inline Var transpose(Var a) { return a.graph->add_node(OpKind::transpose, a.id); }
inline Var slice_rows(Var a, std::size_t begin, std::size_t end) {
  return a.graph->add_node(OpKind::slice_rows, a.id, -1, 0.0, begin, end);
}
inline Var detach(Var a) { return a.graph->add_node(OpKind::detach, a.id); }
inline Var sort_cols(Var a) { return a.graph->add_node(OpKind::sort_cols, a.id); }
/// Training-mode dropout; pass training=false (or p=0) for the identity.
inline Var dropout(Var a, double p, Rng& rng, bool training) {
  if (!training || p <= 0.0) return a;
  if (p >= 1.0) throw ConfigError("dropout probability must be < 1");
  return a.graph->dropout(a, p, rng);
}
inline Var constant(Graph& g, Tensor t) { return g.input(std::move(t), false); }

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }
inline Var operator/(Var a, Var b) { return div(a, b); }
inline Var operator-(Var a) { return neg(a); }
inline Var operator*(double s, Var a) { return scale(a, s); }
inline Var operator*(Var a, double s) { return scale(a, s); }

}  // namespace udabench
