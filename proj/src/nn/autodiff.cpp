#include "gtamp/nn/autodiff.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

namespace gtamp::nn {

namespace detail {

enum class Op {
  Leaf, Constant, Add, AddRowVec, AddScalar, Sub, Neg, Mul, Scale, MatMul, Transpose,
  Tanh, Relu, Softplus, Sigmoid, Exp, Sqrt, Reciprocal, SumAll, SumRows,
  BroadcastScalar, BroadcastRows, ConcatCols, SliceCols,
};

struct Node {
  Op op;
  Tensor value;
  std::vector<std::shared_ptr<Node>> inputs;
  double attr = 0.0;  // scalar for Scale/AddScalar
  int a0 = 0, a1 = 0; // slice bounds / broadcast dims
  std::uint64_t id = 0;
};

namespace {
std::atomic<std::uint64_t> next_id{1};
}

}  // namespace detail

using detail::Node;
using detail::Op;

namespace {

void check_finite(const Tensor& t, const char* where) {
  for (double v : t.data)
    if (!std::isfinite(v)) throw NonFiniteValue(std::string("non-finite value in ") + where);
}

Var make(Op op, Tensor value, std::vector<std::shared_ptr<Node>> inputs, double attr = 0.0,
         int a0 = 0, int a1 = 0, const char* name = "op") {
  check_finite(value, name);
  auto n = std::make_shared<Node>();
  n->op = op;
  n->value = std::move(value);
  n->inputs = std::move(inputs);
  n->attr = attr;
  n->a0 = a0;
  n->a1 = a1;
  n->id = detail::next_id.fetch_add(1);
  return Var(std::move(n));
}

void require_same_shape(const Var& a, const Var& b, const char* op) {
  if (!a.value().same_shape(b.value()))
    throw std::invalid_argument(std::string(op) + ": shape mismatch");
}

}  // namespace

const Tensor& Var::value() const {
  if (!node_) throw std::logic_error("empty Var");
  return node_->value;
}

double Var::scalar() const {
  const Tensor& t = value();
  if (t.rows != 1 || t.cols != 1) throw NonScalarOutput("expected 1x1 tensor");
  return t.data[0];
}

Var leaf(Tensor value) { return make(Op::Leaf, std::move(value), {}, 0, 0, 0, "leaf"); }
Var constant(Tensor value) { return make(Op::Constant, std::move(value), {}, 0, 0, 0, "constant"); }
Var constant_scalar(double v) {
  Tensor t(1, 1);
  t.data[0] = v;
  return constant(std::move(t));
}

Var add(const Var& a, const Var& b) {
  require_same_shape(a, b, "add");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out.data[i] += b.value().data[i];
  return make(Op::Add, std::move(out), {a.ptr(), b.ptr()}, 0, 0, 0, "add");
}

Var add_rowvec(const Var& a, const Var& b) {
  const Tensor& bv = b.value();
  if (bv.rows != 1 || bv.cols != a.cols()) throw std::invalid_argument("add_rowvec: bad shapes");
  Tensor out = a.value();
  for (int r = 0; r < out.rows; ++r)
    for (int c = 0; c < out.cols; ++c) out.at(r, c) += bv.at(0, c);
  return make(Op::AddRowVec, std::move(out), {a.ptr(), b.ptr()}, 0, 0, 0, "add_rowvec");
}

Var add_scalar(const Var& a, double c) {
  Tensor out = a.value();
  for (double& v : out.data) v += c;
  return make(Op::AddScalar, std::move(out), {a.ptr()}, c, 0, 0, "add_scalar");
}

Var sub(const Var& a, const Var& b) {
  require_same_shape(a, b, "sub");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out.data[i] -= b.value().data[i];
  return make(Op::Sub, std::move(out), {a.ptr(), b.ptr()}, 0, 0, 0, "sub");
}

Var neg(const Var& a) {
  Tensor out = a.value();
  for (double& v : out.data) v = -v;
  return make(Op::Neg, std::move(out), {a.ptr()}, 0, 0, 0, "neg");
}

Var mul(const Var& a, const Var& b) {
  require_same_shape(a, b, "mul");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out.data[i] *= b.value().data[i];
  return make(Op::Mul, std::move(out), {a.ptr(), b.ptr()}, 0, 0, 0, "mul");
}

Var scale(const Var& a, double c) {
  Tensor out = a.value();
  for (double& v : out.data) v *= c;
  return make(Op::Scale, std::move(out), {a.ptr()}, c, 0, 0, "scale");
}

Var matmul(const Var& a, const Var& b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.cols != bv.rows) throw std::invalid_argument("matmul: inner dims mismatch");
  Tensor out(av.rows, bv.cols, 0.0);
  for (int i = 0; i < av.rows; ++i) {
    for (int k = 0; k < av.cols; ++k) {
      double aik = av.at(i, k);
      if (aik == 0.0) continue;
      const double* brow = &bv.data[static_cast<std::size_t>(k) * bv.cols];
      double* orow = &out.data[static_cast<std::size_t>(i) * out.cols];
      for (int j = 0; j < bv.cols; ++j) orow[j] += aik * brow[j];
    }
  }
  return make(Op::MatMul, std::move(out), {a.ptr(), b.ptr()}, 0, 0, 0, "matmul");
}

Var transpose(const Var& a) {
  const Tensor& av = a.value();
  Tensor out(av.cols, av.rows);
  for (int r = 0; r < av.rows; ++r)
    for (int c = 0; c < av.cols; ++c) out.at(c, r) = av.at(r, c);
  return make(Op::Transpose, std::move(out), {a.ptr()}, 0, 0, 0, "transpose");
}

Var tanh(const Var& a) {
  Tensor out = a.value();
  for (double& v : out.data) v = std::tanh(v);
  return make(Op::Tanh, std::move(out), {a.ptr()}, 0, 0, 0, "tanh");
}

Var relu(const Var& a) {
  Tensor out = a.value();
  for (double& v : out.data) v = v > 0 ? v : 0.0;
  return make(Op::Relu, std::move(out), {a.ptr()}, 0, 0, 0, "relu");
}

Var softplus(const Var& a) {
  Tensor out = a.value();
  for (double& v : out.data) v = v > 30.0 ? v : std::log1p(std::exp(v));
  return make(Op::Softplus, std::move(out), {a.ptr()}, 0, 0, 0, "softplus");
}

Var sigmoid(const Var& a) {
  Tensor out = a.value();
  for (double& v : out.data) v = v >= 0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
  return make(Op::Sigmoid, std::move(out), {a.ptr()}, 0, 0, 0, "sigmoid");
}

Var exp(const Var& a) {
  Tensor out = a.value();
  for (double& v : out.data) v = std::exp(v);
  return make(Op::Exp, std::move(out), {a.ptr()}, 0, 0, 0, "exp");
}

Var sqrt(const Var& a) {
  Tensor out = a.value();
  for (double& v : out.data) v = std::sqrt(v);
  return make(Op::Sqrt, std::move(out), {a.ptr()}, 0, 0, 0, "sqrt");
}

Var reciprocal(const Var& a) {
  Tensor out = a.value();
  for (double& v : out.data) v = 1.0 / v;
  return make(Op::Reciprocal, std::move(out), {a.ptr()}, 0, 0, 0, "reciprocal");
}

Var square(const Var& a) { return mul(a, a); }

Var sum_all(const Var& a) {
  Tensor out(1, 1);
  double s = 0.0;
  for (double v : a.value().data) s += v;
  out.data[0] = s;
  return make(Op::SumAll, std::move(out), {a.ptr()}, 0, a.rows(), a.cols(), "sum_all");
}

Var sum_rows(const Var& a) {
  const Tensor& av = a.value();
  Tensor out(1, av.cols, 0.0);
  for (int r = 0; r < av.rows; ++r)
    for (int c = 0; c < av.cols; ++c) out.at(0, c) += av.at(r, c);
  return make(Op::SumRows, std::move(out), {a.ptr()}, 0, av.rows, av.cols, "sum_rows");
}

Var mean_all(const Var& a) {
  return scale(sum_all(a), 1.0 / static_cast<double>(a.value().size()));
}

Var broadcast_scalar(const Var& a, int r, int c) {
  if (a.rows() != 1 || a.cols() != 1) throw std::invalid_argument("broadcast_scalar: need 1x1");
  Tensor out(r, c, a.value().data[0]);
  return make(Op::BroadcastScalar, std::move(out), {a.ptr()}, 0, r, c, "broadcast_scalar");
}

Var broadcast_rows(const Var& a, int r) {
  const Tensor& av = a.value();
  if (av.rows != 1) throw std::invalid_argument("broadcast_rows: need row vector");
  Tensor out(r, av.cols);
  for (int i = 0; i < r; ++i)
    for (int c = 0; c < av.cols; ++c) out.at(i, c) = av.at(0, c);
  return make(Op::BroadcastRows, std::move(out), {a.ptr()}, 0, r, av.cols, "broadcast_rows");
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: empty");
  int rows = parts[0].rows();
  int cols = 0;
  for (const Var& p : parts) {
    if (p.rows() != rows) throw std::invalid_argument("concat_cols: row mismatch");
    cols += p.cols();
  }
  Tensor out(rows, cols);
  int off = 0;
  std::vector<std::shared_ptr<Node>> inputs;
  for (const Var& p : parts) {
    const Tensor& pv = p.value();
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < pv.cols; ++c) out.at(r, off + c) = pv.at(r, c);
    off += pv.cols;
    inputs.push_back(p.ptr());
  }
  return make(Op::ConcatCols, std::move(out), std::move(inputs), 0, 0, 0, "concat_cols");
}

Var slice_cols(const Var& a, int c0, int c1) {
  const Tensor& av = a.value();
  if (c0 < 0 || c1 > av.cols || c0 >= c1) throw std::invalid_argument("slice_cols: bad bounds");
  Tensor out(av.rows, c1 - c0);
  for (int r = 0; r < av.rows; ++r)
    for (int c = c0; c < c1; ++c) out.at(r, c - c0) = av.at(r, c);
  return make(Op::SliceCols, std::move(out), {a.ptr()}, 0, c0, c1, "slice_cols");
}

Var pick(const Var& a, int r, int c) {
  Tensor onehot(a.rows(), a.cols(), 0.0);
  onehot.at(r, c) = 1.0;
  return sum_all(mul(a, constant(std::move(onehot))));
}

namespace {

// Emits the vector-Jacobian product for each input of n as graph nodes.
std::vector<Var> vjp(const std::shared_ptr<Node>& n, const Var& g) {
  Var self(n);
  switch (n->op) {
    case Op::Leaf:
    case Op::Constant:
      return {};
    case Op::Add:
      return {g, g};
    case Op::AddRowVec:
      return {g, sum_rows(g)};
    case Op::AddScalar:
      return {g};
    case Op::Sub:
      return {g, neg(g)};
    case Op::Neg:
      return {neg(g)};
    case Op::Mul:
      return {mul(g, Var(n->inputs[1])), mul(g, Var(n->inputs[0]))};
    case Op::Scale:
      return {scale(g, n->attr)};
    case Op::MatMul:
      return {matmul(g, transpose(Var(n->inputs[1]))), matmul(transpose(Var(n->inputs[0])), g)};
    case Op::Transpose:
      return {transpose(g)};
    case Op::Tanh:
      return {mul(g, add_scalar(neg(square(self)), 1.0))};
    case Op::Relu: {
      Tensor mask = n->inputs[0]->value;
      for (double& v : mask.data) v = v > 0 ? 1.0 : 0.0;
      return {mul(g, constant(std::move(mask)))};
    }
    case Op::Softplus:
      return {mul(g, sigmoid(Var(n->inputs[0])))};
    case Op::Sigmoid:
      return {mul(g, mul(self, add_scalar(neg(self), 1.0)))};
    case Op::Exp:
      return {mul(g, self)};
    case Op::Sqrt:
      return {mul(g, scale(reciprocal(self), 0.5))};
    case Op::Reciprocal:
      return {neg(mul(g, square(self)))};
    case Op::SumAll:
      return {broadcast_scalar(g, n->a0, n->a1)};
    case Op::SumRows:
      return {broadcast_rows(g, n->a0)};
    case Op::BroadcastScalar:
      return {sum_all(g)};
    case Op::BroadcastRows:
      return {sum_rows(g)};
    case Op::ConcatCols: {
      std::vector<Var> grads;
      int off = 0;
      for (const auto& in : n->inputs) {
        grads.push_back(slice_cols(g, off, off + in->value.cols));
        off += in->value.cols;
      }
      return grads;
    }
    case Op::SliceCols: {
      const Tensor& iv = n->inputs[0]->value;
      std::vector<Var> parts;
      if (n->a0 > 0) parts.push_back(constant(Tensor(iv.rows, n->a0, 0.0)));
      parts.push_back(g);
      if (n->a1 < iv.cols) parts.push_back(constant(Tensor(iv.rows, iv.cols - n->a1, 0.0)));
      return {parts.size() == 1 ? g : concat_cols(parts)};
    }
  }
  throw std::logic_error("vjp: unhandled op");
}

}  // namespace

std::vector<Var> grad_graph(const Var& output, const std::vector<Var>& wrt) {
  if (output.rows() != 1 || output.cols() != 1)
    throw NonScalarOutput("grad: output must be scalar");

  // Nodes that lead to some wrt entry.
  std::unordered_set<Node*> targets;
  for (const Var& w : wrt) targets.insert(w.raw());
  std::unordered_map<Node*, bool> needed;
  auto is_needed = [&](auto&& rec, Node* n) -> bool {
    auto it = needed.find(n);
    if (it != needed.end()) return it->second;
    needed[n] = false;  // break cycles (graph is a DAG; this is just memo init)
    bool res = targets.count(n) > 0;
    for (const auto& in : n->inputs)
      if (rec(rec, in.get())) res = true;
    needed[n] = res;
    return res;
  };
  is_needed(is_needed, output.raw());

  // Reverse topological order by creation id.
  std::vector<std::shared_ptr<Node>> order;
  std::unordered_set<Node*> seen;
  auto collect = [&](auto&& rec, const std::shared_ptr<Node>& n) -> void {
    if (!seen.insert(n.get()).second) return;
    if (!needed.count(n.get()) || !needed[n.get()]) return;
    order.push_back(n);
    for (const auto& in : n->inputs) rec(rec, in);
  };
  collect(collect, output.ptr());
  std::sort(order.begin(), order.end(),
            [](const auto& a, const auto& b) { return a->id > b->id; });

  std::unordered_map<Node*, Var> grads;
  grads[output.raw()] = constant_scalar(1.0);

  for (const auto& n : order) {
    auto git = grads.find(n.get());
    if (git == grads.end()) continue;
    const Var& g = git->second;
    if (n->inputs.empty()) continue;
    std::vector<Var> input_grads = vjp(n, g);
    for (std::size_t i = 0; i < n->inputs.size(); ++i) {
      Node* in = n->inputs[i].get();
      if (!needed.count(in) || !needed[in]) continue;
      auto it = grads.find(in);
      if (it == grads.end())
        grads[in] = input_grads[i];
      else
        it->second = add(it->second, input_grads[i]);
    }
  }

  std::vector<Var> out;
  out.reserve(wrt.size());
  for (const Var& w : wrt) {
    auto it = grads.find(w.raw());
    if (it != grads.end())
      out.push_back(it->second);
    else
      out.push_back(constant(Tensor(w.rows(), w.cols(), 0.0)));
  }
  return out;
}

std::vector<Tensor> grad(const Var& output, const std::vector<Var>& wrt) {
  std::vector<Var> g = grad_graph(output, wrt);
  std::vector<Tensor> out;
  out.reserve(g.size());
  for (const Var& v : g) out.push_back(v.value());
  return out;
}

}  // namespace gtamp::nn
