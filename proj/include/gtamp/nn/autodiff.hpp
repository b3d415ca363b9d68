#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace gtamp::nn {

// Dense row-major matrix of doubles. Scalars are 1x1.
struct Tensor {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Tensor() = default;
  Tensor(int r, int c, double fill = 0.0) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, fill) {}

  double& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }
  std::size_t size() const { return data.size(); }
  bool same_shape(const Tensor& o) const { return rows == o.rows && cols == o.cols; }
};

class NonScalarOutput : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NonFiniteValue : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NonSmoothActivation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {
struct Node;
}

// Handle to a node in the eagerly evaluated computation graph. Values are
// computed at construction; backward() emits gradient nodes built from the
// same op set, so gradients can be differentiated again (double backprop).
class Var {
 public:
  Var() = default;
  explicit Var(std::shared_ptr<detail::Node> n) : node_(std::move(n)) {}

  const Tensor& value() const;
  int rows() const { return value().rows; }
  int cols() const { return value().cols; }
  double scalar() const;
  bool valid() const { return node_ != nullptr; }
  detail::Node* raw() const { return node_.get(); }
  std::shared_ptr<detail::Node> ptr() const { return node_; }

 private:
  std::shared_ptr<detail::Node> node_;
};

Var leaf(Tensor value);
Var constant(Tensor value);
Var constant_scalar(double v);

Var add(const Var& a, const Var& b);
Var add_rowvec(const Var& a, const Var& b);  // (m x n) + (1 x n)
Var add_scalar(const Var& a, double c);
Var sub(const Var& a, const Var& b);
Var neg(const Var& a);
Var mul(const Var& a, const Var& b);  // elementwise
Var scale(const Var& a, double c);
Var matmul(const Var& a, const Var& b);
Var transpose(const Var& a);
Var tanh(const Var& a);
Var relu(const Var& a);
Var softplus(const Var& a);
Var sigmoid(const Var& a);
Var exp(const Var& a);
Var sqrt(const Var& a);
Var reciprocal(const Var& a);
Var square(const Var& a);
Var sum_all(const Var& a);                        // -> 1x1
Var sum_rows(const Var& a);                       // (m x n) -> 1 x n
Var mean_all(const Var& a);                       // -> 1x1
Var broadcast_scalar(const Var& a, int r, int c); // 1x1 -> r x c
Var broadcast_rows(const Var& a, int r);          // 1 x n -> r x n
Var concat_cols(const std::vector<Var>& parts);
Var slice_cols(const Var& a, int c0, int c1);     // columns [c0, c1)
Var pick(const Var& a, int r, int c);             // -> 1x1

// Reverse-mode gradients of a 1x1 output with respect to wrt. The returned
// Vars are graph nodes, so any scalar function of them can be differentiated
// again. Unreachable wrt entries yield zero tensors.
std::vector<Var> grad_graph(const Var& output, const std::vector<Var>& wrt);
std::vector<Tensor> grad(const Var& output, const std::vector<Var>& wrt);

}  // namespace gtamp::nn
