#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gtamp/nn/autodiff.hpp"
#include "gtamp/util.hpp"

namespace gtamp::nn {

enum class Activation { Tanh, Softplus, Relu, Linear };

std::string activation_name(Activation a);
Activation activation_from_name(const std::string& name);

// Fully connected net; parameters owned as plain tensors. Training binds
// them as graph leaves per step, inference uses the plain-math path.
class Mlp {
 public:
  Mlp() = default;
  // widths = [in, hidden..., out]; hidden activation applies between layers.
  Mlp(std::vector<int> widths, Activation hidden, Activation output, Rng& rng);

  int input_width() const { return widths_.front(); }
  int output_width() const { return widths_.back(); }
  int n_layers() const { return static_cast<int>(widths_.size()) - 1; }
  Activation hidden_activation() const { return hidden_; }

  // Plain forward pass (no graph); x is row-major batch x in.
  Tensor forward(const Tensor& x) const;
  std::vector<double> forward1(const std::vector<double>& x) const;

  // Graph forward using the given parameter leaves (from bind()).
  Var forward_graph(const Var& x, const std::vector<Var>& params) const;

  // Parameter leaves in a fixed order: W0, b0, W1, b1, ...
  std::vector<Var> bind() const;
  std::vector<Tensor*> param_tensors();
  std::vector<const Tensor*> param_tensors() const;

 private:
  std::vector<int> widths_;
  Activation hidden_ = Activation::Tanh;
  Activation output_ = Activation::Linear;
  std::vector<Tensor> weights_;
  std::vector<Tensor> biases_;

  friend struct MlpSerializer;
};

struct MlpSerializer {
  static void save(const Mlp& m, class CheckpointWriter& w, const std::string& prefix);
  static Mlp load(class CheckpointReader& r, const std::string& prefix);
};

// Gradient of a scalar-output net with respect to its input, returned as a
// graph node so it can be differentiated again (for the gradient penalty).
// Throws NonSmoothActivation when the net uses relu.
Var input_gradient(const Mlp& net, const Var& x, const std::vector<Var>& params);

// Standard bias-corrected Adam over a flat list of parameter tensors.
class Adam {
 public:
  explicit Adam(double lr = 1e-4, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(const std::vector<Tensor*>& params, const std::vector<Tensor>& grads);
  std::int64_t steps() const { return t_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  std::int64_t t_ = 0;
  std::vector<Tensor> m_, v_;
};

// Flat named-tensor checkpoint files (JSON); reload is bit-exact.
class CheckpointWriter {
 public:
  void add(const std::string& name, const Tensor& t);
  void add_meta(const std::string& key, const std::string& value);
  void save(const std::string& path) const;
  std::string to_json() const;

 private:
  std::vector<std::pair<std::string, Tensor>> tensors_;
  std::vector<std::pair<std::string, std::string>> meta_;
};

class CheckpointReader {
 public:
  explicit CheckpointReader(const std::string& json_text);
  static CheckpointReader from_file(const std::string& path);

  bool has(const std::string& name) const;
  const Tensor& get(const std::string& name) const;
  std::string meta(const std::string& key) const;
  std::vector<std::string> names_with_prefix(const std::string& prefix) const;

 private:
  std::vector<std::pair<std::string, Tensor>> tensors_;
  std::vector<std::pair<std::string, std::string>> meta_;
};

}  // namespace gtamp::nn
