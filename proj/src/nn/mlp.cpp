#include "gtamp/nn/mlp.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace gtamp::nn {

using nlohmann::json;

std::string activation_name(Activation a) {
  switch (a) {
    case Activation::Tanh: return "tanh";
    case Activation::Softplus: return "softplus";
    case Activation::Relu: return "relu";
    case Activation::Linear: return "linear";
  }
  throw std::logic_error("bad activation");
}

Activation activation_from_name(const std::string& name) {
  if (name == "tanh") return Activation::Tanh;
  if (name == "softplus") return Activation::Softplus;
  if (name == "relu") return Activation::Relu;
  if (name == "linear") return Activation::Linear;
  throw std::invalid_argument("unknown activation: " + name);
}

Mlp::Mlp(std::vector<int> widths, Activation hidden, Activation output, Rng& rng)
    : widths_(std::move(widths)), hidden_(hidden), output_(output) {
  if (widths_.size() < 2) throw std::invalid_argument("Mlp: need at least in/out widths");
  for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
    int in = widths_[l], out = widths_[l + 1];
    Tensor w(in, out);
    double s = std::sqrt(2.0 / (in + out));
    for (double& v : w.data) v = s * rng.normal();
    weights_.push_back(std::move(w));
    biases_.push_back(Tensor(1, out, 0.0));
  }
}

namespace {

void apply_activation(Tensor& t, Activation a) {
  switch (a) {
    case Activation::Tanh:
      for (double& v : t.data) v = std::tanh(v);
      return;
    case Activation::Softplus:
      for (double& v : t.data) v = v > 30.0 ? v : std::log1p(std::exp(v));
      return;
    case Activation::Relu:
      for (double& v : t.data) v = v > 0 ? v : 0.0;
      return;
    case Activation::Linear:
      return;
  }
}

Var apply_activation(const Var& x, Activation a) {
  switch (a) {
    case Activation::Tanh: return tanh(x);
    case Activation::Softplus: return softplus(x);
    case Activation::Relu: return relu(x);
    case Activation::Linear: return x;
  }
  throw std::logic_error("bad activation");
}

}  // namespace

Tensor Mlp::forward(const Tensor& x) const {
  if (x.cols != input_width()) throw std::invalid_argument("Mlp::forward: bad input width");
  Tensor h = x;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    const Tensor& w = weights_[l];
    Tensor next(h.rows, w.cols, 0.0);
    for (int i = 0; i < h.rows; ++i)
      for (int k = 0; k < h.cols; ++k) {
        double hik = h.at(i, k);
        if (hik == 0.0) continue;
        for (int j = 0; j < w.cols; ++j) next.at(i, j) += hik * w.at(k, j);
      }
    for (int i = 0; i < next.rows; ++i)
      for (int j = 0; j < next.cols; ++j) next.at(i, j) += biases_[l].at(0, j);
    apply_activation(next, l + 1 == weights_.size() ? output_ : hidden_);
    h = std::move(next);
  }
  return h;
}

std::vector<double> Mlp::forward1(const std::vector<double>& x) const {
  Tensor t(1, static_cast<int>(x.size()));
  t.data = x;
  return forward(t).data;
}

Var Mlp::forward_graph(const Var& x, const std::vector<Var>& params) const {
  if (params.size() != weights_.size() * 2) throw std::invalid_argument("Mlp: bad param count");
  Var h = x;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    h = add_rowvec(matmul(h, params[2 * l]), params[2 * l + 1]);
    h = apply_activation(h, l + 1 == weights_.size() ? output_ : hidden_);
  }
  return h;
}

std::vector<Var> Mlp::bind() const {
  std::vector<Var> out;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    out.push_back(leaf(weights_[l]));
    out.push_back(leaf(biases_[l]));
  }
  return out;
}

std::vector<Tensor*> Mlp::param_tensors() {
  std::vector<Tensor*> out;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    out.push_back(&weights_[l]);
    out.push_back(&biases_[l]);
  }
  return out;
}

std::vector<const Tensor*> Mlp::param_tensors() const {
  std::vector<const Tensor*> out;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    out.push_back(&weights_[l]);
    out.push_back(&biases_[l]);
  }
  return out;
}

Var input_gradient(const Mlp& net, const Var& x, const std::vector<Var>& params) {
  if (net.hidden_activation() == Activation::Relu)
    throw NonSmoothActivation("input_gradient: relu is not twice differentiable");
  Var y = net.forward_graph(x, params);
  if (y.cols() != 1 || y.rows() != 1)
    throw NonScalarOutput("input_gradient: net output must be scalar");
  return grad_graph(y, {x})[0];
}

void Adam::step(const std::vector<Tensor*>& params, const std::vector<Tensor>& grads) {
  if (params.size() != grads.size()) throw std::invalid_argument("Adam: size mismatch");
  if (m_.empty()) {
    for (const Tensor* p : params) {
      m_.emplace_back(p->rows, p->cols, 0.0);
      v_.emplace_back(p->rows, p->cols, 0.0);
    }
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = *params[i];
    const Tensor& g = grads[i];
    if (!p.same_shape(g)) throw std::invalid_argument("Adam: grad shape mismatch");
    for (std::size_t k = 0; k < p.size(); ++k) {
      m_[i].data[k] = beta1_ * m_[i].data[k] + (1.0 - beta1_) * g.data[k];
      v_[i].data[k] = beta2_ * v_[i].data[k] + (1.0 - beta2_) * g.data[k] * g.data[k];
      double mhat = m_[i].data[k] / bc1;
      double vhat = v_[i].data[k] / bc2;
      p.data[k] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
    }
  }
}

void CheckpointWriter::add(const std::string& name, const Tensor& t) {
  tensors_.emplace_back(name, t);
}

void CheckpointWriter::add_meta(const std::string& key, const std::string& value) {
  meta_.emplace_back(key, value);
}

std::string CheckpointWriter::to_json() const {
  json j;
  j["format"] = "gtamp-checkpoint-v1";
  json meta = json::object();
  for (const auto& [k, v] : meta_) meta[k] = v;
  j["meta"] = meta;
  json tensors = json::array();
  for (const auto& [name, t] : tensors_) {
    json tj;
    tj["name"] = name;
    tj["rows"] = t.rows;
    tj["cols"] = t.cols;
    tj["data"] = t.data;
    tensors.push_back(tj);
  }
  j["tensors"] = tensors;
  return j.dump() + "\n";
}

void CheckpointWriter::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << to_json();
}

CheckpointReader::CheckpointReader(const std::string& json_text) {
  json j = json::parse(json_text);
  if (j.at("format") != "gtamp-checkpoint-v1")
    throw std::runtime_error("unsupported checkpoint format");
  for (auto it = j.at("meta").begin(); it != j.at("meta").end(); ++it)
    meta_.emplace_back(it.key(), it.value().get<std::string>());
  for (const auto& tj : j.at("tensors")) {
    Tensor t(tj.at("rows").get<int>(), tj.at("cols").get<int>());
    t.data = tj.at("data").get<std::vector<double>>();
    if (t.data.size() != static_cast<std::size_t>(t.rows) * t.cols)
      throw std::runtime_error("checkpoint tensor size mismatch");
    tensors_.emplace_back(tj.at("name").get<std::string>(), std::move(t));
  }
}

CheckpointReader CheckpointReader::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return CheckpointReader(ss.str());
}

bool CheckpointReader::has(const std::string& name) const {
  for (const auto& [n, t] : tensors_)
    if (n == name) return true;
  return false;
}

const Tensor& CheckpointReader::get(const std::string& name) const {
  for (const auto& [n, t] : tensors_)
    if (n == name) return t;
  throw std::out_of_range("checkpoint tensor not found: " + name);
}

std::string CheckpointReader::meta(const std::string& key) const {
  for (const auto& [k, v] : meta_)
    if (k == key) return v;
  throw std::out_of_range("checkpoint meta not found: " + key);
}

std::vector<std::string> CheckpointReader::names_with_prefix(const std::string& prefix) const {
  std::vector<std::string> out;
  for (const auto& [n, t] : tensors_)
    if (n.rfind(prefix, 0) == 0) out.push_back(n);
  return out;
}

void MlpSerializer::save(const Mlp& m, CheckpointWriter& w, const std::string& prefix) {
  json widths = json::array();
  for (int x : m.widths_) widths.push_back(x);
  w.add_meta(prefix + ".widths", widths.dump());
  w.add_meta(prefix + ".hidden", activation_name(m.hidden_));
  w.add_meta(prefix + ".output", activation_name(m.output_));
  for (std::size_t l = 0; l < m.weights_.size(); ++l) {
    w.add(prefix + ".w" + std::to_string(l), m.weights_[l]);
    w.add(prefix + ".b" + std::to_string(l), m.biases_[l]);
  }
}

Mlp MlpSerializer::load(CheckpointReader& r, const std::string& prefix) {
  Mlp m;
  for (const auto& wj : json::parse(r.meta(prefix + ".widths"))) m.widths_.push_back(wj.get<int>());
  m.hidden_ = activation_from_name(r.meta(prefix + ".hidden"));
  m.output_ = activation_from_name(r.meta(prefix + ".output"));
  for (std::size_t l = 0; l + 1 < m.widths_.size(); ++l) {
    m.weights_.push_back(r.get(prefix + ".w" + std::to_string(l)));
    m.biases_.push_back(r.get(prefix + ".b" + std::to_string(l)));
  }
  return m;
}

}  // namespace gtamp::nn
