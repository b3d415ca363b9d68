#include "gtamp/ranknet.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace gtamp {

using nn::Mlp;
using nn::Tensor;
using nn::Var;

RankNet::RankNet(int d_m, int hidden, Rng& rng) : d_m_(d_m) {
  theta1_ = Mlp({d_m, hidden, d_m}, nn::Activation::Tanh, nn::Activation::Linear, rng);
  theta2_ = Mlp({d_m, hidden, d_m}, nn::Activation::Tanh, nn::Activation::Linear, rng);
  theta3_ = Mlp({kEdgeFeatureWidth, hidden, d_m}, nn::Activation::Tanh, nn::Activation::Linear, rng);
  theta4_ = Mlp({3 * d_m, hidden, d_m}, nn::Activation::Tanh, nn::Activation::Linear, rng);
  theta5_ = Mlp({d_m, hidden, 1}, nn::Activation::Tanh, nn::Activation::Linear, rng);
}

namespace {

// Node features zero-padded to d_m, one row per object.
Tensor padded_nodes(const SceneGraph& g, int d_m) {
  Tensor out(g.n_obj, d_m, 0.0);
  for (int i = 0; i < g.n_obj; ++i)
    for (int f = 0; f < kNodeFeatureWidth; ++f) out.at(i, f) = g.node(i, f);
  return out;
}

Tensor edge_matrix(const SceneGraph& g) {
  const int e = g.n_obj * g.n_obj * g.n_reg;
  Tensor out(e, kEdgeFeatureWidth);
  out.data = g.edge_feats;
  return out;
}

// Row selection matrices: sender index i and receiver index j per edge row.
Tensor sender_select(const SceneGraph& g) {
  const int e = g.n_obj * g.n_obj * g.n_reg;
  Tensor s(e, g.n_obj, 0.0);
  int row = 0;
  for (int i = 0; i < g.n_obj; ++i)
    for (int j = 0; j < g.n_obj; ++j)
      for (int k = 0; k < g.n_reg; ++k) s.at(row++, i) = 1.0;
  return s;
}

Tensor receiver_select(const SceneGraph& g) {
  const int e = g.n_obj * g.n_obj * g.n_reg;
  Tensor s(e, g.n_obj, 0.0);
  int row = 0;
  for (int i = 0; i < g.n_obj; ++i)
    for (int j = 0; j < g.n_obj; ++j)
      for (int k = 0; k < g.n_reg; ++k) s.at(row++, j) = 1.0;
  return s;
}

// Aggregation of edge messages into per-receiver rows, averaged across
// components with the 1/(n_obj + n_reg) normalizer.
Tensor agg_receiver(const SceneGraph& g) {
  const int e = g.n_obj * g.n_obj * g.n_reg;
  Tensor a(g.n_obj, e, 0.0);
  const double w = 1.0 / (g.n_obj + g.n_reg);
  int row = 0;
  for (int i = 0; i < g.n_obj; ++i)
    for (int j = 0; j < g.n_obj; ++j)
      for (int k = 0; k < g.n_reg; ++k) a.at(j, row++) = w;
  return a;
}

// Per (receiver, region) aggregation over senders with 1/n_obj.
Tensor agg_pair(const SceneGraph& g) {
  const int e = g.n_obj * g.n_obj * g.n_reg;
  Tensor a(g.n_obj * g.n_reg, e, 0.0);
  const double w = 1.0 / g.n_obj;
  int row = 0;
  for (int i = 0; i < g.n_obj; ++i)
    for (int j = 0; j < g.n_obj; ++j)
      for (int k = 0; k < g.n_reg; ++k) a.at(j * g.n_reg + k, row++) = w;
  return a;
}

Tensor matmul_plain(const Tensor& a, const Tensor& b) {
  Tensor out(a.rows, b.cols, 0.0);
  for (int i = 0; i < a.rows; ++i)
    for (int k = 0; k < a.cols; ++k) {
      double v = a.at(i, k);
      if (v == 0.0) continue;
      for (int j = 0; j < b.cols; ++j) out.at(i, j) += v * b.at(k, j);
    }
  return out;
}

Tensor concat3(const Tensor& a, const Tensor& b, const Tensor& c) {
  Tensor out(a.rows, a.cols + b.cols + c.cols);
  for (int r = 0; r < a.rows; ++r) {
    for (int i = 0; i < a.cols; ++i) out.at(r, i) = a.at(r, i);
    for (int i = 0; i < b.cols; ++i) out.at(r, a.cols + i) = b.at(r, i);
    for (int i = 0; i < c.cols; ++i) out.at(r, a.cols + b.cols + i) = c.at(r, i);
  }
  return out;
}

}  // namespace

RankMatrix RankNet::forward(const SceneGraph& g) const {
  Tensor nodes = padded_nodes(g, d_m_);
  Tensor u0 = theta1_.forward(nodes);
  Tensor v0 = theta2_.forward(nodes);
  Tensor c = theta3_.forward(edge_matrix(g));
  Tensor si = sender_select(g), sj = receiver_select(g);
  Tensor m0 = theta4_.forward(concat3(matmul_plain(si, u0), matmul_plain(sj, v0), c));
  Tensor agg0 = matmul_plain(agg_receiver(g), m0);
  Tensor u1 = theta1_.forward(agg0);
  Tensor v1 = theta2_.forward(agg0);
  Tensor m1 = theta4_.forward(concat3(matmul_plain(si, u1), matmul_plain(sj, v1), c));
  Tensor agg1 = matmul_plain(agg_pair(g), m1);
  Tensor f = theta5_.forward(agg1);
  return f.data;
}

Var RankNet::forward_graph(const SceneGraph& g, const std::vector<Var>& params) const {
  auto slice = [&](int net, int count) {
    return std::vector<Var>(params.begin() + net, params.begin() + net + count);
  };
  const int n1 = 2 * theta1_.n_layers();
  std::vector<Var> p1 = slice(0, n1), p2 = slice(n1, n1), p3 = slice(2 * n1, n1),
                   p4 = slice(3 * n1, n1), p5 = slice(4 * n1, n1);

  Var nodes = nn::constant(padded_nodes(g, d_m_));
  Var u0 = theta1_.forward_graph(nodes, p1);
  Var v0 = theta2_.forward_graph(nodes, p2);
  Var c = theta3_.forward_graph(nn::constant(edge_matrix(g)), p3);
  Var si = nn::constant(sender_select(g));
  Var sj = nn::constant(receiver_select(g));
  Var m0 = theta4_.forward_graph(
      nn::concat_cols({nn::matmul(si, u0), nn::matmul(sj, v0), c}), p4);
  Var agg0 = nn::matmul(nn::constant(agg_receiver(g)), m0);
  Var u1 = theta1_.forward_graph(agg0, p1);
  Var v1 = theta2_.forward_graph(agg0, p2);
  Var m1 = theta4_.forward_graph(
      nn::concat_cols({nn::matmul(si, u1), nn::matmul(sj, v1), c}), p4);
  Var agg1 = nn::matmul(nn::constant(agg_pair(g)), m1);
  return theta5_.forward_graph(agg1, p5);
}

std::vector<Var> RankNet::bind() const {
  std::vector<Var> out;
  for (const Mlp* m : {&theta1_, &theta2_, &theta3_, &theta4_, &theta5_}) {
    auto p = m->bind();
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

std::vector<Tensor*> RankNet::param_tensors() {
  std::vector<Tensor*> out;
  for (Mlp* m : {&theta1_, &theta2_, &theta3_, &theta4_, &theta5_}) {
    auto p = m->param_tensors();
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

void RankNet::save(const std::string& path) const {
  nn::CheckpointWriter w;
  w.add_meta("kind", "ranknet");
  w.add_meta("d_m", std::to_string(d_m_));
  nn::MlpSerializer::save(theta1_, w, "theta1");
  nn::MlpSerializer::save(theta2_, w, "theta2");
  nn::MlpSerializer::save(theta3_, w, "theta3");
  nn::MlpSerializer::save(theta4_, w, "theta4");
  nn::MlpSerializer::save(theta5_, w, "theta5");
  w.save(path);
}

RankNet RankNet::load(const std::string& path) {
  auto r = nn::CheckpointReader::from_file(path);
  RankNet net;
  net.d_m_ = std::stoi(r.meta("d_m"));
  net.theta1_ = nn::MlpSerializer::load(r, "theta1");
  net.theta2_ = nn::MlpSerializer::load(r, "theta2");
  net.theta3_ = nn::MlpSerializer::load(r, "theta3");
  net.theta4_ = nn::MlpSerializer::load(r, "theta4");
  net.theta5_ = nn::MlpSerializer::load(r, "theta5");
  return net;
}

Var large_margin_loss(const RankNet& net, const std::vector<Var>& params,
                      const std::vector<const RankExample*>& batch) {
  Var total = nn::constant_scalar(0.0);
  for (const RankExample* ex : batch) {
    Var f = net.forward_graph(ex->graph, params);
    const Tensor& fv = f.value();
    if (fv.rows < 2) throw std::invalid_argument("large_margin_loss: need >= 2 candidates");
    int runner_up = -1;
    for (int i = 0; i < fv.rows; ++i) {
      if (i == ex->expert_index) continue;
      if (runner_up < 0 || fv.at(i, 0) > fv.at(runner_up, 0)) runner_up = i;
    }
    Var margin = nn::sub(nn::pick(f, ex->expert_index, 0), nn::pick(f, runner_up, 0));
    total = nn::add(total, nn::relu(nn::add_scalar(nn::neg(margin), 1.0)));
  }
  return total;
}

Var mse_loss(const RankNet& net, const std::vector<Var>& params,
             const std::vector<const RankExample*>& batch) {
  Var total = nn::constant_scalar(0.0);
  for (const RankExample* ex : batch) {
    Var f = net.forward_graph(ex->graph, params);
    Var err = nn::add_scalar(nn::pick(f, ex->expert_index, 0), ex->steps_to_goal);
    total = nn::add(total, nn::square(err));
  }
  return nn::scale(total, 1.0 / static_cast<double>(batch.size()));
}

double top1_accuracy(const RankNet& net, const std::vector<RankExample>& examples) {
  if (examples.empty()) return 0.0;
  int hits = 0;
  for (const RankExample& ex : examples) {
    RankMatrix f = net.forward(ex.graph);
    int best = 0;
    for (std::size_t i = 1; i < f.size(); ++i)
      if (f[i] > f[best]) best = static_cast<int>(i);
    if (best == ex.expert_index) ++hits;
  }
  return static_cast<double>(hits) / examples.size();
}

std::vector<RankCurvePoint> train_rank(RankNet& net, const std::vector<RankExample>& train,
                                       const std::vector<RankExample>& holdout,
                                       const RankTrainConfig& config) {
  if (train.empty()) throw std::invalid_argument("train_rank: empty dataset");
  Rng rng(mix64(config.seed, 0x7a11));
  nn::Adam adam(config.lr);
  std::vector<RankCurvePoint> curve;
  std::vector<int> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    // Fisher-Yates with our deterministic rng.
    for (int i = static_cast<int>(order.size()) - 1; i > 0; --i)
      std::swap(order[i], order[rng.uniform_int(i + 1)]);
    double epoch_loss = 0.0;
    for (std::size_t ofs = 0; ofs < order.size(); ofs += config.batch_size) {
      std::vector<const RankExample*> batch;
      for (std::size_t k = ofs; k < order.size() && k < ofs + config.batch_size; ++k)
        batch.push_back(&train[order[k]]);
      std::vector<Var> params = net.bind();
      Var loss = config.loss == RankLoss::Hinge ? large_margin_loss(net, params, batch)
                                                : mse_loss(net, params, batch);
      epoch_loss += loss.scalar();
      adam.step(net.param_tensors(), nn::grad(loss, params));
    }
    curve.push_back({epoch, epoch_loss, top1_accuracy(net, holdout)});
  }
  return curve;
}

}  // namespace gtamp
