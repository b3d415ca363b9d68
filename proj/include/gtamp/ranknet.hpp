#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gtamp/heuristic.hpp"
#include "gtamp/nn/mlp.hpp"
#include "gtamp/scene_graph.hpp"

namespace gtamp {

// Message-passing rank network over the per-region scene hypergraph.
// Five embedding nets: sender/receiver node embeddings (theta1/theta2),
// edge embedding (theta3), message (theta4), and output head (theta5).
// Node features are zero-padded from 4 to d_m so theta1/theta2 can embed
// both raw features (round 0) and aggregated messages (round 1).
class RankNet {
 public:
  RankNet() = default;
  RankNet(int d_m, int hidden, Rng& rng);

  int message_width() const { return d_m_; }

  // Rank value for moving object o to region r, as row-major n_obj x n_reg.
  RankMatrix forward(const SceneGraph& g) const;

  // Graph-mode forward producing an (n_obj * n_reg) x 1 output column.
  nn::Var forward_graph(const SceneGraph& g, const std::vector<nn::Var>& params) const;

  std::vector<nn::Var> bind() const;
  std::vector<nn::Tensor*> param_tensors();

  void save(const std::string& path) const;
  static RankNet load(const std::string& path);

 private:
  int d_m_ = 0;
  nn::Mlp theta1_, theta2_, theta3_, theta4_, theta5_;
};

struct RankExample {
  SceneGraph graph;
  int expert_index = 0;       // or_index(object, region)
  double steps_to_goal = 0.0; // used by the MSE loss
};

// Sum over the batch of max(0, 1 - margin), margin = expert value minus the
// best non-expert value.
nn::Var large_margin_loss(const RankNet& net, const std::vector<nn::Var>& params,
                          const std::vector<const RankExample*>& batch);

// Mean of (F[taken] + steps_to_goal)^2: larger rank value = fewer steps left.
nn::Var mse_loss(const RankNet& net, const std::vector<nn::Var>& params,
                 const std::vector<const RankExample*>& batch);

enum class RankLoss { Hinge, Mse };

struct RankTrainConfig {
  int epochs = 40;
  int batch_size = 16;
  double lr = 1e-4;
  RankLoss loss = RankLoss::Hinge;
  std::uint64_t seed = 0;
};

struct RankCurvePoint {
  int epoch = 0;
  double train_loss = 0.0;
  double holdout_top1 = 0.0;
};

double top1_accuracy(const RankNet& net, const std::vector<RankExample>& examples);

std::vector<RankCurvePoint> train_rank(RankNet& net, const std::vector<RankExample>& train,
                                       const std::vector<RankExample>& holdout,
                                       const RankTrainConfig& config);

}  // namespace gtamp
