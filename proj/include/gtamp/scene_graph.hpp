#pragma once

#include <vector>

#include "gtamp/predicates.hpp"

namespace gtamp {

constexpr int kNodeFeatureWidth = 4;   // [IsObject, IsRegion, IsGoal, PreFree]
constexpr int kEdgeFeatureWidth = 22;  // see encode() for the block layout

// Per-region fully connected hypergraph over objects; binary features only.
struct SceneGraph {
  int n_obj = 0;
  int n_reg = 0;
  std::vector<double> node_feats;  // n_obj x 4, row-major
  std::vector<double> edge_feats;  // n_obj x n_obj x n_reg x 22, row-major

  int edge_base(int i, int j, int k) const {
    return (((i * n_obj) + j) * n_reg + k) * kEdgeFeatureWidth;
  }
  double node(int i, int f) const { return node_feats[i * kNodeFeatureWidth + f]; }

  bool operator==(const SceneGraph&) const = default;
};

// Deterministic feature extraction. Edge vector layout per (o_i, o_j, r_k):
//   [x_{o_i}(4), x_{o_j}(4), x_{o_i o_j}(3), x_{o_j o_i}(3),
//    x_{o_i r_k}(3), x_{o_j r_k}(3), x_{o_i o_j r_k}(1), x_{o_j o_i r_k}(1)]
// where pair blocks are [InRegion, OccludesPre, ManipFree] with wrong-typed
// slots fixed at zero. Self-edges (i == j) are included.
SceneGraph encode(const AbstractState& abstract);

// Relabel entities. sigma_obj[i] is the new index of object i; likewise for
// regions. encode(permuted scene) == permute(encode(scene), ...).
SceneGraph permute(const SceneGraph& g, const std::vector<int>& sigma_obj,
                   const std::vector<int>& sigma_reg);

}  // namespace gtamp
