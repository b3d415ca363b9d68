#include "gtamp/scene_graph.hpp"

#include <stdexcept>

namespace gtamp {

namespace {

void write_unary(const AbstractState& a, int entity, double* out) {
  out[0] = a.is_object[entity];
  out[1] = a.is_region[entity];
  out[2] = a.is_goal[entity];
  out[3] = a.pre_free[entity];
}

void write_pair(const AbstractState& a, int ei, int ej, double* out) {
  out[0] = a.InRegion(ei, ej);
  out[1] = a.OccludesPre(ei, ej);
  out[2] = a.ManipFree(ei, ej);
}

}  // namespace

SceneGraph encode(const AbstractState& a) {
  SceneGraph g;
  g.n_obj = a.n_obj;
  g.n_reg = a.n_reg;
  g.node_feats.assign(static_cast<std::size_t>(g.n_obj) * kNodeFeatureWidth, 0.0);
  g.edge_feats.assign(
      static_cast<std::size_t>(g.n_obj) * g.n_obj * g.n_reg * kEdgeFeatureWidth, 0.0);

  for (int i = 0; i < g.n_obj; ++i) write_unary(a, i, &g.node_feats[i * kNodeFeatureWidth]);

  for (int i = 0; i < g.n_obj; ++i) {
    for (int j = 0; j < g.n_obj; ++j) {
      for (int k = 0; k < g.n_reg; ++k) {
        double* e = &g.edge_feats[g.edge_base(i, j, k)];
        const int rk = a.n_obj + k;
        write_unary(a, i, e + 0);
        write_unary(a, j, e + 4);
        write_pair(a, i, j, e + 8);
        write_pair(a, j, i, e + 11);
        write_pair(a, i, rk, e + 14);
        write_pair(a, j, rk, e + 17);
        e[20] = a.OccludesManip(i, j, k);
        e[21] = a.OccludesManip(j, i, k);
      }
    }
  }
  return g;
}

SceneGraph permute(const SceneGraph& g, const std::vector<int>& sigma_obj,
                   const std::vector<int>& sigma_reg) {
  if (static_cast<int>(sigma_obj.size()) != g.n_obj ||
      static_cast<int>(sigma_reg.size()) != g.n_reg)
    throw std::invalid_argument("permute: permutation sizes do not match graph");
  SceneGraph out;
  out.n_obj = g.n_obj;
  out.n_reg = g.n_reg;
  out.node_feats.assign(g.node_feats.size(), 0.0);
  out.edge_feats.assign(g.edge_feats.size(), 0.0);
  for (int i = 0; i < g.n_obj; ++i)
    for (int f = 0; f < kNodeFeatureWidth; ++f)
      out.node_feats[sigma_obj[i] * kNodeFeatureWidth + f] = g.node(i, f);
  for (int i = 0; i < g.n_obj; ++i)
    for (int j = 0; j < g.n_obj; ++j)
      for (int k = 0; k < g.n_reg; ++k)
        for (int f = 0; f < kEdgeFeatureWidth; ++f)
          out.edge_feats[out.edge_base(sigma_obj[i], sigma_obj[j], sigma_reg[k]) + f] =
              g.edge_feats[g.edge_base(i, j, k) + f];
  return out;
}

}  // namespace gtamp
