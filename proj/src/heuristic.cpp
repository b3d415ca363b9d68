#include "gtamp/heuristic.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

namespace gtamp {

int h_count(const AbstractState& abstract, const GoalSpec& goal) {
  const int n_obj = abstract.n_obj;
  const int n_reg = abstract.n_reg;
  std::vector<char> in_m(n_obj, 0);
  std::deque<int> queue;
  for (const auto& [go, gr] : goal.pairs) {
    if (!abstract.InRegion(go, n_obj + gr) && !in_m[go]) {
      in_m[go] = 1;
      queue.push_back(go);
    }
  }
  while (!queue.empty()) {
    int om = queue.front();
    queue.pop_front();
    for (int o = 0; o < n_obj; ++o) {
      if (in_m[o]) continue;
      bool add = abstract.OccludesPre(o, om);
      for (int r = 0; !add && r < n_reg; ++r) add = abstract.OccludesManip(om, o, r);
      if (add) {
        in_m[o] = 1;
        queue.push_back(o);
      }
    }
  }
  return static_cast<int>(std::count(in_m.begin(), in_m.end(), 1));
}

int achieved_count(const AbstractState& abstract, const GoalSpec& goal) {
  int n = 0;
  for (const auto& [go, gr] : goal.pairs)
    if (abstract.InRegion(go, abstract.n_obj + gr)) ++n;
  return n;
}

EdgePriority h_edge(const AbstractState& abstract, const DiscreteParams& delta,
                    const GoalSpec& goal) {
  EdgePriority p;
  p.hcount = h_count(abstract, goal);
  p.achieved = achieved_count(abstract, goal);
  bool goal_pair = false;
  for (const auto& [go, gr] : goal.pairs)
    if (go == delta.object && gr == delta.region) goal_pair = true;
  p.goal_penalty = (goal_pair && abstract.InRegion(delta.object, abstract.n_obj + delta.region)) ? 1 : 0;
  p.value = p.hcount - p.achieved + p.goal_penalty;
  return p;
}

EdgePriority h_rank(const AbstractState& abstract, const DiscreteParams& delta,
                    const GoalSpec& goal, const RankMatrix& ranks) {
  EdgePriority p = h_edge(abstract, delta, goal);
  double max_v = -1e300;
  for (double v : ranks) max_v = std::max(max_v, v);
  double denom = 0.0;
  for (double v : ranks) denom += std::exp(v - max_v);
  double num = std::exp(ranks.at(abstract.or_index(delta.object, delta.region)) - max_v);
  p.rank_bonus = num / denom;
  p.value -= p.rank_bonus;
  return p;
}

}  // namespace gtamp
