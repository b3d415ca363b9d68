#pragma once

#include <functional>
#include <vector>

#include "gtamp/predicates.hpp"
#include "gtamp/world.hpp"

namespace gtamp {

// Priority of one abstract edge; lower values are explored first.
struct EdgePriority {
  double value = 0.0;
  int hcount = 0;
  int achieved = 0;
  int goal_penalty = 0;      // 1 when moving an already-satisfied goal object in place
  double rank_bonus = 0.0;   // in [0, 1]; 0 without a ranker
};

// Recursive occlusion-closure count of objects left to move. Queue order is
// entity index order, and an object is never enqueued twice.
int h_count(const AbstractState& abstract, const GoalSpec& goal);

int achieved_count(const AbstractState& abstract, const GoalSpec& goal);

// Hand-designed edge heuristic: hcount - achieved + in-place-goal indicator.
EdgePriority h_edge(const AbstractState& abstract, const DiscreteParams& delta,
                    const GoalSpec& goal);

// Rank values for every (object, region) pair, row-major (n_obj x n_reg).
using RankMatrix = std::vector<double>;

// h_edge minus the softmax (over all pairs) of the rank matrix at delta.
EdgePriority h_rank(const AbstractState& abstract, const DiscreteParams& delta,
                    const GoalSpec& goal, const RankMatrix& ranks);

// Edge heuristic used by the search: abstract state + delta -> priority.
using EdgeHeuristic =
    std::function<EdgePriority(const AbstractState&, const DiscreteParams&, const GoalSpec&)>;

}  // namespace gtamp
