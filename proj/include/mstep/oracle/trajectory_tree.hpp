#pragma once

#include <climits>
#include <vector>

#include "mstep/core/policy.hpp"
#include "mstep/core/pomdp.hpp"

namespace mstep {

// One positive-probability cell of the joint law of (history, latent states) at a step.
struct TreeNode {
  std::vector<int> observations;  // o_1..o_h
  std::vector<int> actions;       // a_1..a_{h-1}
  std::vector<int> states;        // s_{t0..h} once h >= t0, otherwise just s_h
  double probability = 0.0;

  HistoryView view() const {
    return {static_cast<int>(observations.size()), observations, actions};
  }
  int state() const { return states.back(); }
};

// Exact forward enumeration of the law induced by a policy on a model. Nodes with equal
// (history, tracked states) are merged. Latent states are tracked as a path from step
// `track_from` on; earlier states are summed out.
class TrajectoryTree {
 public:
  TrajectoryTree(const Pomdp& pomdp, const Policy& policy, int track_from = INT_MAX);

  int step() const { return step_; }
  const std::vector<TreeNode>& nodes() const { return nodes_; }
  // Moves from step h to h + 1 (actions at h drawn from the policy).
  void advance();
  void advance_to(int h);

 private:
  const Pomdp& pomdp_;
  const Policy& policy_;
  int track_from_;
  int step_ = 1;
  std::vector<TreeNode> nodes_;
};

}  // namespace mstep
