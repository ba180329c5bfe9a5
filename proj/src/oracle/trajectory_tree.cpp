#include "mstep/oracle/trajectory_tree.hpp"

#include <map>
#include <unordered_map>

#include "mstep/core/errors.hpp"

namespace mstep {
namespace {

struct NodeKey {
  std::vector<int> observations, actions, states;
  auto operator<=>(const NodeKey&) const = default;
};

void check_size(double estimate) {
  const auto cap = oracle_cap();
  if (estimate > static_cast<double>(cap)) throw CapExceeded("exact enumeration", estimate, cap);
}

}  // namespace

TrajectoryTree::TrajectoryTree(const Pomdp& pomdp, const Policy& policy, int track_from)
    : pomdp_(pomdp), policy_(policy), track_from_(track_from) {
  if (policy.action_count() != pomdp.action_count) {
    throw ModelError("policy action count does not match the model");
  }
  for (int s = 0; s < pomdp.state_count; ++s) {
    if (pomdp.initial[s] <= 0.0) continue;
    auto em = pomdp.emission(1, s);
    for (int o = 0; o < pomdp.observation_count; ++o) {
      if (em[o] <= 0.0) continue;
      nodes_.push_back({{o}, {}, {s}, pomdp.initial[s] * em[o]});
    }
  }
}

void TrajectoryTree::advance() {
  const int h = step_;
  if (h >= pomdp_.horizon) throw ModelError("trajectory tree advanced past the horizon");
  const int A = pomdp_.action_count, S = pomdp_.state_count, O = pomdp_.observation_count;
  check_size(static_cast<double>(nodes_.size()) * A * S * O);

  // Policy queried once per distinct history.
  std::map<std::pair<std::vector<int>, std::vector<int>>, std::vector<double>> cache;
  std::map<NodeKey, std::size_t> index;
  std::vector<TreeNode> next;
  const bool keep_path = h >= track_from_;
  for (const auto& node : nodes_) {
    auto [it, fresh] = cache.try_emplace({node.observations, node.actions});
    if (fresh) {
      it->second.assign(A, 0.0);
      policy_.distribution(node.view(), it->second);
    }
    const auto& pa = it->second;
    for (int a = 0; a < A; ++a) {
      if (pa[a] <= 0.0) continue;
      auto tr = pomdp_.transition(h, node.state(), a);
      for (int s2 = 0; s2 < S; ++s2) {
        if (tr[s2] <= 0.0) continue;
        auto em = pomdp_.emission(h + 1, s2);
        for (int o = 0; o < O; ++o) {
          if (em[o] <= 0.0) continue;
          NodeKey key{node.observations, node.actions,
                      keep_path ? node.states : std::vector<int>{}};
          key.observations.push_back(o);
          key.actions.push_back(a);
          key.states.push_back(s2);
          const double p = node.probability * pa[a] * tr[s2] * em[o];
          auto [pos, inserted] = index.try_emplace(key, next.size());
          if (inserted) {
            next.push_back({std::move(key.observations), std::move(key.actions),
                            std::move(key.states), p});
          } else {
            next[pos->second].probability += p;
          }
        }
      }
    }
  }
  nodes_ = std::move(next);
  ++step_;
}

void TrajectoryTree::advance_to(int h) {
  while (step_ < h) advance();
}

}  // namespace mstep
