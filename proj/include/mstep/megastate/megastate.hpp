#pragma once

#include <cstdint>
#include <unordered_map>
#include <utility>
#include <vector>

#include "mstep/core/policy.hpp"
#include "mstep/core/pomdp.hpp"
#include "mstep/core/simulate.hpp"

namespace mstep {

using SparseRow = std::vector<std::pair<int, double>>;  // (next megastate, probability)

// Fully observable MDP over reachable suffixes. Layer h holds the reachable z_h; rewards are
// r^m(z) = r_h(o_h) and are collected on entering a megastate.
struct MegastateMdp {
  int horizon = 0;
  int memory = 1;
  int action_count = 0;
  SuffixSpace space;
  std::vector<std::vector<SuffixCode>> states;                  // back-map, per layer
  std::vector<std::unordered_map<SuffixCode, int>> index;        // suffix -> layer index
  std::vector<double> initial;                                   // law of z_1
  std::vector<std::vector<SparseRow>> transitions;               // [h-1][i * A + a], h < H
  std::vector<std::vector<double>> rewards;                      // [h-1][i]

  std::size_t state_count() const;
  int find(int h, SuffixCode z) const;  // -1 when z is not a megastate
};

MegastateMdp build_megastate_mdp(const Pomdp& pomdp, int m);

struct MdpSolution {
  std::vector<std::vector<double>> q;  // [h-1][i * A + a]: expected reward after step h
  std::vector<std::vector<int>> greedy;
  double value = 0.0;                  // includes the step-1 reward
};

MdpSolution solve_megastate(const MegastateMdp& mdp);
// Exact value of a deterministic megastate policy (actions[h-1][i]).
double evaluate_megastate_policy(const MegastateMdp& mdp, const std::vector<std::vector<int>>& actions);
// The policy as an m-step suffix policy on the POMDP; suffixes that are not megastates get
// action 0.
SuffixPolicy pull_back(const MegastateMdp& mdp, const std::vector<std::vector<int>>& actions);

// Largest |P(o_{h+1} | full history, a_h) - P^m(z_{h+1} | z_h, a_h)| over reachable histories,
// with the left side computed by exact belief filtering.
double markov_deviation(const Pomdp& pomdp, const MegastateMdp& mdp);

// Learner-side estimate of the megastate model.
struct EmpiricalModel {
  std::vector<double> initial;
  std::vector<std::vector<SparseRow>> transitions;
  std::vector<std::vector<std::uint64_t>> counts;  // [h-1][i * A + a]
  std::vector<std::vector<double>> rewards;
};

// The true model with every pair marked as visited.
EmpiricalModel exact_model(const MegastateMdp& mdp);

struct OptimisticPlan {
  std::vector<std::vector<double>> q;
  std::vector<std::vector<int>> greedy;
  double value = 0.0;
};

// Q_h(i, a) = (n > 0 ? sum_j P(j)(r(j) + V_{h+1}(j)) : 1) + bonus(n) for h < H, Q_H = 0,
// V_h = min(1, max_a Q_h); bonus(n) = c_b H sqrt(log_term / max(1, n)).
OptimisticPlan optimistic_plan(const MegastateMdp& mdp, const EmpiricalModel& model,
                               double bonus_scale, double log_term);

struct UcbviConfig {
  int episodes = 5000;
  double delta = 0.1;
  double bonus_scale = 1.0;
  std::uint64_t seed = 0;
};

struct UcbviEpisode {
  int episode = 0;
  double policy_value = 0.0;  // exact value of the policy executed in this episode
  double gap = 0.0;
  double cumulative_regret = 0.0;
};

struct UcbviResult {
  std::vector<std::vector<int>> final_actions;  // greedy w.r.t. the final optimistic Q
  double final_value = 0.0;
  double final_gap = 0.0;
  std::vector<UcbviEpisode> curve;
};

// Episodic UCB-VI with Hoeffding bonuses. Interaction goes through the sampler; the megastate
// MDP supplies the state indexing (and, outside the learning loop, exact values for the curve).
UcbviResult ucbvi_learn(const MegastateMdp& mdp, const EpisodeSampler& sampler,
                        const UcbviConfig& config);

// First episode after which every executed policy has gap <= threshold (curve length + 1 if
// never).
int episodes_to_gap(const UcbviResult& result, double threshold);

// First episode k >= window at which the mean gap over episodes k-window+1..k is <= threshold
// (curve length + 1 if never).
int episodes_to_average_gap(const UcbviResult& result, double threshold, int window);

}  // namespace mstep
