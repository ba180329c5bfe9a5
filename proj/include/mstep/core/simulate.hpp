#pragma once

#include <atomic>
#include <cstdint>
#include <vector>

#include "mstep/core/policy.hpp"
#include "mstep/core/pomdp.hpp"
#include "mstep/core/rng.hpp"

namespace mstep {

// What a learner sees from one episode: o_1..o_H, a_1..a_H and r_h = r_h(o_h).
struct ObservableTrajectory {
  std::vector<int> observations;
  std::vector<int> actions;
  std::vector<double> rewards;

  int horizon() const { return static_cast<int>(observations.size()); }
  HistoryView view(int h) const {
    return {h, std::span<const int>(observations).first(h),
            std::span<const int>(actions).first(h - 1)};
  }
  double total_reward() const;
  bool operator==(const ObservableTrajectory&) const = default;
};

struct StepRecord {
  int hidden_state = 0;
  int observation = 0;
  int action = 0;
  double reward = 0.0;
  bool operator==(const StepRecord&) const = default;
};

struct Trajectory {
  std::vector<StepRecord> steps;

  ObservableTrajectory observable() const;
  bool operator==(const Trajectory&) const = default;
};

// Draw order per step: state (initial or transition), observation, action.
Trajectory simulate_episode(const Pomdp& pomdp, const Policy& policy, Rng& rng);
Trajectory simulate_episode(const Pomdp& pomdp, const Policy& policy, std::uint64_t seed);

// Learner-side access to an environment. Only observable trajectories leave this class and the
// ground-truth decoder is dropped on construction.
class EpisodeSampler {
 public:
  explicit EpisodeSampler(Pomdp pomdp);

  int horizon() const { return pomdp_.horizon; }
  int memory() const { return pomdp_.memory; }
  int observation_count() const { return pomdp_.observation_count; }
  int action_count() const { return pomdp_.action_count; }
  SuffixSpace suffix_space() const { return pomdp_.suffix_space(); }

  ObservableTrajectory sample(const Policy& policy, Rng& rng) const;
  std::uint64_t episodes() const { return episodes_.load(); }

 private:
  Pomdp pomdp_;
  mutable std::atomic<std::uint64_t> episodes_{0};
};

}  // namespace mstep
