#include "mstep/core/simulate.hpp"

#include <numeric>

namespace mstep {

double ObservableTrajectory::total_reward() const {
  return std::accumulate(rewards.begin(), rewards.end(), 0.0);
}

ObservableTrajectory Trajectory::observable() const {
  ObservableTrajectory t;
  for (const auto& s : steps) {
    t.observations.push_back(s.observation);
    t.actions.push_back(s.action);
    t.rewards.push_back(s.reward);
  }
  return t;
}

Trajectory simulate_episode(const Pomdp& pomdp, const Policy& policy, Rng& rng) {
  const int H = pomdp.horizon;
  Trajectory tr;
  tr.steps.reserve(H);
  std::vector<int> obs, acts;
  obs.reserve(H);
  acts.reserve(H);
  int s = rng.categorical(pomdp.initial);
  for (int h = 1; h <= H; ++h) {
    if (h > 1) s = rng.categorical(pomdp.transition(h - 1, s, acts.back()));
    const int o = rng.categorical(pomdp.emission(h, s));
    obs.push_back(o);
    const int a = policy.sample(HistoryView{h, obs, acts}, rng);
    acts.push_back(a);
    tr.steps.push_back({s, o, a, pomdp.reward(h, o)});
  }
  return tr;
}

Trajectory simulate_episode(const Pomdp& pomdp, const Policy& policy, std::uint64_t seed) {
  Rng rng(seed);
  return simulate_episode(pomdp, policy, rng);
}

EpisodeSampler::EpisodeSampler(Pomdp pomdp) : pomdp_(std::move(pomdp)) {
  pomdp_.decoder.reset();
  pomdp_.validate();
}

ObservableTrajectory EpisodeSampler::sample(const Policy& policy, Rng& rng) const {
  ++episodes_;
  return simulate_episode(pomdp_, policy, rng).observable();
}

}  // namespace mstep
