#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "mstep/core/policy.hpp"
#include "mstep/core/pomdp.hpp"
#include "mstep/core/simulate.hpp"

namespace mstep {

// b_1: o -> s and b_h: (s, a, o) -> s for h >= 2.
struct BeliefChain {
  int horizon = 0;
  int state_count = 0;
  int observation_count = 0;
  int action_count = 0;
  std::vector<int> first;               // [O]
  std::vector<std::vector<int>> next;   // [h-2][(s * A + a) * O + o], h = 2..H

  // s_hat_1..s_hat_h along the history.
  std::vector<int> predict(const HistoryView& history) const;
  bool operator==(const BeliefChain&) const = default;
};

// b*: the unique successor state with positive probability on reachable triples, lowest-index
// completion elsewhere. Needs the model's decoder; a reachable triple with two candidate
// states is a ModelError.
BeliefChain construct_bstar(const Pomdp& pomdp);

// Deterministic policy that acts on the recursively predicted latent state.
class BeliefPolicy final : public Policy {
 public:
  BeliefPolicy(std::shared_ptr<const BeliefChain> chain, std::vector<std::vector<int>> actions);

  int action_count() const override { return chain_->action_count; }
  void distribution(const HistoryView& history, std::span<double> out) const override;
  const BeliefChain& chain() const { return *chain_; }
  const std::vector<std::vector<int>>& actions() const { return actions_; }

 private:
  std::shared_ptr<const BeliefChain> chain_;
  std::vector<std::vector<int>> actions_;  // [h-1][s]
};

enum class PolicyClassMode { fixed_chain, full };

// Exact class size as a double (may exceed 2^64): A^(SH), times S^O * S^(SAO(H-1)) in full mode.
double policy_class_size(const Pomdp& pomdp, PolicyClassMode mode);

// Deterministic enumeration order (mixed radix over the tables, last entry fastest).
// Throws CapExceeded when the class is larger than `cap`.
std::vector<std::shared_ptr<const BeliefPolicy>> enumerate_policy_class(const Pomdp& pomdp,
                                                                       PolicyClassMode mode,
                                                                       std::uint64_t cap);

struct IsrlResult {
  int best = 0;
  std::vector<double> estimates;
  int samples = 0;
};

// Algorithm 2: N uniform-policy episodes, reused for every policy; ties go to the lowest index.
IsrlResult is_rl(const EpisodeSampler& sampler, const std::vector<PolicyPtr>& policies, int N,
                 std::uint64_t seed);

// Importance-weighted return of one logged uniform-policy trajectory.
double importance_weighted_return(const ObservableTrajectory& trajectory, const Policy& policy);

// Exact expectation of the estimator under the uniform logging policy, by enumeration.
double estimator_expectation(const Pomdp& pomdp, const Policy& policy);

// N = H A^H ln(|Pi| / delta) / eps^2, rounded up.
int isrl_sample_size(int H, int A, double class_size, double epsilon, double delta);

}  // namespace mstep
