#pragma once

#include <atomic>
#include <functional>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include "mstep/core/policy.hpp"
#include "mstep/oracle/oracle.hpp"

namespace mstep {

// Code of the observable window (o_t0, a_t0, ..., a_{t-1}, o_t) of a history, using the same
// digit order as SuffixSpace; for t0 = m(t) it coincides with the code of z_t.
SuffixCode window_code(std::span<const int> observations, std::span<const int> actions, int from,
                       int to, int observation_count, int action_count);

// mu^{pi,h}_{h'}(a | x_{h'}) = E_pi[pi_{h'}(a | z_{h'}) | x_{h'}] for h' in [m(h), h], with
// x_{h'} = (s_{m(h):h'}, o_{m(h):h'}, a_{m(h):h'-1}). As a Policy it is the history policy
// nu^{pi,h}: latent states are read off the decoder. Blocks of probability zero under pi (and
// steps outside [m(h), h]) fall back to the uniform action law; fallbacks are counted.
class MomentMatchingPolicy final : public Policy {
 public:
  // `oracle` must outlive this object.
  MomentMatchingPolicy(const ModelOracle& oracle, const Policy& target, int h);

  int target_step() const { return step_; }
  int start() const { return start_; }
  int action_count() const override { return action_count_; }

  // Empty span for a block with zero probability under the target.
  std::span<const double> conditional(int hp, const std::vector<int>& states,
                                      SuffixCode window) const;
  void distribution(const HistoryView& history, std::span<double> out) const override;

  std::size_t block_count() const;
  std::uint64_t fallbacks() const { return fallbacks_.load(); }

 private:
  const ModelOracle* oracle_;
  int step_;
  int start_;
  int action_count_;
  std::vector<std::map<std::pair<std::vector<int>, SuffixCode>, std::vector<double>>> tables_;
  mutable std::atomic<std::uint64_t> fallbacks_{0};
};

// zeta_s = P_rollin(s_{m(h)} = s) and xi_s = E_mu[g(z_h) | s_{m(h)} = s], the latter by a
// forward pass over blocks that starts from s and never looks at earlier history.
struct Factorization {
  std::vector<double> zeta;
  std::vector<double> xi;
  double value() const;
};

Factorization factorize(const ModelOracle& oracle, const Policy& rollin,
                        const MomentMatchingPolicy& mu,
                        const std::function<double(SuffixCode)>& g);

}  // namespace mstep
