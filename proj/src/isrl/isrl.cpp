#include "mstep/isrl/isrl.hpp"

#include <cmath>

#include "mstep/core/decodability.hpp"
#include "mstep/core/errors.hpp"
#include "mstep/oracle/trajectory_tree.hpp"

namespace mstep {

std::vector<int> BeliefChain::predict(const HistoryView& history) const {
  std::vector<int> s;
  s.push_back(first.at(history.observations[0]));
  for (int h = 2; h <= history.step; ++h) {
    const int a = history.actions[h - 2], o = history.observations[h - 1];
    s.push_back(next[h - 2][(s.back() * action_count + a) * observation_count + o]);
  }
  return s;
}

BeliefChain construct_bstar(const Pomdp& pomdp) {
  if (!pomdp.decoder) throw ModelError("construct_bstar needs the ground-truth decoder");
  const int H = pomdp.horizon, S = pomdp.state_count, O = pomdp.observation_count,
            A = pomdp.action_count;
  BeliefChain chain;
  chain.horizon = H;
  chain.state_count = S;
  chain.observation_count = O;
  chain.action_count = A;
  chain.first.assign(O, 0);
  const SuffixSpace space = pomdp.suffix_space(pomdp.decoder->memory);
  for (int o = 0; o < O; ++o) {
    if (auto s = pomdp.decoder->lookup(1, static_cast<SuffixCode>(o))) chain.first[o] = *s;
  }
  const auto live = reachable_states(pomdp);
  for (int h = 2; h <= H; ++h) {
    std::vector<int> table(static_cast<std::size_t>(S) * A * O, 0);
    for (int s : live[h - 2]) {
      for (int a = 0; a < A; ++a) {
        auto tr = pomdp.transition(h - 1, s, a);
        for (int o = 0; o < O; ++o) {
          int found = -1;
          for (int s2 = 0; s2 < S; ++s2) {
            if (tr[s2] * pomdp.emission(h, s2)[o] <= 0.0) continue;
            if (found >= 0) {
              throw ModelError("model is not H-step decodable: two successors at step " +
                               std::to_string(h));
            }
            found = s2;
          }
          if (found >= 0) table[(s * A + a) * O + o] = found;
        }
      }
    }
    chain.next.push_back(std::move(table));
  }
  return chain;
}

BeliefPolicy::BeliefPolicy(std::shared_ptr<const BeliefChain> chain,
                           std::vector<std::vector<int>> actions)
    : chain_(std::move(chain)), actions_(std::move(actions)) {
  if (!chain_ || static_cast<int>(actions_.size()) != chain_->horizon) {
    throw ModelError("belief policy needs one action map per step");
  }
  for (const auto& row : actions_) {
    if (static_cast<int>(row.size()) != chain_->state_count) {
      throw ModelError("belief policy action map has the wrong size");
    }
  }
}

void BeliefPolicy::distribution(const HistoryView& history, std::span<double> out) const {
  const int s = chain_->predict(history).back();
  std::fill(out.begin(), out.end(), 0.0);
  out[actions_[history.step - 1][s]] = 1.0;
}

double policy_class_size(const Pomdp& pomdp, PolicyClassMode mode) {
  const double S = pomdp.state_count, A = pomdp.action_count, O = pomdp.observation_count,
               H = pomdp.horizon;
  double n = std::pow(A, S * H);
  if (mode == PolicyClassMode::full) n *= std::pow(S, O) * std::pow(S, S * A * O * (H - 1));
  return n;
}

namespace {

// Advances a mixed-radix counter; false once it wraps around.
bool increment(std::vector<int>& digits, int radix) {
  for (std::size_t i = digits.size(); i-- > 0;) {
    if (++digits[i] < radix) return true;
    digits[i] = 0;
  }
  return false;
}

std::vector<std::vector<int>> action_maps(const std::vector<int>& digits, int H, int S) {
  std::vector<std::vector<int>> maps(H, std::vector<int>(S));
  for (int h = 0; h < H; ++h)
    for (int s = 0; s < S; ++s) maps[h][s] = digits[h * S + s];
  return maps;
}

}  // namespace

std::vector<std::shared_ptr<const BeliefPolicy>> enumerate_policy_class(const Pomdp& pomdp,
                                                                       PolicyClassMode mode,
                                                                       std::uint64_t cap) {
  const double count = policy_class_size(pomdp, mode);
  if (count > static_cast<double>(cap)) throw CapExceeded("policy class", count, cap);
  const int H = pomdp.horizon, S = pomdp.state_count, O = pomdp.observation_count,
            A = pomdp.action_count;
  std::vector<std::shared_ptr<const BeliefChain>> chains;
  if (mode == PolicyClassMode::fixed_chain) {
    chains.push_back(std::make_shared<const BeliefChain>(construct_bstar(pomdp)));
  } else {
    const std::size_t width = static_cast<std::size_t>(O) + static_cast<std::size_t>(S) * A * O * (H - 1);
    std::vector<int> digits(width, 0);
    do {
      BeliefChain c;
      c.horizon = H;
      c.state_count = S;
      c.observation_count = O;
      c.action_count = A;
      c.first.assign(digits.begin(), digits.begin() + O);
      for (int h = 2; h <= H; ++h) {
        const auto begin = digits.begin() + O + static_cast<std::ptrdiff_t>(h - 2) * S * A * O;
        c.next.emplace_back(begin, begin + static_cast<std::ptrdiff_t>(S) * A * O);
      }
      chains.push_back(std::make_shared<const BeliefChain>(std::move(c)));
    } while (increment(digits, S));
  }
  std::vector<std::shared_ptr<const BeliefPolicy>> out;
  for (const auto& chain : chains) {
    std::vector<int> digits(static_cast<std::size_t>(H) * S, 0);
    do {
      out.push_back(std::make_shared<const BeliefPolicy>(chain, action_maps(digits, H, S)));
    } while (increment(digits, A));
  }
  return out;
}

double importance_weighted_return(const ObservableTrajectory& trajectory, const Policy& policy) {
  const int H = trajectory.horizon(), A = policy.action_count();
  double log_weight = 0.0;
  std::vector<double> probs(A);
  for (int h = 1; h <= H; ++h) {
    policy.distribution(trajectory.view(h), probs);
    const double p = probs[trajectory.actions[h - 1]];
    if (p <= 0.0) return 0.0;
    log_weight += std::log(p * A);
  }
  return std::exp(log_weight) * trajectory.total_reward();
}

IsrlResult is_rl(const EpisodeSampler& sampler, const std::vector<PolicyPtr>& policies, int N,
                 std::uint64_t seed) {
  if (N < 1) throw ConfigError("is_rl: N must be positive");
  if (policies.empty()) throw ConfigError("is_rl: empty policy class");
  const UniformPolicy uniform(sampler.action_count());
  Rng rng(seed);
  std::vector<ObservableTrajectory> data;
  data.reserve(N);
  for (int t = 0; t < N; ++t) data.push_back(sampler.sample(uniform, rng));
  IsrlResult result;
  result.samples = N;
  for (const auto& pi : policies) {
    double total = 0.0;
    for (const auto& tr : data) total += importance_weighted_return(tr, *pi);
    result.estimates.push_back(total / N);
  }
  for (std::size_t i = 1; i < result.estimates.size(); ++i)
    if (result.estimates[i] > result.estimates[result.best]) result.best = static_cast<int>(i);
  return result;
}

double estimator_expectation(const Pomdp& pomdp, const Policy& policy) {
  const int H = pomdp.horizon, A = pomdp.action_count;
  const UniformPolicy uniform(A);
  TrajectoryTree tree(pomdp, uniform);
  tree.advance_to(H);
  double total = 0.0;
  for (const auto& node : tree.nodes()) {
    ObservableTrajectory tr;
    tr.observations = node.observations;
    for (int h = 1; h <= H; ++h) tr.rewards.push_back(pomdp.reward(h, node.observations[h - 1]));
    for (int a = 0; a < A; ++a) {
      tr.actions = node.actions;
      tr.actions.push_back(a);
      total += node.probability / A * importance_weighted_return(tr, policy);
    }
  }
  return total;
}

int isrl_sample_size(int H, int A, double class_size, double epsilon, double delta) {
  return static_cast<int>(std::ceil(H * std::pow(static_cast<double>(A), H) *
                                    std::log(class_size / delta) / (epsilon * epsilon)));
}

}  // namespace mstep
