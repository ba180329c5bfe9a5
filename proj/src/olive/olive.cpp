#include "mstep/olive/olive.hpp"

#include <cmath>
#include <limits>

#include "mstep/core/errors.hpp"

namespace mstep {
namespace {

// f_h(z_h, a_h) - r_{h+1}(o_{h+1}) - max_a f_{h+1}(z_{h+1}, a) on a logged trajectory.
double residual(const QFunction& f, const SuffixSpace& space, const ObservableTrajectory& tr,
                int h) {
  const SuffixCode z = space.encode_history(h, tr.observations, tr.actions);
  double r = f.value(h, z, tr.actions[h - 1]);
  if (h < tr.horizon()) {
    r -= tr.rewards[h] + f.max_value(h + 1, space.shift(h, z, tr.actions[h - 1], tr.observations[h]));
  }
  return r;
}

}  // namespace

void OliveConfig::validate() const {
  if (!(eps_act > 0.0) || !(eps_elim > 0.0)) throw ConfigError("olive: thresholds must be positive");
  if (n_est < 1) throw ConfigError("olive: n_est must be positive");
  if (max_rounds < 0) throw ConfigError("olive: max_rounds must be non-negative");
}

OliveResult run_olive(const EpisodeSampler& sampler, const std::vector<QFunction>& F,
                      const OliveConfig& config, const ModelOracle* oracle) {
  config.validate();
  if (F.empty()) throw ConfigError("olive: empty function class");
  if (config.exact && !oracle) throw ConfigError("olive: exact mode needs the model oracle");
  const int H = sampler.horizon(), A = sampler.action_count();
  const SuffixSpace space = sampler.suffix_space();
  const std::uint64_t start = sampler.episodes();
  const auto uniform = std::make_shared<UniformPolicy>(A);
  const int max_rounds = config.max_rounds > 0 ? config.max_rounds : static_cast<int>(F.size()) + 1;

  OliveResult result;
  Rng rng(mix_seed(config.seed, 0));
  if (config.exact) {
    for (const auto& f : F) result.initial_values.push_back(oracle->initial_value(f));
  } else {
    std::vector<int> first;
    for (int i = 0; i < config.n_est; ++i) first.push_back(sampler.sample(*uniform, rng).observations[0]);
    for (const auto& f : F) {
      double v = 0.0;
      for (int o : first) v += f.max_value(1, static_cast<SuffixCode>(o));
      result.initial_values.push_back(v / config.n_est);
    }
  }

  std::vector<int> survivors(F.size());
  for (std::size_t i = 0; i < F.size(); ++i) survivors[i] = static_cast<int>(i);
  for (int round = 1; round <= max_rounds && !survivors.empty(); ++round) {
    OliveRound row;
    row.round = round;
    row.episodes_before = sampler.episodes() - start;
    int best = survivors.front();
    for (int i : survivors)
      if (result.initial_values[i] > result.initial_values[best]) best = i;
    row.selected = best;
    row.estimated_value = result.initial_values[best];
    const GreedyPolicy pi(F[best]);
    row.exact_gap = oracle ? oracle->optimal_value() - oracle->policy_value(pi)
                           : std::numeric_limits<double>::quiet_NaN();
    Rng round_rng(mix_seed(config.seed, static_cast<std::uint64_t>(round)));

    std::vector<double> on_policy(H, 0.0);
    if (config.exact) {
      for (int h = 1; h <= H; ++h) on_policy[h - 1] = oracle->bellman_error(pi, F[best], h);
    } else {
      for (int i = 0; i < config.n_est; ++i) {
        const auto tr = sampler.sample(pi, round_rng);
        for (int h = 1; h <= H; ++h) on_policy[h - 1] += residual(F[best], space, tr, h);
      }
      for (double& v : on_policy) v /= config.n_est;
    }
    int worst = 1;
    for (int h = 2; h <= H; ++h)
      if (std::abs(on_policy[h - 1]) > std::abs(on_policy[worst - 1])) worst = h;
    row.violation = on_policy[worst - 1];
    if (std::abs(row.violation) <= config.eps_act) {
      row.episodes_after = sampler.episodes() - start;
      row.survivors = survivors.size();
      result.history.push_back(row);
      result.selected = best;
      result.terminated = true;
      break;
    }
    row.violating_step = worst;

    std::vector<double> estimate(F.size(), 0.0);
    if (config.exact) {
      for (int i : survivors) estimate[i] = oracle->bellman_error(pi, F[i], worst);
    } else {
      const auto rollin = compose(borrow(pi), uniform, worst);
      for (int t = 0; t < config.n_est; ++t) {
        const auto tr = sampler.sample(*rollin, round_rng);
        const SuffixCode z = space.encode_history(worst, tr.observations, tr.actions);
        for (int i : survivors) {
          if (F[i].greedy_action(worst, z) != tr.actions[worst - 1]) continue;
          estimate[i] += A * residual(F[i], space, tr, worst);
        }
      }
      for (double& v : estimate) v /= config.n_est;
    }
    std::vector<int> kept;
    for (int i : survivors) {
      if (std::abs(estimate[i]) > config.eps_elim || i == best) {
        row.eliminated.push_back(i);
      } else {
        kept.push_back(i);
      }
    }
    survivors = std::move(kept);
    row.survivors = survivors.size();
    row.episodes_after = sampler.episodes() - start;
    result.history.push_back(row);
  }
  result.rounds = static_cast<int>(result.history.size());
  result.episodes = sampler.episodes() - start;
  if (!result.terminated) {
    result.exhausted = true;
    int best = result.history.empty() ? 0 : result.history.front().selected;
    for (const auto& r : result.history)
      if (result.initial_values[r.selected] > result.initial_values[best]) best = r.selected;
    result.selected = best;
  }
  return result;
}

std::uint64_t olive_episodes_to_optimal(const OliveResult& result, double tol) {
  std::uint64_t answer = result.episodes + 1;
  for (auto it = result.history.rbegin(); it != result.history.rend(); ++it) {
    if (!(it->exact_gap <= tol)) break;
    answer = it->episodes_before;
  }
  if (!result.terminated) return result.episodes + 1;
  return answer;
}

}  // namespace mstep
