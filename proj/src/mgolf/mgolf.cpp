#include "mstep/mgolf/mgolf.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>

#include "mstep/core/errors.hpp"

namespace mstep {

void MGolfConfig::validate() const {
  if (epochs < 1) throw ConfigError("mgolf: K must be positive");
  if (k_est && *k_est < 1) throw ConfigError("mgolf: K_est must be positive");
  if (beta && !(*beta >= 0.0)) throw ConfigError("mgolf: beta must be non-negative");
  if (!(beta_c > 0.0)) throw ConfigError("mgolf: beta constant must be positive");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw ConfigError("mgolf: epsilon must lie in (0, 1)");
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("mgolf: delta must lie in (0, 1)");
  if (state_count < 1) throw ConfigError("mgolf: state count must be positive");
}

double mgolf_rho(int H, int A, int m, int S, double epsilon) {
  const double log_term = std::max(1.0, std::log(S / epsilon));
  return epsilon * epsilon /
         (static_cast<double>(H) * H * std::pow(static_cast<double>(A), m) * S * log_term);
}

int mgolf_k_est(double c, std::size_t class_size, double epsilon, double delta) {
  const double k = std::ceil(c * std::log(static_cast<double>(class_size) / delta) /
                             (epsilon * epsilon));
  return std::max(1, static_cast<int>(k));
}

double mgolf_beta(double c, std::size_t g_size, int K, int H, double rho, double delta) {
  return c * (std::log(static_cast<double>(g_size) * K * H / delta) + K * rho);
}

void StepDataset::add(int h, const StepTuple& t) {
  auto& e = layers_.at(h - 1)[{t.suffix, t.action, t.next_observation}];
  ++e.count;
  e.reward = t.reward;
  ++sizes_[h - 1];
}

double squared_loss(const StepDataset& data, int h, const QFunction& xi, const QFunction& zeta) {
  const SuffixSpace& space = xi.space();
  double loss = 0.0;
  for (const auto& [key, entry] : data.layer(h)) {
    const auto& [z, a, o] = key;
    const double pred = xi.value(h, z, a);
    double target = entry.reward;
    if (o >= 0) target += zeta.max_value(h + 1, space.shift(h, z, a, o));
    if (std::isnan(pred) || std::isnan(target)) {
      throw Error("undefined table entry at " + space.decode(h, z).to_string());
    }
    loss += static_cast<double>(entry.count) * (pred - target) * (pred - target);
  }
  return loss;
}

std::vector<double> estimate_initial_values(const std::vector<QFunction>& F,
                                            const std::vector<int>& first_observations) {
  if (first_observations.empty()) throw ConfigError("K_est must be positive");
  std::vector<double> values;
  for (const auto& f : F) {
    double total = 0.0;
    for (int o : first_observations) total += f.max_value(1, static_cast<SuffixCode>(o));
    values.push_back(total / static_cast<double>(first_observations.size()));
  }
  return values;
}

std::vector<double> estimate_initial_values(const EpisodeSampler& sampler,
                                            const std::vector<QFunction>& F, int k_est,
                                            Rng& rng) {
  const UniformPolicy uniform(sampler.action_count());
  std::vector<int> first;
  for (int i = 0; i < k_est; ++i) first.push_back(sampler.sample(uniform, rng).observations[0]);
  return estimate_initial_values(F, first);
}

void collect_epoch(const EpisodeSampler& sampler, const Policy& policy, StepDataset& data,
                   std::uint64_t epoch_seed) {
  const int H = sampler.horizon(), m = sampler.memory();
  const SuffixSpace space = sampler.suffix_space();
  const auto uniform = std::make_shared<UniformPolicy>(sampler.action_count());
  for (int h = 1; h <= H; ++h) {
    Rng rng(mix_seed(epoch_seed, static_cast<std::uint64_t>(h)));
    const auto rollout = compose(borrow(policy), uniform, window_start(h, m));
    const auto tr = sampler.sample(*rollout, rng);
    StepTuple t;
    t.suffix = space.encode_history(h, tr.observations, tr.actions);
    t.action = tr.actions[h - 1];
    if (h < H) {
      t.next_observation = tr.observations[h];
      t.reward = tr.rewards[h];
    }
    data.add(h, t);
  }
}

ConfidenceSet update_confidence_set(const std::vector<QFunction>& F,
                                    const std::vector<QFunction>& G, const StepDataset& data,
                                    double beta) {
  ConfidenceSet set;
  set.beta = beta;
  const int H = data.horizon();
  for (std::size_t i = 0; i < F.size(); ++i) {
    bool keep = true;
    for (int h = 1; h <= H && keep; ++h) {
      if (data.size(h) == 0) continue;
      const double own = squared_loss(data, h, F[i], F[i]);
      double best = std::numeric_limits<double>::infinity();
      for (const auto& g : G) best = std::min(best, squared_loss(data, h, g, F[i]));
      keep = own <= best + beta;
    }
    if (keep) set.survivors.push_back(static_cast<int>(i));
  }
  return set;
}

MGolfResult run_mgolf(const EpisodeSampler& sampler, const FunctionClassPair& classes,
                      const MGolfConfig& config, const ModelOracle* oracle) {
  config.validate();
  if (classes.F.empty()) throw ConfigError("mgolf: empty function class");
  const int H = sampler.horizon(), A = sampler.action_count(), m = sampler.memory();
  const int K = config.epochs;
  MGolfResult result;
  result.k_est = config.k_est.value_or(
      mgolf_k_est(config.beta_c, classes.F.size(), config.epsilon, config.delta));
  result.beta = config.beta.value_or(
      mgolf_beta(config.beta_c, classes.G.size(), K, H,
                 mgolf_rho(H, A, m, config.state_count, config.epsilon), config.delta));
  const std::uint64_t start_episodes = sampler.episodes();

  Rng init_rng(mix_seed(config.seed, 0));
  result.initial_values = estimate_initial_values(sampler, classes.F, result.k_est, init_rng);

  std::vector<int> survivors(classes.F.size());
  for (std::size_t i = 0; i < survivors.size(); ++i) survivors[i] = static_cast<int>(i);
  std::vector<double> gap_cache(classes.F.size(), std::numeric_limits<double>::quiet_NaN());
  StepDataset data(H);
  double beta = result.beta;
  std::vector<PolicyPtr> chosen;

  for (int k = 1; k <= K; ++k) {
    int best = survivors.front();
    for (int i : survivors)
      if (result.initial_values[i] > result.initial_values[best]) best = i;
    MGolfEpoch row;
    row.epoch = k;
    row.selected = best;
    row.optimistic_value = result.initial_values[best];
    const GreedyPolicy pi(classes.F[best]);
    if (oracle) {
      if (std::isnan(gap_cache[best])) {
        gap_cache[best] = oracle->optimal_value() - oracle->policy_value(pi);
      }
      row.exact_gap = gap_cache[best];
    } else {
      row.exact_gap = std::numeric_limits<double>::quiet_NaN();
    }
    result.selected.push_back(best);

    collect_epoch(sampler, pi, data, mix_seed(config.seed, static_cast<std::uint64_t>(k)));
    ConfidenceSet set = update_confidence_set(classes.F, classes.G, data, beta);
    while (set.survivors.empty() && config.doubling) {
      beta = beta > 0.0 ? 2.0 * beta : 1e-6;
      std::cerr << "mgolf: confidence set empty at epoch " << k << ", doubling beta to " << beta
                << "\n";
      set = update_confidence_set(classes.F, classes.G, data, beta);
    }
    row.confset_size = set.survivors.size();
    row.beta = beta;
    row.episodes_used = sampler.episodes() - start_episodes;
    row.qstar_survived =
        classes.qstar_index &&
        std::binary_search(set.survivors.begin(), set.survivors.end(), *classes.qstar_index);
    result.epochs.push_back(row);
    if (set.survivors.empty()) {
      result.aborted = true;
      result.message = "confidence set empty after epoch " + std::to_string(k) +
                       " (beta = " + std::to_string(beta) + ")";
      std::cerr << "mgolf: " << result.message << "\n";
      break;
    }
    survivors = std::move(set.survivors);
  }
  result.episodes = sampler.episodes() - start_episodes;
  if (oracle) {
    double v = 0.0;
    for (int i : result.selected) v += oracle->optimal_value() - gap_cache[i];
    result.output_value = v / static_cast<double>(result.selected.size());
  } else {
    result.output_value = std::numeric_limits<double>::quiet_NaN();
  }
  return result;
}

MixturePolicy mgolf_output_policy(const MGolfResult& result, const FunctionClassPair& classes) {
  std::vector<PolicyPtr> components;
  for (int i : result.selected) components.push_back(std::make_shared<GreedyPolicy>(classes.F[i]));
  return MixturePolicy::uniform(std::move(components));
}

}  // namespace mstep
