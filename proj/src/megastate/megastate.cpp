#include "mstep/megastate/megastate.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "mstep/core/decodability.hpp"
#include "mstep/core/errors.hpp"
#include "mstep/oracle/trajectory_tree.hpp"

namespace mstep {

std::size_t MegastateMdp::state_count() const {
  std::size_t n = 0;
  for (const auto& layer : states) n += layer.size();
  return n;
}

int MegastateMdp::find(int h, SuffixCode z) const {
  const auto& layer = index.at(h - 1);
  auto it = layer.find(z);
  return it == layer.end() ? -1 : it->second;
}

MegastateMdp build_megastate_mdp(const Pomdp& pomdp, int m) {
  pomdp.validate();
  const int H = pomdp.horizon, A = pomdp.action_count, O = pomdp.observation_count;
  const auto verdict = verify_decodability(pomdp, m);
  if (!verdict.decodable) {
    throw ModelError("megastate reduction needs a decodable model; ambiguous suffix " +
                     verdict.witness->to_string());
  }
  const Decoder& decoder = *verdict.decoder;
  MegastateMdp mdp;
  mdp.horizon = H;
  mdp.memory = decoder.memory;
  mdp.action_count = A;
  mdp.space = pomdp.suffix_space(decoder.memory);
  mdp.states.resize(H);
  mdp.index.resize(H);
  mdp.rewards.resize(H);
  for (int h = 1; h <= H; ++h) {
    for (const auto& [z, s] : decoder.states[h - 1]) {
      mdp.index[h - 1][z] = static_cast<int>(mdp.states[h - 1].size());
      mdp.states[h - 1].push_back(z);
      mdp.rewards[h - 1].push_back(pomdp.reward(h, mdp.space.last_observation(z)));
    }
  }
  mdp.initial.assign(mdp.states[0].size(), 0.0);
  for (int s = 0; s < pomdp.state_count; ++s) {
    auto em = pomdp.emission(1, s);
    for (int o = 0; o < O; ++o) {
      const double p = pomdp.initial[s] * em[o];
      if (p > 0.0) mdp.initial[mdp.find(1, static_cast<SuffixCode>(o))] += p;
    }
  }
  mdp.transitions.resize(H - 1);
  for (int h = 1; h < H; ++h) {
    auto& layer = mdp.transitions[h - 1];
    layer.resize(mdp.states[h - 1].size() * A);
    for (std::size_t i = 0; i < mdp.states[h - 1].size(); ++i) {
      const SuffixCode z = mdp.states[h - 1][i];
      const int s = *decoder.lookup(h, z);
      for (int a = 0; a < A; ++a) {
        std::map<int, double> row;
        auto tr = pomdp.transition(h, s, a);
        for (int s2 = 0; s2 < pomdp.state_count; ++s2) {
          if (tr[s2] <= 0.0) continue;
          auto em = pomdp.emission(h + 1, s2);
          for (int o = 0; o < O; ++o) {
            if (em[o] <= 0.0) continue;
            const int j = mdp.find(h + 1, mdp.space.shift(h, z, a, o));
            if (j < 0) throw ModelError("megastate successor missing from the reachable set");
            row[j] += tr[s2] * em[o];
          }
        }
        layer[i * A + a] = SparseRow(row.begin(), row.end());
      }
    }
  }
  return mdp;
}

MdpSolution solve_megastate(const MegastateMdp& mdp) {
  const int H = mdp.horizon, A = mdp.action_count;
  MdpSolution sol;
  sol.q.resize(H);
  sol.greedy.resize(H);
  std::vector<double> next_v;
  for (int h = H; h >= 1; --h) {
    const std::size_t n = mdp.states[h - 1].size();
    sol.q[h - 1].assign(n * A, 0.0);
    sol.greedy[h - 1].assign(n, 0);
    std::vector<double> v(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (int a = 0; a < A && h < H; ++a) {
        double q = 0.0;
        for (const auto& [j, p] : mdp.transitions[h - 1][i * A + a]) {
          q += p * (mdp.rewards[h][j] + next_v[j]);
        }
        sol.q[h - 1][i * A + a] = q;
      }
      for (int a = 1; a < A; ++a)
        if (sol.q[h - 1][i * A + a] > sol.q[h - 1][i * A + sol.greedy[h - 1][i]])
          sol.greedy[h - 1][i] = a;
      v[i] = sol.q[h - 1][i * A + sol.greedy[h - 1][i]];
    }
    next_v = std::move(v);
  }
  for (std::size_t i = 0; i < mdp.initial.size(); ++i) {
    sol.value += mdp.initial[i] * (mdp.rewards[0][i] + next_v[i]);
  }
  return sol;
}

double evaluate_megastate_policy(const MegastateMdp& mdp,
                                 const std::vector<std::vector<int>>& actions) {
  const int H = mdp.horizon, A = mdp.action_count;
  std::vector<double> occ = mdp.initial;
  double value = 0.0;
  for (int h = 1; h <= H; ++h) {
    for (std::size_t i = 0; i < occ.size(); ++i) value += occ[i] * mdp.rewards[h - 1][i];
    if (h == H) break;
    std::vector<double> next(mdp.states[h].size(), 0.0);
    for (std::size_t i = 0; i < occ.size(); ++i) {
      if (occ[i] == 0.0) continue;
      const int a = actions[h - 1][i];
      for (const auto& [j, p] : mdp.transitions[h - 1][i * A + a]) next[j] += occ[i] * p;
    }
    occ = std::move(next);
  }
  return value;
}

SuffixPolicy pull_back(const MegastateMdp& mdp, const std::vector<std::vector<int>>& actions) {
  std::vector<std::vector<int>> table(mdp.horizon);
  for (int h = 1; h <= mdp.horizon; ++h) {
    table[h - 1].assign(mdp.space.size(h), 0);
    for (std::size_t i = 0; i < mdp.states[h - 1].size(); ++i) {
      table[h - 1][mdp.states[h - 1][i]] = actions[h - 1][i];
    }
  }
  return SuffixPolicy::deterministic(mdp.space, table);
}

double markov_deviation(const Pomdp& pomdp, const MegastateMdp& mdp) {
  const int H = pomdp.horizon, A = pomdp.action_count, S = pomdp.state_count,
            O = pomdp.observation_count;
  const UniformPolicy uniform(A);
  TrajectoryTree tree(pomdp, uniform);
  double worst = 0.0;
  for (int h = 1; h < H; ++h) {
    std::map<std::pair<std::vector<int>, std::vector<int>>, std::vector<double>> beliefs;
    for (const auto& node : tree.nodes()) {
      auto& alpha = beliefs[{node.observations, node.actions}];
      alpha.resize(S, 0.0);
      alpha[node.state()] += node.probability;
    }
    for (const auto& [history, alpha] : beliefs) {
      double total = 0.0;
      for (double v : alpha) total += v;
      const SuffixCode z = mdp.space.encode_history(h, history.first, history.second);
      const int i = mdp.find(h, z);
      if (i < 0) throw ModelError("reachable history with a suffix outside the megastate MDP");
      for (int a = 0; a < A; ++a) {
        std::vector<double> lhs(O, 0.0);
        for (int s = 0; s < S; ++s) {
          if (alpha[s] <= 0.0) continue;
          auto tr = pomdp.transition(h, s, a);
          for (int s2 = 0; s2 < S; ++s2) {
            if (tr[s2] <= 0.0) continue;
            auto em = pomdp.emission(h + 1, s2);
            for (int o = 0; o < O; ++o) lhs[o] += alpha[s] / total * tr[s2] * em[o];
          }
        }
        const auto& row = mdp.transitions[h - 1][i * A + a];
        for (int o = 0; o < O; ++o) {
          const int j = mdp.find(h + 1, mdp.space.shift(h, z, a, o));
          double rhs = 0.0;
          for (const auto& [k, p] : row)
            if (k == j) rhs = p;
          worst = std::max(worst, std::abs(lhs[o] - rhs));
        }
      }
    }
    tree.advance();
  }
  return worst;
}

EmpiricalModel exact_model(const MegastateMdp& mdp) {
  EmpiricalModel model;
  model.initial = mdp.initial;
  model.transitions = mdp.transitions;
  model.rewards = mdp.rewards;
  for (const auto& layer : mdp.transitions) {
    model.counts.emplace_back(layer.size(), std::uint64_t{1} << 62);
  }
  return model;
}

OptimisticPlan optimistic_plan(const MegastateMdp& mdp, const EmpiricalModel& model,
                               double bonus_scale, double log_term) {
  const int H = mdp.horizon, A = mdp.action_count;
  OptimisticPlan plan;
  plan.q.resize(H);
  plan.greedy.resize(H);
  std::vector<double> next_v;
  for (int h = H; h >= 1; --h) {
    const std::size_t n = mdp.states[h - 1].size();
    plan.q[h - 1].assign(n * A, 0.0);
    plan.greedy[h - 1].assign(n, 0);
    std::vector<double> v(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      if (h < H) {
        for (int a = 0; a < A; ++a) {
          const std::uint64_t count = model.counts[h - 1][i * A + a];
          double q = 1.0;
          if (count > 0) {
            q = 0.0;
            for (const auto& [j, p] : model.transitions[h - 1][i * A + a]) {
              q += p * (model.rewards[h][j] + next_v[j]);
            }
          }
          q += bonus_scale * H *
               std::sqrt(log_term / static_cast<double>(std::max<std::uint64_t>(1, count)));
          plan.q[h - 1][i * A + a] = q;
        }
      }
      int best = 0;
      for (int a = 1; a < A; ++a)
        if (plan.q[h - 1][i * A + a] > plan.q[h - 1][i * A + best]) best = a;
      plan.greedy[h - 1][i] = best;
      v[i] = std::min(1.0, plan.q[h - 1][i * A + best]);
    }
    next_v = std::move(v);
  }
  for (std::size_t i = 0; i < model.initial.size(); ++i) {
    plan.value += model.initial[i] * (model.rewards[0][i] + next_v[i]);
  }
  return plan;
}

UcbviResult ucbvi_learn(const MegastateMdp& mdp, const EpisodeSampler& sampler,
                        const UcbviConfig& config) {
  if (config.episodes < 1) throw ConfigError("ucbvi: K must be positive");
  if (!(config.delta > 0.0 && config.delta < 1.0)) throw ConfigError("ucbvi: delta must lie in (0, 1)");
  if (!(config.bonus_scale >= 0.0)) throw ConfigError("ucbvi: bonus scale must be non-negative");
  const int H = mdp.horizon, A = mdp.action_count, K = config.episodes;
  if (sampler.horizon() != H || sampler.action_count() != A) {
    throw ConfigError("ucbvi: sampler does not match the megastate MDP");
  }
  const double log_term = std::log(static_cast<double>(mdp.state_count()) * A * H * K / config.delta);

  // Learner statistics (counts only; nothing from mdp.transitions or mdp.initial).
  std::vector<std::uint64_t> first_counts(mdp.states[0].size(), 0);
  std::vector<std::vector<std::map<int, std::uint64_t>>> next_counts(H > 1 ? H - 1 : 0);
  EmpiricalModel model;
  model.initial.assign(mdp.states[0].size(), 0.0);
  model.rewards.resize(H);
  for (int h = 1; h <= H; ++h) model.rewards[h - 1].assign(mdp.states[h - 1].size(), 0.0);
  model.transitions.resize(H > 1 ? H - 1 : 0);
  model.counts.resize(H > 1 ? H - 1 : 0);
  for (int h = 1; h < H; ++h) {
    next_counts[h - 1].resize(mdp.states[h - 1].size() * A);
    model.transitions[h - 1].resize(mdp.states[h - 1].size() * A);
    model.counts[h - 1].assign(mdp.states[h - 1].size() * A, 0);
  }
  const double v_star = solve_megastate(mdp).value;

  UcbviResult result;
  double regret = 0.0;
  Rng rng(config.seed);
  for (int k = 1; k <= K; ++k) {
    const OptimisticPlan plan = optimistic_plan(mdp, model, config.bonus_scale, log_term);
    const SuffixPolicy policy = pull_back(mdp, plan.greedy);
    const auto tr = sampler.sample(policy, rng);

    std::vector<int> idx(H);
    for (int h = 1; h <= H; ++h) {
      idx[h - 1] = mdp.find(h, mdp.space.encode_history(h, tr.observations, tr.actions));
      if (idx[h - 1] < 0) throw ModelError("observed suffix outside the megastate MDP");
      model.rewards[h - 1][idx[h - 1]] = tr.rewards[h - 1];
    }
    ++first_counts[idx[0]];
    for (std::size_t i = 0; i < first_counts.size(); ++i) {
      model.initial[i] = static_cast<double>(first_counts[i]) / k;
    }
    for (int h = 1; h < H; ++h) {
      const std::size_t cell = static_cast<std::size_t>(idx[h - 1]) * A + tr.actions[h - 1];
      auto& counts = next_counts[h - 1][cell];
      ++counts[idx[h]];
      const std::uint64_t n = ++model.counts[h - 1][cell];
      SparseRow row;
      for (const auto& [j, c] : counts) row.emplace_back(j, static_cast<double>(c) / n);
      model.transitions[h - 1][cell] = std::move(row);
    }

    UcbviEpisode e;
    e.episode = k;
    e.policy_value = evaluate_megastate_policy(mdp, plan.greedy);
    e.gap = v_star - e.policy_value;
    regret += e.gap;
    e.cumulative_regret = regret;
    result.curve.push_back(e);
  }
  const OptimisticPlan final_plan = optimistic_plan(mdp, model, config.bonus_scale, log_term);
  result.final_actions = final_plan.greedy;
  result.final_value = evaluate_megastate_policy(mdp, final_plan.greedy);
  result.final_gap = v_star - result.final_value;
  return result;
}

int episodes_to_gap(const UcbviResult& result, double threshold) {
  int last_bad = 0;
  for (const auto& e : result.curve)
    if (e.gap > threshold) last_bad = e.episode;
  return last_bad + 1;
}

int episodes_to_average_gap(const UcbviResult& result, double threshold, int window) {
  if (window < 1) throw ConfigError("window must be positive");
  const auto& c = result.curve;
  double sum = 0.0;
  for (std::size_t k = 0; k < c.size(); ++k) {
    sum += c[k].gap;
    if (k >= static_cast<std::size_t>(window)) sum -= c[k - window].gap;
    if (k + 1 >= static_cast<std::size_t>(window) && sum / window <= threshold) return c[k].episode;
  }
  return static_cast<int>(c.size()) + 1;
}

}  // namespace mstep
