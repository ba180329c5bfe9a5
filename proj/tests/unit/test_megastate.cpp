#include <doctest.h>

#include <cmath>

#include "mstep/core/errors.hpp"
#include "mstep/core/simulate.hpp"
#include "mstep/environments/environments.hpp"
#include "mstep/megastate/megastate.hpp"
#include "mstep/oracle/oracle.hpp"
#include "../support/corpus.hpp"

using namespace mstep;

namespace {

Pomdp block_mdp() {
  Pomdp p = Pomdp::shaped(3, 1, 2, 2, 2);
  p.initial = {0.5, 0.5};
  for (int h = 1; h < 3; ++h)
    for (int s = 0; s < 2; ++s)
      for (int a = 0; a < 2; ++a) {
        auto t = p.transition(h, s, a);
        t[0] = 0.25 + 0.5 * ((s + a + h) % 2);
        t[1] = 1.0 - t[0];
      }
  for (int h = 1; h <= 3; ++h)
    for (int s = 0; s < 2; ++s) p.emission(h, s)[s] = 1.0;
  p.reward(3, 1) = 1.0;
  return p;
}

}  // namespace

TEST_CASE("m = 1 block MDP reduces to the observation-level MDP") {
  const Pomdp p = block_mdp();
  const auto mdp = build_megastate_mdp(p, 1);
  for (int h = 1; h <= 3; ++h) {
    REQUIRE(mdp.states[h - 1].size() == 2);
    for (int i = 0; i < 2; ++i) CHECK(mdp.states[h - 1][i] == static_cast<SuffixCode>(i));
  }
  for (int h = 1; h < 3; ++h)
    for (int s = 0; s < 2; ++s)
      for (int a = 0; a < 2; ++a) {
        const auto& row = mdp.transitions[h - 1][s * 2 + a];
        for (const auto& [j, q] : row) CHECK(q == p.transition(h, s, a)[j]);
      }
}

TEST_CASE("megastate MDP structure on the corpus") {
  for (const auto& e : testing::make_corpus(14)) {
    const int m = e.pomdp.memory;
    const auto mdp = build_megastate_mdp(e.pomdp, m);
    const double O = e.pomdp.observation_count, A = e.pomdp.action_count;
    double total = 0.0;
    for (double q : mdp.initial) total += q;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    for (int h = 1; h <= e.pomdp.horizon; ++h) {
      const int len = window_length(h, m);
      CHECK(static_cast<double>(mdp.states[h - 1].size()) <= std::pow(O, len) * std::pow(A, len - 1));
      for (std::size_t i = 0; i < mdp.states[h - 1].size(); ++i)
        CHECK(mdp.rewards[h - 1][i] ==
              e.pomdp.reward(h, mdp.space.last_observation(mdp.states[h - 1][i])));
    }
    for (const auto& layer : mdp.transitions)
      for (const auto& row : layer) {
        double s = 0.0;
        for (const auto& [j, q] : row) s += q;
        CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
      }
  }
}

TEST_CASE("megastate dynamics are Markov and the optimal value matches the POMDP") {
  for (const auto& e : testing::make_corpus(14)) {
    const auto mdp = build_megastate_mdp(e.pomdp, e.pomdp.memory);
    CHECK_MESSAGE(markov_deviation(e.pomdp, mdp) <= 1e-12, e.name);
    const ModelOracle oracle(e.pomdp);
    CHECK_MESSAGE(std::abs(solve_megastate(mdp).value - oracle.optimal_value()) <= 1e-12, e.name);
  }
}

TEST_CASE("a memory too short for the model is refused") {
  CHECK_THROWS_AS(build_megastate_mdp(make_combination_lock(3, 2), 2), ModelError);
}

TEST_CASE("pulled-back megastate policies keep their value") {
  Rng rng(6);
  for (const auto& e : testing::make_corpus(10)) {
    const auto mdp = build_megastate_mdp(e.pomdp, e.pomdp.memory);
    const ModelOracle oracle(e.pomdp);
    for (int rep = 0; rep < 5; ++rep) {
      std::vector<std::vector<int>> actions(mdp.horizon);
      for (int h = 1; h <= mdp.horizon; ++h)
        for (std::size_t i = 0; i < mdp.states[h - 1].size(); ++i)
          actions[h - 1].push_back(rng.uniform_int(mdp.action_count));
      const SuffixPolicy pi = pull_back(mdp, actions);
      CHECK(pi.is_deterministic());
      CHECK(std::abs(oracle.policy_value(pi) - evaluate_megastate_policy(mdp, actions)) <= 1e-12);
    }
    const auto sol = solve_megastate(mdp);
    CHECK(std::abs(oracle.policy_value(pull_back(mdp, sol.greedy)) - oracle.optimal_value()) <= 1e-12);
  }
}

TEST_CASE("known-model limit: zero bonuses on the true model give V*") {
  for (const auto& e : testing::make_corpus(8)) {
    const auto mdp = build_megastate_mdp(e.pomdp, e.pomdp.memory);
    const auto plan = optimistic_plan(mdp, exact_model(mdp), 0.0, 1.0);
    const double vstar = solve_megastate(mdp).value;
    CHECK(std::abs(plan.value - vstar) <= 1e-12);
    CHECK(std::abs(evaluate_megastate_policy(mdp, plan.greedy) - vstar) <= 1e-12);
  }
}

TEST_CASE("UCB-VI on the m = 2 lock: small final gap and concave regret") {
  const Pomdp lock = make_combination_lock(2, 2);
  const auto mdp = build_megastate_mdp(lock, 2);
  UcbviConfig cfg;
  cfg.seed = 1;
  const auto result = ucbvi_learn(mdp, EpisodeSampler(lock), cfg);
  REQUIRE(result.curve.size() == 5000);
  CHECK(result.final_gap <= 0.05);
  std::vector<double> block;
  for (int b = 0; b < 5; ++b) {
    const double start = b == 0 ? 0.0 : result.curve[b * 1000 - 1].cumulative_regret;
    block.push_back(result.curve[(b + 1) * 1000 - 1].cumulative_regret - start);
  }
  for (int b = 1; b < 5; ++b) CHECK(block[b] <= block[b - 1]);
}

TEST_CASE("UCB-VI is deterministic given the seed") {
  const Pomdp lock = make_combination_lock(2, 2);
  const auto mdp = build_megastate_mdp(lock, 2);
  UcbviConfig cfg;
  cfg.episodes = 300;
  cfg.seed = 5;
  const auto a = ucbvi_learn(mdp, EpisodeSampler(lock), cfg);
  const auto b = ucbvi_learn(mdp, EpisodeSampler(lock), cfg);
  CHECK(a.final_actions == b.final_actions);
  for (std::size_t k = 0; k < a.curve.size(); ++k) CHECK(a.curve[k].gap == b.curve[k].gap);
}

TEST_CASE("UCB-VI sample cost grows with A^m on the m = 3 lock") {
  auto cost = [](int A) {
    const Pomdp lock = make_combination_lock(3, A);
    UcbviConfig cfg;
    cfg.episodes = 60000;
    cfg.seed = 1;
    return episodes_to_average_gap(ucbvi_learn(build_megastate_mdp(lock, 3), EpisodeSampler(lock), cfg),
                                   0.1, 500);
  };
  const int two = cost(2), three = cost(3);
  MESSAGE("episodes to 500-episode mean gap 0.1: A=2 ", two, ", A=3 ", three);
  CHECK(two <= 60000);
  CHECK(three >= 2 * two);
}

TEST_CASE("UCB-VI rejects invalid configurations") {
  const Pomdp lock = make_combination_lock(2, 2);
  const auto mdp = build_megastate_mdp(lock, 2);
  UcbviConfig cfg;
  cfg.episodes = 0;
  CHECK_THROWS_AS(ucbvi_learn(mdp, EpisodeSampler(lock), cfg), ConfigError);
}
