#include <doctest.h>

#include <cmath>

#include "mstep/core/errors.hpp"
#include "mstep/core/simulate.hpp"
#include "mstep/environments/environments.hpp"
#include "mstep/olive/olive.hpp"
#include "mstep/oracle/oracle.hpp"

using namespace mstep;

TEST_CASE("config validation") {
  OliveConfig c;
  CHECK_NOTHROW(c.validate());
  c.n_est = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = OliveConfig{};
  c.eps_act = -0.1;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("F = {Q*} terminates in round 1 with the optimal policy") {
  for (bool exact : {true, false}) {
    const Pomdp lock = make_combination_lock(2, 2);
    const ModelOracle oracle(lock);
    OliveConfig cfg;
    cfg.exact = exact;
    cfg.seed = 2;
    const auto result = run_olive(EpisodeSampler(lock), {oracle.qstar()}, cfg, &oracle);
    CHECK(result.terminated);
    CHECK_FALSE(result.exhausted);
    CHECK(result.rounds == 1);
    CHECK(result.selected == 0);
    CHECK(result.history.front().exact_gap == doctest::Approx(0.0).epsilon(1e-12));
  }
}

TEST_CASE("exact mode on Hadamard eliminates exactly one f_i per round") {
  for (int s : {2, 3, 4}) {
    const auto inst = make_hadamard_instance(s);
    const ModelOracle oracle(inst.pomdp);
    OliveConfig cfg;
    cfg.exact = true;
    const auto result = run_olive(EpisodeSampler(inst.pomdp), inst.classes.F, cfg, &oracle);
    CHECK(result.terminated);
    CHECK(result.rounds == inst.contexts);
    CHECK(result.selected == 0);
    for (std::size_t r = 0; r + 1 < result.history.size(); ++r) {
      const auto& round = result.history[r];
      CHECK(round.eliminated.size() == 1);
      CHECK(round.eliminated.front() == round.selected);
      CHECK(round.violating_step == 2);
      CHECK(round.violation == doctest::Approx(0.25).epsilon(1e-12));
    }
  }
}

TEST_CASE("Monte-Carlo mode keeps Q* and removes every f_i on Hadamard") {
  const auto inst = make_hadamard_instance(3);
  const ModelOracle oracle(inst.pomdp);
  OliveConfig cfg;
  cfg.n_est = 4000;
  cfg.seed = 7;
  const auto result = run_olive(EpisodeSampler(inst.pomdp), inst.classes.F, cfg, &oracle);
  CHECK(result.terminated);
  CHECK(result.selected == 0);
  for (const auto& round : result.history)
    for (int e : round.eliminated) CHECK(e != 0);
  CHECK(olive_episodes_to_optimal(result, 0.05) == result.history.back().episodes_before);
}

TEST_CASE("every round removes at least one function and episodes are counted") {
  const Pomdp lock = make_combination_lock(2, 2);
  const ModelOracle oracle(lock);
  const auto cls = make_decoy_class(oracle, 3, 2);
  OliveConfig cfg;
  cfg.seed = 5;
  const EpisodeSampler sampler(lock);
  const auto result = run_olive(sampler, cls.F, cfg, &oracle);
  std::uint64_t prev = 0;
  std::size_t alive = cls.F.size();
  for (const auto& round : result.history) {
    CHECK(round.episodes_before >= prev);
    CHECK(round.episodes_after >= round.episodes_before);
    prev = round.episodes_after;
    if (round.violating_step > 0) {
      CHECK(round.survivors < alive);
      alive = round.survivors;
    }
  }
  CHECK(result.episodes == sampler.episodes());
}

TEST_CASE("OLIVE runs are deterministic given the seed") {
  const auto inst = make_hadamard_instance(2);
  OliveConfig cfg;
  cfg.seed = 11;
  const auto a = run_olive(EpisodeSampler(inst.pomdp), inst.classes.F, cfg);
  const auto b = run_olive(EpisodeSampler(inst.pomdp), inst.classes.F, cfg);
  REQUIRE(a.history.size() == b.history.size());
  for (std::size_t r = 0; r < a.history.size(); ++r) {
    CHECK(a.history[r].selected == b.history[r].selected);
    CHECK(a.history[r].estimated_value == b.history[r].estimated_value);
  }
  CHECK(std::isnan(a.history.front().exact_gap));
}

TEST_CASE("exact mode needs an oracle") {
  const auto inst = make_hadamard_instance(2);
  OliveConfig cfg;
  cfg.exact = true;
  CHECK_THROWS_AS(run_olive(EpisodeSampler(inst.pomdp), inst.classes.F, cfg), ConfigError);
}
