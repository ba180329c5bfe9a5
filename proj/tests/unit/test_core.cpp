#include <doctest.h>

#include <cmath>
#include <map>

#include "mstep/core/decodability.hpp"
#include "mstep/core/errors.hpp"
#include "mstep/core/policy.hpp"
#include "mstep/core/pomdp.hpp"
#include "mstep/core/pomdp_io.hpp"
#include "mstep/core/rng.hpp"
#include "mstep/core/simulate.hpp"
#include "mstep/core/suffix.hpp"
#include "mstep/environments/environments.hpp"
#include "mstep/oracle/trajectory_tree.hpp"
#include "../support/corpus.hpp"

using namespace mstep;

namespace {

Pomdp degenerate_model(int H) {
  Pomdp p = Pomdp::shaped(H, 1, 1, 1, 1);
  p.initial = {1.0};
  for (int h = 1; h < H; ++h) p.transition(h, 0, 0)[0] = 1.0;
  for (int h = 1; h <= H; ++h) p.emission(h, 0)[0] = 1.0;
  return p;
}

// Two latent states, emissions identify the state, random transitions.
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

// Both states at h = 2 emit the only observation and are reachable from the same history.
Pomdp ambiguous_model() {
  Pomdp p = Pomdp::shaped(2, 2, 2, 1, 1);
  p.initial = {1.0, 0.0};
  p.transition(1, 0, 0)[0] = 0.5;
  p.transition(1, 0, 0)[1] = 0.5;
  p.transition(1, 1, 0)[1] = 1.0;
  for (int h = 1; h <= 2; ++h)
    for (int s = 0; s < 2; ++s) p.emission(h, s)[0] = 1.0;
  return p;
}

}  // namespace

TEST_CASE("window start and length follow max(h - m + 1, 1)") {
  CHECK(window_start(1, 3) == 1);
  CHECK(window_start(3, 2) == 2);
  CHECK(window_start(5, 5) == 1);
  CHECK(window_length(2, 5) == 2);
  CHECK(window_length(7, 3) == 3);
}

TEST_CASE("extract_suffix examples") {
  const std::vector<int> obs{4, 5, 6};
  const std::vector<int> acts{1, 0, 1};
  SUBCASE("H=3, m=2, h=3 gives (o2, a2, o3)") {
    const Suffix z = extract_suffix(obs, acts, 3, 2);
    CHECK(z.observations == std::vector<int>{5, 6});
    CHECK(z.actions == std::vector<int>{0});
  }
  SUBCASE("h=1 gives (o1)") {
    for (int m = 1; m <= 4; ++m) {
      const Suffix z = extract_suffix(obs, acts, 1, m);
      CHECK(z.observations == std::vector<int>{4});
      CHECK(z.actions.empty());
    }
  }
  SUBCASE("h=2, m=5 gives the full history") {
    const Suffix z = extract_suffix(obs, acts, 2, 5);
    CHECK(z.observations == std::vector<int>{4, 5});
    CHECK(z.actions == std::vector<int>{1});
  }
}

TEST_CASE("extract_suffix length invariants hold for all h and m") {
  Rng rng(3);
  for (int H = 1; H <= 6; ++H) {
    std::vector<int> obs(H), acts(H);
    for (int h = 0; h < H; ++h) {
      obs[h] = rng.uniform_int(3);
      acts[h] = rng.uniform_int(2);
    }
    for (int m = 1; m <= H + 1; ++m)
      for (int h = 1; h <= H; ++h) {
        const Suffix z = extract_suffix(obs, acts, h, m);
        CHECK(static_cast<int>(z.observations.size()) == std::min(h, m));
        CHECK(z.actions.size() + 1 == z.observations.size());
        CHECK(z.observations.back() == obs[h - 1]);
      }
  }
}

TEST_CASE("suffix codes round-trip and shift agrees with re-encoding") {
  Rng rng(11);
  for (int m = 1; m <= 4; ++m) {
    const int H = 5, O = 3, A = 2;
    const SuffixSpace space(H, m, O, A);
    for (int rep = 0; rep < 50; ++rep) {
      std::vector<int> obs(H), acts(H);
      for (int h = 0; h < H; ++h) {
        obs[h] = rng.uniform_int(O);
        acts[h] = rng.uniform_int(A);
      }
      for (int h = 1; h <= H; ++h) {
        const SuffixCode code = space.encode_history(h, obs, acts);
        REQUIRE(code < space.size(h));
        const Suffix z = space.decode(h, code);
        CHECK(z == extract_suffix(obs, acts, h, m));
        CHECK(space.encode(z) == code);
        CHECK(space.last_observation(code) == obs[h - 1]);
        if (h < H) {
          CHECK(space.shift(h, code, acts[h - 1], obs[h]) == space.encode_history(h + 1, obs, acts));
        }
      }
    }
  }
}

TEST_CASE("model validation refuses invalid probability vectors and rewards") {
  Pomdp p = block_mdp();
  CHECK_NOTHROW(p.validate());
  SUBCASE("unnormalized transition") {
    p.transition(1, 0, 0)[0] += 1e-9;
    CHECK_THROWS_AS(p.validate(), ModelError);
  }
  SUBCASE("negative emission") {
    p.emission(2, 0)[0] = 1.5;
    p.emission(2, 0)[1] = -0.5;
    CHECK_THROWS_AS(p.validate(), ModelError);
  }
  SUBCASE("reward outside [0, 1]") {
    p.reward(1, 0) = 1.25;
    CHECK_THROWS_AS(p.validate(), ModelError);
  }
  SUBCASE("memory outside [1, H]") {
    p.memory = 0;
    CHECK_THROWS_AS(p.validate(), ModelError);
  }
}

TEST_CASE("degenerate model gives a trajectory of zeros for any seed") {
  const Pomdp p = degenerate_model(4);
  const UniformPolicy pi(1);
  for (std::uint64_t seed : {0ULL, 1ULL, 99ULL}) {
    const Trajectory tr = simulate_episode(p, pi, seed);
    REQUIRE(tr.steps.size() == 4);
    for (const auto& st : tr.steps) {
      CHECK(st.hidden_state == 0);
      CHECK(st.observation == 0);
      CHECK(st.action == 0);
      CHECK(st.reward == 0.0);
    }
  }
}

TEST_CASE("Hadamard instance under always-a1 pays 1/2 with probability 1") {
  const auto inst = make_hadamard_instance(3);
  const SuffixPolicy a1 = SuffixPolicy::constant(inst.pomdp.suffix_space(), 0);
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const Trajectory tr = simulate_episode(inst.pomdp, a1, seed);
    CHECK(tr.steps[1].hidden_state == 1);
    CHECK(tr.observable().total_reward() == 0.5);
  }
}

TEST_CASE("combination lock m=3 pays 1 exactly on the correct action sequence") {
  const Pomdp lock = make_combination_lock(3, 2);
  const SuffixSpace space = lock.suffix_space();
  for (int a1 = 0; a1 < 2; ++a1)
    for (int a2 = 0; a2 < 2; ++a2)
      for (int a3 = 0; a3 < 2; ++a3) {
        std::vector<std::vector<int>> table(lock.horizon);
        const int acts[3] = {a1, a2, a3};
        for (int h = 1; h <= lock.horizon; ++h)
          table[h - 1].assign(space.size(h), h <= 3 ? acts[h - 1] : 0);
        const SuffixPolicy pi = SuffixPolicy::deterministic(space, table);
        const bool correct = a1 == lock_special_action(1, 2) && a2 == lock_special_action(2, 2);
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
          CHECK(simulate_episode(lock, pi, seed).observable().total_reward() ==
                (correct ? 1.0 : 0.0));
        }
      }
}

TEST_CASE("simulation is a pure function of (model, policy, seed)") {
  const Pomdp p = make_random_decodable(3, 3, 2, 4, 2, 5);
  Rng prng(1);
  const SuffixPolicy pi = SuffixPolicy::random_deterministic(p.suffix_space(), prng);
  const UniformPolicy uni(2);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    CHECK(simulate_episode(p, pi, seed) == simulate_episode(p, pi, seed));
    CHECK(simulate_episode(p, uni, seed) == simulate_episode(p, uni, seed));
  }
}

TEST_CASE("rewards in a trajectory are the observation rewards") {
  const Pomdp p = make_random_decodable(3, 3, 2, 4, 2, 8);
  const UniformPolicy uni(2);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Trajectory tr = simulate_episode(p, uni, seed);
    for (int h = 1; h <= p.horizon; ++h)
      CHECK(tr.steps[h - 1].reward == p.reward(h, tr.steps[h - 1].observation));
    const auto obs = tr.observable();
    CHECK(obs.observations.size() == static_cast<std::size_t>(p.horizon));
    CHECK(obs.rewards.size() == static_cast<std::size_t>(p.horizon));
  }
}

TEST_CASE("episode sampler hides the decoder and matches direct simulation") {
  const Pomdp lock = make_combination_lock(2, 2);
  REQUIRE(lock.decoder.has_value());
  const EpisodeSampler sampler(lock);
  const UniformPolicy uni(2);
  Rng a(17), b(17);
  for (int i = 0; i < 10; ++i) {
    CHECK(sampler.sample(uni, a) == simulate_episode(lock, uni, b).observable());
  }
  CHECK(sampler.episodes() == 10);
}

TEST_CASE("undefined suffix policy fails loudly with the step") {
  const Pomdp lock = make_combination_lock(2, 2);
  SuffixPolicy partial(lock.suffix_space());
  for (SuffixCode z = 0; z < lock.suffix_space().size(1); ++z) partial.set_action(1, z, 0);
  try {
    simulate_episode(lock, partial, 3);
    FAIL("expected PolicyUndefined");
  } catch (const PolicyUndefined& e) {
    CHECK(e.step() == 2);
  }
}

TEST_CASE("composition switches at step t") {
  const Pomdp p = make_random_decodable(3, 3, 2, 4, 2, 21);
  const SuffixSpace space = p.suffix_space();
  const auto first = std::make_shared<SuffixPolicy>(SuffixPolicy::constant(space, 0));
  const auto second = std::make_shared<SuffixPolicy>(SuffixPolicy::constant(space, 1));
  for (int t = 1; t <= p.horizon + 1; ++t) {
    const auto pi = compose(first, second, t);
    const Trajectory tr = simulate_episode(p, *pi, 4);
    for (int h = 1; h <= p.horizon; ++h) CHECK(tr.steps[h - 1].action == (h < t ? 0 : 1));
  }
}

TEST_CASE("self-composition reproduces the policy's trajectories") {
  const Pomdp p = make_random_decodable(3, 3, 2, 4, 2, 21);
  const auto uni = std::make_shared<UniformPolicy>(2);
  for (int t = 1; t <= p.horizon + 1; ++t) {
    const auto pi = compose(uni, uni, t);
    for (std::uint64_t seed = 0; seed < 10; ++seed)
      CHECK(simulate_episode(p, *pi, seed) == simulate_episode(p, *uni, seed));
  }
}

TEST_CASE("mixture policy posterior matches sampling a component per episode") {
  const Pomdp p = make_combination_lock(2, 2);
  const SuffixSpace space = p.suffix_space();
  MixturePolicy mix({std::make_shared<SuffixPolicy>(SuffixPolicy::constant(space, 0)),
                     std::make_shared<SuffixPolicy>(SuffixPolicy::constant(space, 1))},
                    {0.25, 0.75});
  std::vector<int> obs{0}, acts;
  std::vector<double> probs(2);
  mix.distribution(HistoryView{1, obs, acts}, probs);
  CHECK(probs[0] == doctest::Approx(0.25).epsilon(1e-14));
  acts = {1};
  obs = {0, 0};
  mix.distribution(HistoryView{2, obs, acts}, probs);
  CHECK(probs[1] == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("rng categorical never draws a zero-probability index") {
  Rng rng(5);
  const std::vector<double> probs{0.0, 0.5, 0.0, 0.5, 0.0};
  for (int i = 0; i < 10000; ++i) {
    const int k = rng.categorical(probs);
    CHECK((k == 1 || k == 3));
  }
  CHECK(mix_seed(1, 2) != mix_seed(2, 1));
}

TEST_CASE("verify_decodability examples") {
  SUBCASE("block MDP is 1-step decodable") {
    const auto r = verify_decodability(block_mdp(), 1);
    CHECK(r.decodable);
    REQUIRE(r.decoder.has_value());
    CHECK(r.decoder->lookup(2, 1) == 1);
  }
  SUBCASE("shared observation from the same history gives a witness") {
    const auto r = verify_decodability(ambiguous_model(), 2);
    CHECK_FALSE(r.decodable);
    REQUIRE(r.witness.has_value());
    CHECK(r.witness->step == 2);
    CHECK(r.witness_states.size() == 2);
    CHECK(r.witness_states[0] != r.witness_states[1]);
  }
  SUBCASE("Hadamard instance is decodable with m=2 but not m=1") {
    const auto inst = make_hadamard_instance(2);
    CHECK(verify_decodability(inst.pomdp, 2).decodable);
    CHECK_FALSE(verify_decodability(inst.pomdp, 1).decodable);
  }
}

TEST_CASE("verify_decodability refuses instances above the cap") {
  const Pomdp big = make_combination_lock(3, 2);
  setenv("MSTEP_ORACLE_CAP", "10", 1);
  CHECK_THROWS_AS(verify_decodability(big, 3), CapExceeded);
  unsetenv("MSTEP_ORACLE_CAP");
  CHECK(verify_decodability(big, 3).decodable);
}

TEST_CASE("decodability is monotone in m on the corpus") {
  for (const auto& entry : testing::make_corpus(12)) {
    bool seen = false;
    for (int m = 1; m <= entry.pomdp.horizon + 1; ++m) {
      const bool d = verify_decodability(entry.pomdp, m).decodable;
      if (seen) CHECK_MESSAGE(d, entry.name << " m=" << m);
      seen = seen || d;
    }
    CHECK_MESSAGE(seen, entry.name);
  }
}

TEST_CASE("empirical trajectory frequencies match the exact law (chi-square)") {
  const Pomdp p = make_random_decodable(2, 2, 2, 3, 2, 1234);
  const UniformPolicy uni(2);
  TrajectoryTree tree(p, uni);
  tree.advance_to(p.horizon);
  std::map<std::vector<int>, double> expected;
  for (const auto& node : tree.nodes()) {
    for (int a = 0; a < 2; ++a) {
      std::vector<int> key = node.observations;
      key.insert(key.end(), node.actions.begin(), node.actions.end());
      key.push_back(a);
      expected[key] += node.probability * 0.5;
    }
  }
  const int N = 100000;
  std::map<std::vector<int>, int> counts;
  Rng rng(2024);
  for (int i = 0; i < N; ++i) {
    const auto tr = simulate_episode(p, uni, rng).observable();
    std::vector<int> key = tr.observations;
    key.insert(key.end(), tr.actions.begin(), tr.actions.end());
    counts[key]++;
  }
  double total = 0.0;
  for (const auto& [k, q] : expected) total += q;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  double chi2 = 0.0;
  for (const auto& [k, q] : expected) {
    const double e = q * N;
    const double diff = counts[k] - e;
    chi2 += diff * diff / e;
  }
  for (const auto& [k, c] : counts) CHECK_MESSAGE(expected.count(k), "trajectory outside the support");
  const double df = static_cast<double>(expected.size()) - 1.0;
  // 99.9% quantile via the Wilson-Hilferty approximation.
  const double z = 3.090;
  const double crit = df * std::pow(1.0 - 2.0 / (9.0 * df) + z * std::sqrt(2.0 / (9.0 * df)), 3);
  CHECK(chi2 < crit);
}

TEST_CASE("POMDP files round-trip bit-identically") {
  std::vector<Pomdp> models{make_combination_lock(2, 2), make_combination_lock(3, 3),
                            make_hadamard_instance(2).pomdp, make_hadamard_instance(3).pomdp,
                            block_mdp()};
  for (const auto& e : testing::make_corpus(6)) models.push_back(e.pomdp);
  for (const auto& p : models) {
    const std::string text = serialize_pomdp(p);
    const Pomdp back = parse_pomdp(text);
    CHECK(back == p);
    CHECK(serialize_pomdp(back) == text);
  }
}

TEST_CASE("decimal strings parse exactly") {
  for (double v : {0.1, 1.0 / 3.0, 0.0, 1.0, 5e-324, 0.75}) {
    CHECK(parse_decimal(format_decimal(v)) == v);
  }
  CHECK_THROWS_AS(parse_decimal("0.1x"), IoError);
}

TEST_CASE("POMDP parser rejects malformed files") {
  const std::string good = serialize_pomdp(make_combination_lock(2, 2));
  CHECK_THROWS_AS(parse_pomdp("{"), IoError);
  auto doc = nlohmann::ordered_json::parse(good);
  doc["extra"] = 1;
  CHECK_THROWS_AS(parse_pomdp(doc.dump()), IoError);
  doc = nlohmann::ordered_json::parse(good);
  doc["init"][0] = "0.5";
  CHECK_THROWS_AS(parse_pomdp(doc.dump()), IoError);
  CHECK_THROWS_AS(load_pomdp("/nonexistent/file.json"), IoError);
}
