#include <doctest.h>

#include <cmath>
#include <limits>
#include <map>

#include "mstep/core/errors.hpp"
#include "mstep/core/simulate.hpp"
#include "mstep/environments/environments.hpp"
#include "mstep/mgolf/mgolf.hpp"
#include "mstep/oracle/oracle.hpp"

using namespace mstep;

namespace {

FunctionClassPair singleton(const ModelOracle& oracle) {
  return oracle.make_class_pair({oracle.qstar()}, {"qstar"});
}

}  // namespace

TEST_CASE("formula helpers") {
  CHECK(mgolf_k_est(1.0, 8, 0.1, 0.1) == static_cast<int>(std::ceil(std::log(80.0) / 0.01)));
  CHECK(mgolf_k_est(1e-9, 8, 0.1, 0.1) == 1);
  const double rho = mgolf_rho(3, 2, 2, 3, 0.1);
  CHECK(rho == doctest::Approx(0.01 / (9.0 * 4.0 * 3.0 * std::log(30.0))));
  CHECK(mgolf_rho(3, 2, 2, 1, 0.9) == doctest::Approx(0.81 / 36.0));
  CHECK(mgolf_beta(2.0, 10, 5, 3, 0.5, 0.1) == doctest::Approx(2.0 * (std::log(1500.0) + 2.5)));
}

TEST_CASE("config validation") {
  MGolfConfig c;
  CHECK_NOTHROW(c.validate());
  c.epochs = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = MGolfConfig{};
  c.beta = -1.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = MGolfConfig{};
  c.k_est = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("initial value estimates") {
  const auto inst = make_hadamard_instance(3);
  const SuffixSpace space = inst.pomdp.suffix_space();
  const EpisodeSampler sampler(inst.pomdp);
  SUBCASE("constant function is estimated exactly") {
    Rng rng(1);
    const auto v = estimate_initial_values(sampler, {QFunction::constant(space, 0.3)}, 17, rng);
    CHECK(v[0] == doctest::Approx(0.3).epsilon(1e-15));
  }
  SUBCASE("K_est = 1 reads the single drawn observation") {
    const auto v = estimate_initial_values(inst.f, std::vector<int>{5});
    for (std::size_t i = 0; i < inst.f.size(); ++i)
      CHECK(v[i] == inst.f[i].max_value(1, 5));
  }
  SUBCASE("f_i estimates approach 7/8") {
    Rng rng(2);
    const auto v = estimate_initial_values(sampler, inst.f, 10000, rng);
    for (double x : v) CHECK(std::abs(x - 0.875) <= 0.02);
  }
}

TEST_CASE("squared loss examples") {
  const Pomdp lock = make_combination_lock(2, 2);
  const SuffixSpace space = lock.suffix_space();
  StepDataset data(lock.horizon);
  const auto zero = QFunction::zeros(space);
  CHECK(squared_loss(data, 1, zero, zero) == 0.0);
  data.add(1, {0, 0, 1.0, 0});
  CHECK(squared_loss(data, 1, QFunction::constant(space, 1.0), zero) == 0.0);
  CHECK(squared_loss(data, 1, zero, zero) == 1.0);
  data.add(1, {0, 0, 1.0, 0});
  CHECK(squared_loss(data, 1, zero, zero) == 2.0);
  CHECK(data.size(1) == 2);
  CHECK(data.layer(1).size() == 1);
  CHECK_THROWS_AS(squared_loss(data, 1, QFunction(space), zero), Error);
}

TEST_CASE("confidence set examples") {
  const auto inst = make_hadamard_instance(3);
  const auto& cls = inst.classes;
  StepDataset empty(inst.pomdp.horizon);
  CHECK(update_confidence_set(cls.F, cls.G, empty, 0.0).survivors.size() == cls.F.size());

  const SuffixSpace space = inst.pomdp.suffix_space();
  StepDataset data(inst.pomdp.horizon);
  const int o = 3;
  const SuffixCode z2 = space.shift(1, static_cast<SuffixCode>(o), 0, inst.bottom());
  data.add(2, {z2, 0, 0.5, inst.terminal_low()});
  CHECK(update_confidence_set(cls.F, cls.G, data, std::numeric_limits<double>::infinity())
            .survivors.size() == cls.F.size());
  const auto set = update_confidence_set(cls.F, cls.G, data, 0.1);
  CHECK(std::binary_search(set.survivors.begin(), set.survivors.end(), 0));
  for (std::size_t i = 0; i < inst.sets.size(); ++i) {
    if (std::binary_search(inst.sets[i].begin(), inst.sets[i].end(), o)) {
      CHECK_FALSE(std::binary_search(set.survivors.begin(), set.survivors.end(),
                                     static_cast<int>(i + 1)));
    }
  }
}

TEST_CASE("collect_epoch: one tuple per step, uniform actions when m >= H") {
  const auto inst = make_hadamard_instance(2);
  Pomdp p = inst.pomdp;
  p.memory = p.horizon;
  p.decoder.reset();
  const EpisodeSampler sampler(p);
  const SuffixPolicy zero = SuffixPolicy::constant(p.suffix_space(), 0);
  StepDataset data(p.horizon);
  const int epochs = 4000;
  for (int k = 0; k < epochs; ++k) collect_epoch(sampler, zero, data, mix_seed(7, k));
  CHECK(sampler.episodes() == static_cast<std::uint64_t>(epochs * p.horizon));
  for (int h = 1; h <= p.horizon; ++h) {
    CHECK(data.size(h) == static_cast<std::size_t>(epochs));
    double ones = 0.0;
    for (const auto& [key, e] : data.layer(h)) {
      if (std::get<1>(key) == 1) ones += static_cast<double>(e.count);
      if (h < p.horizon) CHECK(std::get<2>(key) >= 0);
      else CHECK(std::get<2>(key) == -1);
    }
    CHECK(std::abs(ones / epochs - 0.5) < 5.0 * std::sqrt(0.25 / epochs));
  }
}

TEST_CASE("collect_epoch: h = 1, m = 1 takes a uniform first action") {
  Pomdp p = make_random_decodable(3, 3, 2, 3, 1, 4);
  const EpisodeSampler sampler(p);
  const SuffixPolicy zero = SuffixPolicy::constant(p.suffix_space(), 0);
  StepDataset data(p.horizon);
  for (int k = 0; k < 2000; ++k) collect_epoch(sampler, zero, data, mix_seed(1, k));
  std::uint64_t ones = 0;
  for (const auto& [key, e] : data.layer(1))
    if (std::get<1>(key) == 1) ones += e.count;
  CHECK(ones > 850);
  CHECK(ones < 1150);
}

TEST_CASE("collect_epoch: recorded suffix law matches the exact roll-in law (chi-square)") {
  const Pomdp p = make_random_decodable(2, 2, 2, 3, 2, 55);
  const ModelOracle oracle(p);
  const EpisodeSampler sampler(p);
  Rng prng(3);
  const SuffixPolicy pi = SuffixPolicy::random_deterministic(p.suffix_space(), prng);
  const auto uniform = std::make_shared<UniformPolicy>(2);
  StepDataset data(p.horizon);
  const int epochs = 100000;
  for (int k = 0; k < epochs; ++k) collect_epoch(sampler, pi, data, mix_seed(11, k));
  for (int h = 1; h <= p.horizon; ++h) {
    const auto rollin = compose(borrow(pi), uniform, window_start(h, p.memory));
    const auto exact = oracle.suffix_distribution(*rollin, h);
    std::map<SuffixCode, double> counts;
    for (const auto& [key, e] : data.layer(h)) counts[std::get<0>(key)] += e.count;
    double chi2 = 0.0;
    for (const auto& [z, q] : exact) {
      const double expected = q * epochs;
      chi2 += (counts[z] - expected) * (counts[z] - expected) / expected;
    }
    for (const auto& [z, c] : counts) CHECK(exact.count(z) == 1);
    const double df = std::max(1.0, static_cast<double>(exact.size()) - 1.0);
    const double crit = df * std::pow(1.0 - 2.0 / (9.0 * df) + 3.09 * std::sqrt(2.0 / (9.0 * df)), 3);
    CHECK(chi2 < crit);
  }
}

TEST_CASE("run_mgolf with F = {Q*} always plays the optimal policy") {
  const Pomdp lock = make_combination_lock(2, 2);
  const ModelOracle oracle(lock);
  const EpisodeSampler sampler(lock);
  MGolfConfig cfg;
  cfg.epochs = 20;
  cfg.seed = 3;
  const auto result = run_mgolf(sampler, singleton(oracle), cfg, &oracle);
  REQUIRE(result.epochs.size() == 20);
  for (const auto& e : result.epochs) {
    CHECK(e.selected == 0);
    CHECK(e.exact_gap == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(e.qstar_survived);
  }
  CHECK(result.output_value == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(oracle.policy_value(mgolf_output_policy(result, singleton(oracle))) ==
        doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("run_mgolf bookkeeping, optimism and determinism on the lock") {
  const Pomdp lock = make_combination_lock(2, 2);
  const ModelOracle oracle(lock);
  const auto cls = make_decoy_class(oracle, 3, 5);
  const EpisodeSampler sampler(lock);
  MGolfConfig cfg;
  cfg.epochs = 60;
  cfg.seed = 9;
  cfg.state_count = lock.state_count;
  const auto a = run_mgolf(sampler, cls, cfg, &oracle);
  const auto b = run_mgolf(sampler, cls, cfg, &oracle);
  REQUIRE(a.epochs.size() == b.epochs.size());
  for (std::size_t k = 0; k < a.epochs.size(); ++k) {
    CHECK(a.epochs[k].selected == b.epochs[k].selected);
    CHECK(a.epochs[k].optimistic_value == b.epochs[k].optimistic_value);
    CHECK(a.epochs[k].episodes_used ==
          static_cast<std::uint64_t>(a.k_est + (k + 1) * lock.horizon));
  }
  const int q = *cls.qstar_index;
  for (std::size_t k = 0; k < a.epochs.size(); ++k) {
    const bool q_alive = k == 0 || a.epochs[k - 1].qstar_survived;
    if (q_alive) CHECK(a.epochs[k].optimistic_value >= a.initial_values[q]);
  }
  CHECK(a.episodes == static_cast<std::uint64_t>(a.k_est + 60 * lock.horizon));
}

TEST_CASE("run_mgolf ignores the decoder (learner isolation canary)") {
  Pomdp lock = make_combination_lock(2, 2);
  const ModelOracle oracle(lock);
  const auto cls = make_decoy_class(oracle, 3, 5);
  Pomdp poisoned = lock;
  for (auto& layer : poisoned.decoder->states)
    for (auto& [z, s] : layer) s = 1 - s;
  MGolfConfig cfg;
  cfg.epochs = 30;
  cfg.seed = 4;
  const auto clean = run_mgolf(EpisodeSampler(lock), cls, cfg);
  const auto dirty = run_mgolf(EpisodeSampler(poisoned), cls, cfg);
  CHECK(clean.selected == dirty.selected);
  CHECK(clean.initial_values == dirty.initial_values);
  CHECK(std::isnan(clean.output_value));
}

TEST_CASE("run_mgolf aborts on an empty confidence set and doubling recovers") {
  const auto inst = make_hadamard_instance(2);
  const ModelOracle oracle(inst.pomdp);
  FunctionClassPair cls;
  cls.F = inst.f;
  cls.G = inst.classes.G;
  const EpisodeSampler sampler(inst.pomdp);
  MGolfConfig cfg;
  cfg.epochs = 40;
  cfg.beta = 0.0;
  cfg.seed = 1;
  const auto aborted = run_mgolf(sampler, cls, cfg, &oracle);
  CHECK(aborted.aborted);
  CHECK_FALSE(aborted.message.empty());
  cfg.doubling = true;
  const auto doubled = run_mgolf(sampler, cls, cfg, &oracle);
  CHECK_FALSE(doubled.aborted);
  CHECK(doubled.epochs.back().beta > 0.0);
}
