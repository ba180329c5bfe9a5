#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mstep/core/simulate.hpp"
#include "mstep/oracle/oracle.hpp"
#include "mstep/oracle/qfunction.hpp"

namespace mstep {

struct OliveConfig {
  double eps_act = 0.125;
  double eps_elim = 0.125;
  int n_est = 400;       // episodes per estimate
  bool exact = false;    // oracle values instead of Monte-Carlo estimates
  int max_rounds = 0;    // 0: |F| + 1
  std::uint64_t seed = 0;

  void validate() const;
};

struct OliveRound {
  int round = 0;
  int selected = 0;
  double estimated_value = 0.0;
  int violating_step = 0;              // 0 when the selected function passed the check
  double violation = 0.0;
  std::vector<int> eliminated;
  std::size_t survivors = 0;           // after this round
  std::uint64_t episodes_before = 0;   // consumed before this round's selection
  std::uint64_t episodes_after = 0;
  double exact_gap = 0.0;              // NaN without an oracle
};

struct OliveResult {
  int selected = 0;
  bool terminated = false;  // a function passed the activation check
  bool exhausted = false;   // survivors ran out; `selected` is the best-estimated one
  std::uint64_t episodes = 0;
  int rounds = 0;
  std::vector<double> initial_values;
  std::vector<OliveRound> history;
};

// Average-Bellman-error elimination. Monte-Carlo mode reads only the sampler; exact mode and the
// gap diagnostics use the oracle (required in exact mode). When the selected function survives
// its own elimination test it is removed anyway, so every round removes at least one function.
OliveResult run_olive(const EpisodeSampler& sampler, const std::vector<QFunction>& F,
                      const OliveConfig& config, const ModelOracle* oracle = nullptr);

// Episodes consumed before the first selection after which every selection (including the
// returned one) has exact gap <= tol; total episodes + 1 if never.
std::uint64_t olive_episodes_to_optimal(const OliveResult& result, double tol);

}  // namespace mstep
