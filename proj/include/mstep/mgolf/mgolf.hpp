#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "mstep/core/policy.hpp"
#include "mstep/core/rng.hpp"
#include "mstep/core/simulate.hpp"
#include "mstep/oracle/oracle.hpp"
#include "mstep/oracle/qfunction.hpp"

namespace mstep {

struct MGolfConfig {
  int epochs = 200;               // K
  std::optional<int> k_est;       // defaults to the formula below
  std::optional<double> beta;     // explicit threshold overrides the formula
  double beta_c = 1.0;            // c in the K_est and beta formulas
  double epsilon = 0.1;
  double delta = 0.1;
  int state_count = 1;            // S in rho
  bool doubling = false;          // retry with 2 beta when the confidence set empties
  std::uint64_t seed = 0;

  void validate() const;
};

// rho = eps^2 / (H^2 A^m S ln(S / eps)); the log factor is floored at 1.
double mgolf_rho(int H, int A, int m, int S, double epsilon);
// K_est = ceil(c ln(|F| / delta) / eps^2), at least 1.
int mgolf_k_est(double c, std::size_t class_size, double epsilon, double delta);
// beta = c (ln(|G| K H / delta) + K rho)
double mgolf_beta(double c, std::size_t g_size, int K, int H, double rho, double delta);

// One tuple (z_h, a_h, r_{h+1}(o_{h+1}), o_{h+1}); at h = H there is no next observation
// (next_observation = -1, reward 0).
struct StepTuple {
  SuffixCode suffix = 0;
  int action = 0;
  double reward = 0.0;
  int next_observation = -1;
};

// D_1..D_H stored as multiplicities of distinct tuples.
class StepDataset {
 public:
  explicit StepDataset(int horizon) : layers_(horizon), sizes_(horizon, 0) {}

  void add(int h, const StepTuple& t);
  std::size_t size(int h) const { return sizes_.at(h - 1); }
  int horizon() const { return static_cast<int>(layers_.size()); }

  struct Entry {
    std::uint64_t count = 0;
    double reward = 0.0;
  };
  using Key = std::tuple<SuffixCode, int, int>;  // (z, a, o')
  const std::map<Key, Entry>& layer(int h) const { return layers_.at(h - 1); }

 private:
  std::vector<std::map<Key, Entry>> layers_;
  std::vector<std::size_t> sizes_;
};

// Sum over D_h of [xi_h(z, a) - r - max_a' zeta_{h+1}(z', a')]^2 with z' = shift(z, a, o').
double squared_loss(const StepDataset& data, int h, const QFunction& xi, const QFunction& zeta);

// f_hat_1 = mean of max_a f_1(o_1, a) over the given first observations.
std::vector<double> estimate_initial_values(const std::vector<QFunction>& F,
                                            const std::vector<int>& first_observations);
std::vector<double> estimate_initial_values(const EpisodeSampler& sampler,
                                            const std::vector<QFunction>& F, int k_est, Rng& rng);

// H episodes, one per target step h: pi^k for steps before m(h), uniform from m(h) on.
void collect_epoch(const EpisodeSampler& sampler, const Policy& policy, StepDataset& data,
                   std::uint64_t epoch_seed);

struct ConfidenceSet {
  int epoch = 0;
  std::vector<int> survivors;
  double beta = 0.0;
};

ConfidenceSet update_confidence_set(const std::vector<QFunction>& F,
                                    const std::vector<QFunction>& G, const StepDataset& data,
                                    double beta);

struct MGolfEpoch {
  int epoch = 0;
  int selected = 0;
  double optimistic_value = 0.0;
  std::size_t confset_size = 0;    // |B^k| after the update
  std::uint64_t episodes_used = 0; // cumulative, K_est included
  double exact_gap = 0.0;          // NaN without an oracle
  bool qstar_survived = false;     // only meaningful when the class records Q*
  double beta = 0.0;
};

struct MGolfResult {
  int k_est = 0;
  double beta = 0.0;
  std::vector<double> initial_values;
  std::vector<MGolfEpoch> epochs;
  std::vector<int> selected;
  std::uint64_t episodes = 0;
  bool aborted = false;
  std::string message;
  double output_value = 0.0;  // exact value of the output mixture, NaN without an oracle
};

// Algorithm 1. The learner reads only the sampler and the class tables; the optional oracle is
// used for diagnostics (exact gaps) after each selection.
MGolfResult run_mgolf(const EpisodeSampler& sampler, const FunctionClassPair& classes,
                      const MGolfConfig& config, const ModelOracle* oracle = nullptr);

// Uniform mixture over the greedy policies selected in each epoch.
MixturePolicy mgolf_output_policy(const MGolfResult& result, const FunctionClassPair& classes);

}  // namespace mstep
