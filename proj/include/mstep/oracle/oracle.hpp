#pragma once

#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "mstep/core/policy.hpp"
#include "mstep/core/pomdp.hpp"
#include "mstep/oracle/qfunction.hpp"

namespace mstep {

class MomentMatchingPolicy;

// Exact law of the block x_h = (s_{m(h):h}, z_h) under a policy, with its marginals.
struct SuffixDistribution {
  int step = 0;
  int start = 1;  // m(h)
  std::map<std::pair<std::vector<int>, SuffixCode>, double> blocks;
  std::map<SuffixCode, double> suffixes;
  std::vector<double> start_states;  // P(s_{m(h)} = s)

  double total() const;
};

struct BackupResult {
  std::vector<double> values;  // |Z_h| x A, unreachable rows are 0
  std::vector<char> reachable;  // per suffix code
};

// Non-owning shared pointer for policies whose lifetime the caller guarantees.
PolicyPtr borrow(const Policy& policy);

// Ground-truth computations on a decodable model. Reachable suffixes and the decoder are
// derived once on construction (a decoder stored in the model is checked against them).
class ModelOracle {
 public:
  explicit ModelOracle(Pomdp pomdp);

  const Pomdp& model() const { return pomdp_; }
  const Decoder& decoder() const { return decoder_; }
  const SuffixSpace& space() const { return space_; }
  int horizon() const { return pomdp_.horizon; }
  int memory() const { return pomdp_.memory; }
  int window_start(int h) const;

  const std::vector<SuffixCode>& reachable_suffixes(int h) const { return reachable_.at(h - 1); }
  bool reachable(int h, SuffixCode z) const;
  int decode(int h, SuffixCode z) const;

  SuffixDistribution exact_distribution(const Policy& policy, int h) const;
  std::map<SuffixCode, double> suffix_distribution(const Policy& policy, int h) const;
  double policy_value(const Policy& policy) const;

  // T_h f_{h+1} on Z_h; for h = H the backup is 0.
  BackupResult exact_bellman_backup(const QFunction& f, int h) const;
  // The function whose step-h table is T_h f_{h+1} for every h.
  QFunction backup(const QFunction& f) const;
  const QFunction& qstar() const { return qstar_; }
  double optimal_value() const { return optimal_value_; }
  // E[r_1(o_1)]: the reward that no Q-function accounts for.
  double initial_reward() const { return initial_reward_; }
  // E[max_a f_1(o_1, a)] under the initial observation law.
  double initial_value(const QFunction& f) const;

  // E_{z_h ~ pi}[(f_h - T_h f_{h+1})(z_h, pi_f(z_h))]
  double bellman_error(const Policy& rollin, const QFunction& f, int h) const;
  // Same residual with the roll-in pi o_{m(h)} nu^{pi_f, h}.
  double surrogate_bellman_error(const Policy& rollin, const QFunction& f, int h) const;
  double surrogate_bellman_error(const Policy& rollin, const QFunction& f, int h,
                                 const MomentMatchingPolicy& nu) const;
  // E[(f_h - T_h f_{h+1})(z_h, a_h)^2] when a_{m(h):h} are uniform after roll-in pi.
  double uniform_rollout_squared_error(const Policy& rollin, const QFunction& f, int h) const;

  // Largest |f_h - g_h| over reachable suffixes of step h.
  double reachable_distance(const QFunction& f, const QFunction& g, int h) const;
  bool realizable(const std::vector<QFunction>& F, double tol = 1e-10) const;
  bool complete(const std::vector<QFunction>& F, const std::vector<QFunction>& G,
                double tol = 1e-10) const;
  // F plus the distinct backups of its members, with verified flags.
  FunctionClassPair make_class_pair(std::vector<QFunction> F, std::vector<std::string> names) const;

 private:
  std::vector<double> residual_row(const QFunction& f, int h, SuffixCode z,
                                   const BackupResult& backup) const;

  Pomdp pomdp_;
  SuffixSpace space_;
  Decoder decoder_;
  std::vector<std::vector<SuffixCode>> reachable_;
  QFunction qstar_;
  double optimal_value_ = 0.0;
  double initial_reward_ = 0.0;
};

struct RankResult {
  std::vector<double> singular_values;
  int numerical_rank = 0;
};

// Singular values and the count of sigma_k > tol * sigma_1.
RankResult numerical_rank(const Eigen::MatrixXd& matrix, double tol = 1e-8);

// Matrix [E_h(policies[i], functions[j])] (or its surrogate counterpart).
Eigen::MatrixXd bellman_error_matrix(const ModelOracle& oracle,
                                     const std::vector<PolicyPtr>& policies,
                                     const std::vector<QFunction>& functions, int h,
                                     bool surrogate);
RankResult bellman_rank(const ModelOracle& oracle, const std::vector<PolicyPtr>& policies,
                        const std::vector<QFunction>& functions, int h, double tol = 1e-8,
                        bool surrogate = false);

}  // namespace mstep
