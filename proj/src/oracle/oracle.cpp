#include "mstep/oracle/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mstep/core/decodability.hpp"
#include "mstep/core/errors.hpp"
#include "mstep/oracle/moment_matching.hpp"
#include "mstep/oracle/trajectory_tree.hpp"

namespace mstep {

double SuffixDistribution::total() const {
  double t = 0.0;
  for (const auto& [z, p] : suffixes) t += p;
  return t;
}

PolicyPtr borrow(const Policy& policy) { return PolicyPtr(&policy, [](const Policy*) {}); }

ModelOracle::ModelOracle(Pomdp pomdp) : pomdp_(std::move(pomdp)) {
  pomdp_.validate();
  space_ = pomdp_.suffix_space();
  auto verdict = verify_decodability(pomdp_, pomdp_.memory);
  if (!verdict.decodable) {
    throw ModelError("model is not " + std::to_string(pomdp_.memory) +
                     "-step decodable: ambiguous suffix " + verdict.witness->to_string());
  }
  decoder_ = std::move(*verdict.decoder);
  if (pomdp_.decoder) {
    for (int h = 1; h <= pomdp_.horizon; ++h)
      for (const auto& [z, s] : decoder_.states[h - 1]) {
        auto given = pomdp_.decoder->lookup(h, z);
        if (!given || *given != s) {
          throw ModelError("stored decoder disagrees with the model at " +
                           space_.decode(h, z).to_string());
        }
      }
  }
  for (int h = 1; h <= pomdp_.horizon; ++h) {
    std::vector<SuffixCode> layer;
    for (const auto& [z, s] : decoder_.states[h - 1]) layer.push_back(z);
    reachable_.push_back(std::move(layer));
  }

  qstar_ = QFunction::zeros(space_);
  for (int h = pomdp_.horizon; h >= 1; --h) {
    qstar_.layer(h) = exact_bellman_backup(qstar_, h).values;
  }
  for (int s = 0; s < pomdp_.state_count; ++s) {
    auto em = pomdp_.emission(1, s);
    for (int o = 0; o < pomdp_.observation_count; ++o)
      initial_reward_ += pomdp_.initial[s] * em[o] * pomdp_.reward(1, o);
  }
  optimal_value_ = initial_reward_ + initial_value(qstar_);
}

int ModelOracle::window_start(int h) const { return mstep::window_start(h, pomdp_.memory); }

bool ModelOracle::reachable(int h, SuffixCode z) const {
  return decoder_.lookup(h, z).has_value();
}

int ModelOracle::decode(int h, SuffixCode z) const {
  auto s = decoder_.lookup(h, z);
  if (!s) throw ModelError("unreachable suffix " + space_.decode(h, z).to_string());
  return *s;
}

SuffixDistribution ModelOracle::exact_distribution(const Policy& policy, int h) const {
  SuffixDistribution d;
  d.step = h;
  d.start = window_start(h);
  d.start_states.assign(pomdp_.state_count, 0.0);
  TrajectoryTree tree(pomdp_, policy, d.start);
  tree.advance_to(h);
  for (const auto& node : tree.nodes()) {
    const SuffixCode z = space_.encode_history(h, node.observations, node.actions);
    d.blocks[{node.states, z}] += node.probability;
    d.suffixes[z] += node.probability;
    d.start_states[node.states.front()] += node.probability;
  }
  return d;
}

std::map<SuffixCode, double> ModelOracle::suffix_distribution(const Policy& policy, int h) const {
  TrajectoryTree tree(pomdp_, policy);
  tree.advance_to(h);
  std::map<SuffixCode, double> out;
  for (const auto& node : tree.nodes()) {
    out[space_.encode_history(h, node.observations, node.actions)] += node.probability;
  }
  return out;
}

double ModelOracle::policy_value(const Policy& policy) const {
  if (const auto* mix = dynamic_cast<const MixturePolicy*>(&policy)) {
    double v = 0.0;
    for (std::size_t k = 0; k < mix->components().size(); ++k) {
      v += mix->weights()[k] * policy_value(*mix->components()[k]);
    }
    return v;
  }
  TrajectoryTree tree(pomdp_, policy);
  double v = 0.0;
  for (int h = 1;; ++h) {
    for (const auto& node : tree.nodes()) {
      v += node.probability * pomdp_.reward(h, node.observations.back());
    }
    if (h == pomdp_.horizon) break;
    tree.advance();
  }
  return v;
}

BackupResult ModelOracle::exact_bellman_backup(const QFunction& f, int h) const {
  if (h < 1 || h > pomdp_.horizon) throw ModelError("backup step out of range");
  if (!(f.space() == space_)) throw ModelError("Q-function shape does not match the model");
  const int A = pomdp_.action_count, S = pomdp_.state_count, O = pomdp_.observation_count;
  BackupResult out;
  out.values.assign(space_.size(h) * A, 0.0);
  out.reachable.assign(space_.size(h), 0);
  for (SuffixCode z : reachable_suffixes(h)) {
    out.reachable[z] = 1;
    if (h == pomdp_.horizon) continue;
    const int s = decode(h, z);
    for (int a = 0; a < A; ++a) {
      auto tr = pomdp_.transition(h, s, a);
      double v = 0.0;
      for (int s2 = 0; s2 < S; ++s2) {
        if (tr[s2] <= 0.0) continue;
        auto em = pomdp_.emission(h + 1, s2);
        for (int o = 0; o < O; ++o) {
          if (em[o] <= 0.0) continue;
          const SuffixCode next = space_.shift(h, z, a, o);
          v += tr[s2] * em[o] * (pomdp_.reward(h + 1, o) + f.max_value(h + 1, next));
        }
      }
      out.values[z * A + a] = v;
    }
  }
  return out;
}

QFunction ModelOracle::backup(const QFunction& f) const {
  QFunction g(space_);
  for (int h = 1; h <= pomdp_.horizon; ++h) g.layer(h) = exact_bellman_backup(f, h).values;
  return g;
}

double ModelOracle::initial_value(const QFunction& f) const {
  double v = 0.0;
  for (int s = 0; s < pomdp_.state_count; ++s) {
    auto em = pomdp_.emission(1, s);
    for (int o = 0; o < pomdp_.observation_count; ++o) {
      const double p = pomdp_.initial[s] * em[o];
      if (p > 0.0) v += p * f.max_value(1, static_cast<SuffixCode>(o));
    }
  }
  return v;
}

std::vector<double> ModelOracle::residual_row(const QFunction& f, int h, SuffixCode z,
                                              const BackupResult& backup) const {
  const int A = pomdp_.action_count;
  std::vector<double> r(A);
  for (int a = 0; a < A; ++a) r[a] = f.value(h, z, a) - backup.values[z * A + a];
  return r;
}

double ModelOracle::bellman_error(const Policy& rollin, const QFunction& f, int h) const {
  const auto backup = exact_bellman_backup(f, h);
  double e = 0.0;
  for (const auto& [z, p] : suffix_distribution(rollin, h)) {
    e += p * residual_row(f, h, z, backup)[f.greedy_action(h, z)];
  }
  return e;
}

double ModelOracle::surrogate_bellman_error(const Policy& rollin, const QFunction& f,
                                            int h) const {
  const GreedyPolicy pi_f(f);
  const MomentMatchingPolicy nu(*this, pi_f, h);
  return surrogate_bellman_error(rollin, f, h, nu);
}

double ModelOracle::surrogate_bellman_error(const Policy& rollin, const QFunction& f, int h,
                                            const MomentMatchingPolicy& nu) const {
  if (nu.target_step() != h) throw ModelError("moment matching policy built for another step");
  const auto mixed = compose(borrow(rollin), borrow(nu), window_start(h));
  return bellman_error(*mixed, f, h);
}

double ModelOracle::uniform_rollout_squared_error(const Policy& rollin, const QFunction& f,
                                                  int h) const {
  const auto uniform = std::make_shared<UniformPolicy>(pomdp_.action_count);
  const auto mixed = compose(borrow(rollin), uniform, window_start(h));
  const auto backup = exact_bellman_backup(f, h);
  double e = 0.0;
  for (const auto& [z, p] : suffix_distribution(*mixed, h)) {
    for (double r : residual_row(f, h, z, backup)) e += p * r * r / pomdp_.action_count;
  }
  return e;
}

double ModelOracle::reachable_distance(const QFunction& f, const QFunction& g, int h) const {
  return sup_distance(f, g, h, reachable_suffixes(h));
}

bool ModelOracle::realizable(const std::vector<QFunction>& F, double tol) const {
  return std::any_of(F.begin(), F.end(), [&](const QFunction& f) {
    for (int h = 1; h <= pomdp_.horizon; ++h)
      if (!(reachable_distance(f, qstar_, h) <= tol)) return false;
    return true;
  });
}

bool ModelOracle::complete(const std::vector<QFunction>& F, const std::vector<QFunction>& G,
                           double tol) const {
  for (const auto& f : F) {
    const QFunction tf = backup(f);
    for (int h = 1; h <= pomdp_.horizon; ++h) {
      const bool found = std::any_of(G.begin(), G.end(), [&](const QFunction& g) {
        return reachable_distance(tf, g, h) <= tol;
      });
      if (!found) return false;
    }
  }
  return true;
}

FunctionClassPair ModelOracle::make_class_pair(std::vector<QFunction> F,
                                               std::vector<std::string> names) const {
  if (F.empty()) throw ModelError("function class is empty");
  if (names.size() != F.size()) {
    names.clear();
    for (std::size_t i = 0; i < F.size(); ++i) names.push_back("f" + std::to_string(i));
  }
  FunctionClassPair pair;
  pair.F = F;
  pair.G = F;
  pair.names = names;
  for (const auto& f : F) {
    QFunction tf = backup(f);
    const bool seen = std::any_of(pair.G.begin(), pair.G.end(), [&](const QFunction& g) {
      for (int h = 1; h <= pomdp_.horizon; ++h)
        if (!(reachable_distance(tf, g, h) <= 1e-12)) return false;
      return true;
    });
    if (!seen) pair.G.push_back(std::move(tf));
  }
  for (std::size_t i = 0; i < F.size(); ++i) {
    bool match = true;
    for (int h = 1; h <= pomdp_.horizon && match; ++h)
      match = reachable_distance(F[i], qstar_, h) <= 1e-10;
    if (match) {
      pair.qstar_index = static_cast<int>(i);
      break;
    }
  }
  pair.realizable = pair.qstar_index.has_value();
  pair.complete = complete(pair.F, pair.G);
  return pair;
}

RankResult numerical_rank(const Eigen::MatrixXd& matrix, double tol) {
  if (matrix.rows() == 0 || matrix.cols() == 0) throw ModelError("rank of an empty matrix");
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(matrix);
  const Eigen::VectorXd sv = svd.singularValues();
  RankResult r;
  r.singular_values.assign(sv.data(), sv.data() + sv.size());
  const double top = sv.size() > 0 ? sv(0) : 0.0;
  if (top > 0.0) {
    for (double s : r.singular_values)
      if (s > tol * top) ++r.numerical_rank;
  }
  return r;
}

Eigen::MatrixXd bellman_error_matrix(const ModelOracle& oracle,
                                     const std::vector<PolicyPtr>& policies,
                                     const std::vector<QFunction>& functions, int h,
                                     bool surrogate) {
  if (policies.empty() || functions.empty()) throw ModelError("empty Bellman rank ensemble");
  Eigen::MatrixXd E(policies.size(), functions.size());
  for (std::size_t j = 0; j < functions.size(); ++j) {
    std::unique_ptr<MomentMatchingPolicy> nu;
    std::unique_ptr<GreedyPolicy> pi_f;
    if (surrogate) {
      pi_f = std::make_unique<GreedyPolicy>(functions[j]);
      nu = std::make_unique<MomentMatchingPolicy>(oracle, *pi_f, h);
    }
    for (std::size_t i = 0; i < policies.size(); ++i) {
      E(i, j) = surrogate ? oracle.surrogate_bellman_error(*policies[i], functions[j], h, *nu)
                          : oracle.bellman_error(*policies[i], functions[j], h);
    }
  }
  return E;
}

RankResult bellman_rank(const ModelOracle& oracle, const std::vector<PolicyPtr>& policies,
                        const std::vector<QFunction>& functions, int h, double tol,
                        bool surrogate) {
  return numerical_rank(bellman_error_matrix(oracle, policies, functions, h, surrogate), tol);
}

}  // namespace mstep
