#pragma once

#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "mstep/core/rng.hpp"
#include "mstep/core/suffix.hpp"

namespace mstep {

// Observable prefix at step h: o_1..o_h and a_1..a_{h-1}.
struct HistoryView {
  int step = 0;
  std::span<const int> observations;
  std::span<const int> actions;

  std::string to_string() const;
};

class Policy {
 public:
  virtual ~Policy() = default;

  virtual int action_count() const = 0;
  // Writes pi_h(. | history) into out (length A). Throws PolicyUndefined.
  virtual void distribution(const HistoryView& history, std::span<double> out) const = 0;

  int sample(const HistoryView& history, Rng& rng) const;
};

using PolicyPtr = std::shared_ptr<const Policy>;

class UniformPolicy final : public Policy {
 public:
  explicit UniformPolicy(int action_count) : action_count_(action_count) {}
  int action_count() const override { return action_count_; }
  void distribution(const HistoryView& history, std::span<double> out) const override;

 private:
  int action_count_;
};

// m-step policy: pi_h(. | z_h) stored densely over the suffix space. NaN marks undefined rows.
class SuffixPolicy final : public Policy {
 public:
  explicit SuffixPolicy(SuffixSpace space);

  static SuffixPolicy uniform(SuffixSpace space);
  static SuffixPolicy constant(SuffixSpace space, int action);
  // actions[h-1][code] is a deterministic choice, -1 leaves the suffix undefined.
  static SuffixPolicy deterministic(SuffixSpace space, const std::vector<std::vector<int>>& actions);
  static SuffixPolicy random_deterministic(SuffixSpace space, Rng& rng);

  const SuffixSpace& space() const { return space_; }
  int action_count() const override { return space_.action_count(); }
  void distribution(const HistoryView& history, std::span<double> out) const override;

  void set(int h, SuffixCode z, std::span<const double> probs);
  void set_action(int h, SuffixCode z, int action);
  bool defined(int h, SuffixCode z) const;
  std::span<const double> row(int h, SuffixCode z) const;
  bool is_deterministic() const;

 private:
  SuffixSpace space_;
  std::vector<std::vector<double>> tables_;
};

// Tabulated full-history policy; keys are full-history codes.
class HistoryPolicy final : public Policy {
 public:
  HistoryPolicy(int horizon, int observation_count, int action_count);

  int action_count() const override { return histories_.action_count(); }
  void distribution(const HistoryView& history, std::span<double> out) const override;

  void set(const HistoryView& history, std::span<const double> probs);
  std::size_t size() const;

 private:
  SuffixSpace histories_;
  std::vector<std::unordered_map<SuffixCode, std::vector<double>>> tables_;
};

// pi1 o_t pi2: prefix for steps h < t, suffix from step t on.
class ComposedPolicy final : public Policy {
 public:
  ComposedPolicy(PolicyPtr prefix, PolicyPtr suffix, int switch_step);

  int action_count() const override { return suffix_->action_count(); }
  void distribution(const HistoryView& history, std::span<double> out) const override;
  int switch_step() const { return switch_step_; }

 private:
  PolicyPtr prefix_;
  PolicyPtr suffix_;
  int switch_step_;
};

std::shared_ptr<ComposedPolicy> compose(PolicyPtr prefix, PolicyPtr suffix, int switch_step);

// Trajectory-level mixture: a component is drawn once per episode. The per-step law is the
// exact conditional, i.e. components are reweighted by the likelihood of past actions.
class MixturePolicy final : public Policy {
 public:
  MixturePolicy(std::vector<PolicyPtr> components, std::vector<double> weights);
  static MixturePolicy uniform(std::vector<PolicyPtr> components);

  int action_count() const override { return components_.front()->action_count(); }
  void distribution(const HistoryView& history, std::span<double> out) const override;

  const std::vector<PolicyPtr>& components() const { return components_; }
  const std::vector<double>& weights() const { return weights_; }

 private:
  std::vector<PolicyPtr> components_;
  std::vector<double> weights_;
};

}  // namespace mstep
