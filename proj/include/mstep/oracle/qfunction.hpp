#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mstep/core/policy.hpp"
#include "mstep/core/suffix.hpp"

namespace mstep {

// Per-step suffix-action tables f_h(z, a); f_{H+1} is identically 0. NaN marks undefined cells.
class QFunction {
 public:
  QFunction() = default;
  explicit QFunction(SuffixSpace space);
  static QFunction zeros(SuffixSpace space);
  static QFunction constant(SuffixSpace space, double value);

  const SuffixSpace& space() const { return space_; }
  int horizon() const { return space_.horizon(); }
  int action_count() const { return space_.action_count(); }

  double value(int h, SuffixCode z, int a) const;
  double& at(int h, SuffixCode z, int a);
  std::span<const double> row(int h, SuffixCode z) const;
  std::vector<double>& layer(int h) { return tables_.at(h - 1); }
  const std::vector<double>& layer(int h) const { return tables_.at(h - 1); }

  // max_a f_h(z, a); 0 for h = H + 1. Throws if the row is undefined.
  double max_value(int h, SuffixCode z) const;
  // Lowest action among the maximizers.
  int greedy_action(int h, SuffixCode z) const;
  bool defined(int h, SuffixCode z) const;

  bool operator==(const QFunction&) const = default;

 private:
  SuffixSpace space_;
  std::vector<std::vector<double>> tables_;
};

// Sup-norm distance over the given cells of step h.
double sup_distance(const QFunction& f, const QFunction& g, int h,
                    std::span<const SuffixCode> suffixes);

// pi_f: greedy with lowest-index tie-breaking.
class GreedyPolicy final : public Policy {
 public:
  explicit GreedyPolicy(QFunction f) : f_(std::move(f)) {}

  int action_count() const override { return f_.action_count(); }
  void distribution(const HistoryView& history, std::span<double> out) const override;
  int action(const HistoryView& history) const;
  const QFunction& function() const { return f_; }

 private:
  QFunction f_;
};

struct FunctionClassPair {
  std::vector<QFunction> F;
  std::vector<QFunction> G;  // F is a prefix of G
  std::vector<std::string> names;
  bool realizable = false;
  bool complete = false;
  std::optional<int> qstar_index;
};

}  // namespace mstep
