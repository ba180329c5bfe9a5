#include "mstep/oracle/qfunction.hpp"

#include <cmath>
#include <limits>

#include "mstep/core/errors.hpp"

namespace mstep {

QFunction::QFunction(SuffixSpace space) : space_(std::move(space)) {
  for (int h = 1; h <= space_.horizon(); ++h) {
    tables_.emplace_back(space_.size(h) * space_.action_count(),
                         std::numeric_limits<double>::quiet_NaN());
  }
}

QFunction QFunction::zeros(SuffixSpace space) { return constant(std::move(space), 0.0); }

QFunction QFunction::constant(SuffixSpace space, double value) {
  QFunction f(std::move(space));
  for (auto& t : f.tables_) std::fill(t.begin(), t.end(), value);
  return f;
}

double QFunction::value(int h, SuffixCode z, int a) const {
  if (h == horizon() + 1) return 0.0;
  return row(h, z)[a];
}

double& QFunction::at(int h, SuffixCode z, int a) {
  auto& t = tables_.at(h - 1);
  const std::size_t i = z * action_count() + a;
  if (i >= t.size()) throw ModelError("Q-function cell out of range");
  return t[i];
}

std::span<const double> QFunction::row(int h, SuffixCode z) const {
  const auto& t = tables_.at(h - 1);
  const std::size_t A = action_count();
  if ((z + 1) * A > t.size()) throw ModelError("Q-function suffix out of range");
  return {t.data() + z * A, A};
}

bool QFunction::defined(int h, SuffixCode z) const {
  for (double v : row(h, z))
    if (std::isnan(v)) return false;
  return true;
}

double QFunction::max_value(int h, SuffixCode z) const {
  if (h == horizon() + 1) return 0.0;
  auto r = row(h, z);
  double best = r[0];
  for (double v : r) {
    if (std::isnan(v)) {
      throw Error("Q-function undefined at " + space_.decode(h, z).to_string());
    }
    best = std::max(best, v);
  }
  return best;
}

int QFunction::greedy_action(int h, SuffixCode z) const {
  auto r = row(h, z);
  int best = 0;
  for (int a = 0; a < static_cast<int>(r.size()); ++a) {
    if (std::isnan(r[a])) throw PolicyUndefined(h, space_.decode(h, z).to_string());
    if (r[a] > r[best]) best = a;
  }
  return best;
}

double sup_distance(const QFunction& f, const QFunction& g, int h,
                    std::span<const SuffixCode> suffixes) {
  double d = 0.0;
  for (SuffixCode z : suffixes) {
    auto a = f.row(h, z);
    auto b = g.row(h, z);
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double diff = std::abs(a[i] - b[i]);
      d = std::isnan(diff) ? std::numeric_limits<double>::infinity() : std::max(d, diff);
    }
  }
  return d;
}

int GreedyPolicy::action(const HistoryView& history) const {
  const SuffixCode z =
      f_.space().encode_history(history.step, history.observations, history.actions);
  return f_.greedy_action(history.step, z);
}

void GreedyPolicy::distribution(const HistoryView& history, std::span<double> out) const {
  std::fill(out.begin(), out.end(), 0.0);
  out[action(history)] = 1.0;
}

}  // namespace mstep
