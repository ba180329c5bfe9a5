#include "mstep/core/policy.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "mstep/core/errors.hpp"

namespace mstep {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_action_vector(std::span<const double> probs, int action_count) {
  if (static_cast<int>(probs.size()) != action_count) {
    throw ModelError("action distribution has the wrong length");
  }
  double total = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0)) throw ModelError("action distribution has a negative entry");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-12) throw ModelError("action distribution does not sum to 1");
}

}  // namespace

std::string HistoryView::to_string() const {
  std::ostringstream os;
  os << "(";
  for (int t = 1; t <= step; ++t) {
    if (t > 1) os << ", a" << actions[t - 2] << ", ";
    os << "o" << observations[t - 1];
  }
  os << ")";
  return os.str();
}

int Policy::sample(const HistoryView& history, Rng& rng) const {
  std::vector<double> probs(action_count());
  distribution(history, probs);
  return rng.categorical(probs);
}

void UniformPolicy::distribution(const HistoryView&, std::span<double> out) const {
  std::fill(out.begin(), out.end(), 1.0 / action_count_);
}

SuffixPolicy::SuffixPolicy(SuffixSpace space) : space_(std::move(space)) {
  for (int h = 1; h <= space_.horizon(); ++h) {
    tables_.emplace_back(space_.size(h) * space_.action_count(), kNaN);
  }
}

SuffixPolicy SuffixPolicy::uniform(SuffixSpace space) {
  SuffixPolicy p(std::move(space));
  for (auto& t : p.tables_) std::fill(t.begin(), t.end(), 1.0 / p.action_count());
  return p;
}

SuffixPolicy SuffixPolicy::constant(SuffixSpace space, int action) {
  SuffixPolicy p(std::move(space));
  const int A = p.action_count();
  if (action < 0 || action >= A) throw ModelError("constant policy action out of range");
  for (auto& t : p.tables_)
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<int>(i % A) == action ? 1.0 : 0.0;
  return p;
}

SuffixPolicy SuffixPolicy::deterministic(SuffixSpace space,
                                         const std::vector<std::vector<int>>& actions) {
  SuffixPolicy p(std::move(space));
  if (static_cast<int>(actions.size()) != p.space_.horizon()) {
    throw ModelError("deterministic policy table has the wrong number of steps");
  }
  for (int h = 1; h <= p.space_.horizon(); ++h) {
    const auto& row = actions[h - 1];
    if (row.size() != p.space_.size(h)) throw ModelError("deterministic policy layer size mismatch");
    for (SuffixCode z = 0; z < row.size(); ++z) {
      if (row[z] >= 0) p.set_action(h, z, row[z]);
    }
  }
  return p;
}

SuffixPolicy SuffixPolicy::random_deterministic(SuffixSpace space, Rng& rng) {
  SuffixPolicy p(std::move(space));
  for (int h = 1; h <= p.space_.horizon(); ++h)
    for (SuffixCode z = 0; z < p.space_.size(h); ++z)
      p.set_action(h, z, rng.uniform_int(p.action_count()));
  return p;
}

void SuffixPolicy::distribution(const HistoryView& history, std::span<double> out) const {
  const SuffixCode z =
      space_.encode_history(history.step, history.observations, history.actions);
  auto r = row(history.step, z);
  if (std::isnan(r[0])) throw PolicyUndefined(history.step, history.to_string());
  std::copy(r.begin(), r.end(), out.begin());
}

void SuffixPolicy::set(int h, SuffixCode z, std::span<const double> probs) {
  check_action_vector(probs, action_count());
  std::copy(probs.begin(), probs.end(), tables_.at(h - 1).begin() + z * action_count());
}

void SuffixPolicy::set_action(int h, SuffixCode z, int action) {
  const int A = action_count();
  if (action < 0 || action >= A) throw ModelError("policy action out of range");
  auto it = tables_.at(h - 1).begin() + z * A;
  for (int a = 0; a < A; ++a) it[a] = a == action ? 1.0 : 0.0;
}

bool SuffixPolicy::defined(int h, SuffixCode z) const { return !std::isnan(row(h, z)[0]); }

std::span<const double> SuffixPolicy::row(int h, SuffixCode z) const {
  const auto& t = tables_.at(h - 1);
  const std::size_t A = action_count();
  if ((z + 1) * A > t.size()) throw ModelError("suffix code out of range");
  return {t.data() + z * A, A};
}

bool SuffixPolicy::is_deterministic() const {
  for (const auto& t : tables_)
    for (double p : t)
      if (!std::isnan(p) && p != 0.0 && p != 1.0) return false;
  return true;
}

HistoryPolicy::HistoryPolicy(int horizon, int observation_count, int action_count)
    : histories_(horizon, horizon, observation_count, action_count), tables_(horizon) {}

void HistoryPolicy::distribution(const HistoryView& history, std::span<double> out) const {
  const auto& layer = tables_.at(history.step - 1);
  auto it = layer.find(
      histories_.encode_history(history.step, history.observations, history.actions));
  if (it == layer.end()) throw PolicyUndefined(history.step, history.to_string());
  std::copy(it->second.begin(), it->second.end(), out.begin());
}

void HistoryPolicy::set(const HistoryView& history, std::span<const double> probs) {
  check_action_vector(probs, action_count());
  tables_.at(history.step - 1)[histories_.encode_history(history.step, history.observations,
                                                         history.actions)] =
      std::vector<double>(probs.begin(), probs.end());
}

std::size_t HistoryPolicy::size() const {
  std::size_t n = 0;
  for (const auto& t : tables_) n += t.size();
  return n;
}

ComposedPolicy::ComposedPolicy(PolicyPtr prefix, PolicyPtr suffix, int switch_step)
    : prefix_(std::move(prefix)), suffix_(std::move(suffix)), switch_step_(switch_step) {
  if (!prefix_ || !suffix_) throw ModelError("composition of a null policy");
  if (prefix_->action_count() != suffix_->action_count()) {
    throw ModelError("composed policies disagree on the action count");
  }
  if (switch_step_ < 1) throw ModelError("switch step must be at least 1");
}

void ComposedPolicy::distribution(const HistoryView& history, std::span<double> out) const {
  if (history.step < switch_step_) {
    prefix_->distribution(history, out);
  } else {
    suffix_->distribution(history, out);
  }
}

std::shared_ptr<ComposedPolicy> compose(PolicyPtr prefix, PolicyPtr suffix, int switch_step) {
  return std::make_shared<ComposedPolicy>(std::move(prefix), std::move(suffix), switch_step);
}

MixturePolicy::MixturePolicy(std::vector<PolicyPtr> components, std::vector<double> weights)
    : components_(std::move(components)), weights_(std::move(weights)) {
  if (components_.empty() || components_.size() != weights_.size()) {
    throw ModelError("mixture needs one weight per component");
  }
  for (const auto& c : components_) {
    if (!c || c->action_count() != components_.front()->action_count()) {
      throw ModelError("mixture components disagree on the action count");
    }
  }
  check_action_vector(weights_, static_cast<int>(weights_.size()));
}

MixturePolicy MixturePolicy::uniform(std::vector<PolicyPtr> components) {
  std::vector<double> w(components.size(), 1.0 / static_cast<double>(components.size()));
  return MixturePolicy(std::move(components), std::move(w));
}

void MixturePolicy::distribution(const HistoryView& history, std::span<double> out) const {
  const int A = action_count();
  std::vector<double> posterior(weights_);
  std::vector<double> probs(A);
  for (std::size_t k = 0; k < components_.size(); ++k) {
    for (int t = 1; t < history.step && posterior[k] > 0.0; ++t) {
      HistoryView prefix{t, history.observations.first(t), history.actions.first(t - 1)};
      components_[k]->distribution(prefix, probs);
      posterior[k] *= probs[history.actions[t - 1]];
    }
  }
  const double total = std::accumulate(posterior.begin(), posterior.end(), 0.0);
  if (!(total > 0.0)) throw PolicyUndefined(history.step, history.to_string());
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t k = 0; k < components_.size(); ++k) {
    if (posterior[k] == 0.0) continue;
    components_[k]->distribution(history, probs);
    for (int a = 0; a < A; ++a) out[a] += posterior[k] / total * probs[a];
  }
}

}  // namespace mstep
