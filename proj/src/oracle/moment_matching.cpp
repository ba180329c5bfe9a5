#include "mstep/oracle/moment_matching.hpp"

#include "mstep/core/errors.hpp"
#include "mstep/oracle/trajectory_tree.hpp"

namespace mstep {

SuffixCode window_code(std::span<const int> observations, std::span<const int> actions, int from,
                       int to, int observation_count, int action_count) {
  SuffixCode code = static_cast<SuffixCode>(observations[from - 1]);
  for (int t = from + 1; t <= to; ++t) {
    code = (code * action_count + static_cast<SuffixCode>(actions[t - 2])) * observation_count +
           static_cast<SuffixCode>(observations[t - 1]);
  }
  return code;
}

MomentMatchingPolicy::MomentMatchingPolicy(const ModelOracle& oracle, const Policy& target, int h)
    : oracle_(&oracle),
      step_(h),
      start_(oracle.window_start(h)),
      action_count_(oracle.model().action_count) {
  const Pomdp& model = oracle.model();
  if (h < 1 || h > model.horizon) throw ModelError("moment matching step out of range");
  if (target.action_count() != action_count_) {
    throw ModelError("target policy action count does not match the model");
  }
  const int A = action_count_;
  tables_.resize(h - start_ + 1);
  TrajectoryTree tree(model, target, start_);
  tree.advance_to(start_);
  std::vector<double> probs(A);
  for (int hp = start_;; ++hp) {
    std::map<std::pair<std::vector<int>, SuffixCode>, double> mass;
    auto& table = tables_[hp - start_];
    for (const auto& node : tree.nodes()) {
      const SuffixCode w = window_code(node.observations, node.actions, start_, hp,
                                       model.observation_count, A);
      std::pair<std::vector<int>, SuffixCode> key{node.states, w};
      target.distribution(node.view(), probs);
      auto& acc = table[key];
      acc.resize(A, 0.0);
      for (int a = 0; a < A; ++a) acc[a] += node.probability * probs[a];
      mass[key] += node.probability;
    }
    for (auto& [key, acc] : table) {
      const double p = mass[key];
      for (double& v : acc) v /= p;
    }
    if (hp == h) break;
    tree.advance();
  }
}

std::span<const double> MomentMatchingPolicy::conditional(int hp, const std::vector<int>& states,
                                                          SuffixCode window) const {
  if (hp < start_ || hp > step_) return {};
  const auto& table = tables_[hp - start_];
  auto it = table.find({states, window});
  if (it == table.end()) return {};
  return it->second;
}

void MomentMatchingPolicy::distribution(const HistoryView& history, std::span<double> out) const {
  const int hp = history.step;
  auto uniform = [&] {
    ++fallbacks_;
    std::fill(out.begin(), out.end(), 1.0 / action_count_);
  };
  if (hp > step_) {
    std::fill(out.begin(), out.end(), 1.0 / action_count_);
    return;
  }
  if (hp < start_) return uniform();
  std::vector<int> states;
  for (int t = start_; t <= hp; ++t) {
    const SuffixCode z = oracle_->space().encode_history(t, history.observations, history.actions);
    auto s = oracle_->decoder().lookup(t, z);
    if (!s) return uniform();
    states.push_back(*s);
  }
  const SuffixCode w = window_code(history.observations, history.actions, start_, hp,
                                   oracle_->model().observation_count, action_count_);
  auto mu = conditional(hp, states, w);
  if (mu.empty()) return uniform();
  std::copy(mu.begin(), mu.end(), out.begin());
}

std::size_t MomentMatchingPolicy::block_count() const {
  std::size_t n = 0;
  for (const auto& t : tables_) n += t.size();
  return n;
}

double Factorization::value() const {
  double v = 0.0;
  for (std::size_t s = 0; s < zeta.size(); ++s) v += zeta[s] * xi[s];
  return v;
}

Factorization factorize(const ModelOracle& oracle, const Policy& rollin,
                        const MomentMatchingPolicy& mu,
                        const std::function<double(SuffixCode)>& g) {
  const Pomdp& model = oracle.model();
  const int S = model.state_count, O = model.observation_count, A = model.action_count;
  const int start = mu.start(), h = mu.target_step();
  Factorization out;
  out.zeta.assign(S, 0.0);
  out.xi.assign(S, 0.0);

  TrajectoryTree tree(model, rollin);
  tree.advance_to(start);
  for (const auto& node : tree.nodes()) out.zeta[node.state()] += node.probability;

  struct Block {
    std::vector<int> states;
    std::vector<int> observations;  // o_start..o_t
    std::vector<int> actions;
    double probability;
  };
  const std::vector<double> uniform(A, 1.0 / A);
  for (int s0 = 0; s0 < S; ++s0) {
    std::vector<Block> blocks;
    auto em0 = model.emission(start, s0);
    for (int o = 0; o < O; ++o)
      if (em0[o] > 0.0) blocks.push_back({{s0}, {o}, {}, em0[o]});
    for (int t = start; t < h; ++t) {
      std::vector<Block> next;
      for (const auto& b : blocks) {
        const SuffixCode w = window_code(b.observations, b.actions, 1, t - start + 1, O, A);
        auto pa = mu.conditional(t, b.states, w);
        if (pa.empty()) pa = uniform;
        for (int a = 0; a < A; ++a) {
          if (pa[a] <= 0.0) continue;
          auto tr = model.transition(t, b.states.back(), a);
          for (int s2 = 0; s2 < S; ++s2) {
            if (tr[s2] <= 0.0) continue;
            auto em = model.emission(t + 1, s2);
            for (int o = 0; o < O; ++o) {
              if (em[o] <= 0.0) continue;
              Block nb = b;
              nb.states.push_back(s2);
              nb.observations.push_back(o);
              nb.actions.push_back(a);
              nb.probability *= pa[a] * tr[s2] * em[o];
              next.push_back(std::move(nb));
            }
          }
        }
      }
      blocks = std::move(next);
    }
    double xi = 0.0;
    for (const auto& b : blocks) {
      xi += b.probability * g(window_code(b.observations, b.actions, 1, h - start + 1, O, A));
    }
    out.xi[s0] = xi;
  }
  return out;
}

}  // namespace mstep
