#include "mstep/core/decodability.hpp"

#include <algorithm>
#include <map>

#include "mstep/core/errors.hpp"

namespace mstep {

std::vector<std::set<std::pair<int, SuffixCode>>> reachable_state_suffix_pairs(const Pomdp& pomdp,
                                                                              int m) {
  if (m < 1) throw ModelError("memory length must be positive");
  const int H = pomdp.horizon;
  const SuffixSpace space(H, std::min(m, H), pomdp.observation_count, pomdp.action_count);
  double estimate = 0.0;
  for (int h = 1; h <= H; ++h) estimate += static_cast<double>(pomdp.state_count) * space.size(h);
  const auto cap = oracle_cap();
  if (estimate > static_cast<double>(cap)) {
    throw CapExceeded("verify_decodability", estimate, cap);
  }

  std::vector<std::set<std::pair<int, SuffixCode>>> layers(H);
  for (int s = 0; s < pomdp.state_count; ++s) {
    if (pomdp.initial[s] <= 0.0) continue;
    auto em = pomdp.emission(1, s);
    for (int o = 0; o < pomdp.observation_count; ++o)
      if (em[o] > 0.0) layers[0].insert({s, static_cast<SuffixCode>(o)});
  }
  for (int h = 1; h < H; ++h) {
    for (const auto& [s, z] : layers[h - 1]) {
      for (int a = 0; a < pomdp.action_count; ++a) {
        auto tr = pomdp.transition(h, s, a);
        for (int s2 = 0; s2 < pomdp.state_count; ++s2) {
          if (tr[s2] <= 0.0) continue;
          auto em = pomdp.emission(h + 1, s2);
          for (int o = 0; o < pomdp.observation_count; ++o)
            if (em[o] > 0.0) layers[h].insert({s2, space.shift(h, z, a, o)});
        }
      }
    }
  }
  return layers;
}

DecodabilityResult verify_decodability(const Pomdp& pomdp, int m) {
  const int H = pomdp.horizon;
  const int mm = std::min(m, H);
  const SuffixSpace space(H, mm, pomdp.observation_count, pomdp.action_count);
  const auto layers = reachable_state_suffix_pairs(pomdp, m);

  DecodabilityResult result;
  Decoder decoder;
  decoder.memory = mm;
  decoder.states.resize(H);
  for (int h = 1; h <= H; ++h) {
    std::map<SuffixCode, int> owner;
    for (const auto& [s, z] : layers[h - 1]) {
      auto [it, inserted] = owner.emplace(z, s);
      if (!inserted && it->second != s) {
        result.decodable = false;
        result.witness = space.decode(h, z);
        result.witness_states = {it->second, s};
        return result;
      }
    }
    decoder.states[h - 1] = std::move(owner);
  }
  result.decodable = true;
  result.decoder = std::move(decoder);
  return result;
}

std::vector<std::vector<int>> reachable_states(const Pomdp& pomdp) {
  const int H = pomdp.horizon, S = pomdp.state_count;
  std::vector<std::vector<char>> live(H, std::vector<char>(S, 0));
  for (int s = 0; s < S; ++s) live[0][s] = pomdp.initial[s] > 0.0;
  for (int h = 1; h < H; ++h)
    for (int s = 0; s < S; ++s) {
      if (!live[h - 1][s]) continue;
      for (int a = 0; a < pomdp.action_count; ++a) {
        auto tr = pomdp.transition(h, s, a);
        for (int s2 = 0; s2 < S; ++s2)
          if (tr[s2] > 0.0) live[h][s2] = 1;
      }
    }
  std::vector<std::vector<int>> out(H);
  for (int h = 0; h < H; ++h)
    for (int s = 0; s < S; ++s)
      if (live[h][s]) out[h].push_back(s);
  return out;
}

double max_reachable_return(const Pomdp& pomdp) {
  const int H = pomdp.horizon, S = pomdp.state_count;
  constexpr double kNone = -1.0;
  std::vector<double> next(S, 0.0), best(S, kNone);
  for (int h = H; h >= 1; --h) {
    for (int s = 0; s < S; ++s) {
      double r = kNone;
      auto em = pomdp.emission(h, s);
      for (int o = 0; o < pomdp.observation_count; ++o)
        if (em[o] > 0.0) r = std::max(r, pomdp.reward(h, o));
      double future = 0.0;
      if (h < H) {
        future = kNone;
        for (int a = 0; a < pomdp.action_count; ++a) {
          auto tr = pomdp.transition(h, s, a);
          for (int s2 = 0; s2 < S; ++s2)
            if (tr[s2] > 0.0) future = std::max(future, next[s2]);
        }
      }
      best[s] = (r < 0.0 || future < 0.0) ? kNone : r + future;
    }
    next = best;
  }
  double total = 0.0;
  for (int s = 0; s < S; ++s)
    if (pomdp.initial[s] > 0.0) total = std::max(total, next[s]);
  return total;
}

}  // namespace mstep
